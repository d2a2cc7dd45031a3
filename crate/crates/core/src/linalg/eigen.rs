//! Symmetric eigen-decomposition for snapshot Gram matrices.
//!
//! All eigenvalues are computed (Householder tridiagonalization followed by
//! implicit QL), but eigenvectors only for the leading `k` eigenvalues, by
//! inverse iteration on the tridiagonal form and back-transformation. POD
//! needs a handful of modes out of thousands of snapshots, so avoiding the
//! cubic eigenvector accumulation matters.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// All eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unit eigenvectors for `values[0..k]`.
    pub vectors: Vec<Vec<f64>>,
}

struct Tridiagonal {
    diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`; `off[n - 1] = 0`.
    off: Vec<f64>,
    /// Householder vectors: reflector `k` acts on indices `k+1..n`.
    reflectors: Vec<(Vec<f64>, f64)>,
}

/// Eigenvalues (all) and leading `k` eigenvectors of the symmetric matrix `a`.
pub fn symmetric_eigen(a: &DenseMatrix, k: usize) -> Result<SymmetricEigen> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::DimensionMismatch {
            context: "symmetric eigen (square input)",
            expected: n,
            found: a.n_cols(),
        });
    }
    if k > n {
        return Err(Error::RankTooLarge {
            requested: k,
            available: n,
        });
    }
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let tri = tridiagonalize(a);
    let mut values = tri.diag.clone();
    let mut off = tri.off.clone();
    ql_eigenvalues(&mut values, &mut off)?;
    values.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));

    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut tri_vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (idx, &lambda) in values.iter().take(k).enumerate() {
        let mut z = inverse_iteration(&tri.diag, &tri.off, lambda, scale, idx);
        // Keep vectors of (nearly) repeated eigenvalues mutually orthogonal.
        for _ in 0..2 {
            for (prev, &lp) in tri_vectors.iter().zip(values.iter()) {
                if (lp - lambda).abs() <= 1e-3 * scale {
                    let d: f64 = prev.iter().zip(&z).map(|(p, q)| p * q).sum();
                    for (zi, pi) in z.iter_mut().zip(prev) {
                        *zi -= d * pi;
                    }
                }
            }
            normalize(&mut z);
        }
        tri_vectors.push(z);
    }
    let vectors = tri_vectors
        .into_iter()
        .map(|z| back_transform(&tri.reflectors, z))
        .collect();
    Ok(SymmetricEigen { values, vectors })
}

fn normalize(v: &mut [f64]) {
    let nrm = libm::sqrt(v.iter().map(|x| x * x).sum());
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
}

/// Householder reduction working on the upper triangle, row by row.
fn tridiagonalize(a: &DenseMatrix) -> Tridiagonal {
    let n = a.n_rows();
    let mut w: Vec<f64> = a.values().to_vec();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![0.0; n];

    for k in 0..n {
        diag[k] = w[k * n + k];
        if k + 1 >= n {
            break;
        }
        let m = n - k - 1;
        let x = &w[k * n + k + 1..(k + 1) * n];
        if m == 1 {
            off[k] = x[0];
            continue;
        }
        let xnorm = libm::sqrt(x.iter().map(|t| t * t).sum());
        if xnorm == 0.0 {
            off[k] = 0.0;
            reflectors.push((vec![0.0; m], 0.0));
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|t| t * t).sum();
        let tau = 2.0 / vv;
        off[k] = alpha;

        // p = tau * B v on the trailing block B (upper storage).
        let base = k + 1;
        let pm = &mut p[..m];
        pm.iter_mut().for_each(|t| *t = 0.0);
        for i in 0..m {
            let row = &w[(base + i) * n + base..(base + i + 1) * n];
            let vi = v[i];
            let mut acc = row[i] * vi;
            for j in i + 1..m {
                acc += row[j] * v[j];
                pm[j] += row[j] * vi;
            }
            pm[i] += acc;
        }
        pm.iter_mut().for_each(|t| *t *= tau);
        let kk: f64 = 0.5 * tau * pm.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        // p <- p - kk v  (this is w in B <- B - v w^T - w v^T)
        for (pi, vi) in pm.iter_mut().zip(&v) {
            *pi -= kk * vi;
        }
        for i in 0..m {
            let (vi, wi) = (v[i], pm[i]);
            let row = &mut w[(base + i) * n + base..(base + i + 1) * n];
            for j in i..m {
                row[j] -= vi * pm[j] + wi * v[j];
            }
        }
        reflectors.push((v, tau));
    }
    Tridiagonal {
        diag,
        off,
        reflectors,
    }
}

/// Implicit QL with Wilkinson-type shifts; eigenvalues only.
fn ql_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    // absolute floor so that clusters of negligible eigenvalues deflate
    let norm = d.iter().map(|v| v.abs()).fold(0.0, f64::max) + 2.0 * e.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let floor = f64::EPSILON * norm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::NonFinite("tridiagonal QL iteration"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("tridiagonal QL iteration"));
    }
    Ok(())
}

/// Eigenvector of the tridiagonal matrix for eigenvalue `lambda`.
fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64, scale: f64, seed: usize) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let tiny = f64::EPSILON * scale;
    // LU with partial pivoting of (T - lambda I); U has bandwidth 2.
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut mult = vec![0.0; n];
    let mut swapped = vec![false; n];
    let mut a = diag[0] - lambda;
    let mut b = off[0];
    let mut c = 0.0;
    for i in 0..n - 1 {
        let sub = off[i];
        let next_diag = diag[i + 1] - lambda;
        let next_off = if i + 2 < n { off[i + 1] } else { 0.0 };
        if a.abs() >= sub.abs() {
            let piv = if a == 0.0 { tiny } else { a };
            let l = sub / piv;
            mult[i] = l;
            u0[i] = piv;
            u1[i] = b;
            u2[i] = c;
            a = next_diag - l * b;
            b = next_off - l * c;
            c = 0.0;
        } else {
            swapped[i] = true;
            let l = a / sub;
            mult[i] = l;
            u0[i] = sub;
            u1[i] = next_diag;
            u2[i] = next_off;
            a = b - l * next_diag;
            b = c - l * next_off;
            c = 0.0;
        }
    }
    u0[n - 1] = if a.abs() < tiny { tiny } else { a };

    // Deterministic, non-degenerate start vector.
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.1 * libm::sin((i as f64 + 1.0) * (seed as f64 + 1.3) * 0.7))
        .collect();
    normalize(&mut x);
    for _ in 0..4 {
        // Forward: apply L^-1 with the recorded row swaps.
        for i in 0..n - 1 {
            if swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= mult[i] * x[i];
        }
        // Back substitution with U.
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= u2[i] * x[i + 2];
            }
            let piv = if u0[i].abs() < tiny { tiny } else { u0[i] };
            x[i] = acc / piv;
        }
        let nrm = libm::sqrt(x.iter().map(|t| t * t).sum());
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        x.iter_mut().for_each(|t| *t /= nrm);
    }
    x
}

fn back_transform(reflectors: &[(Vec<f64>, f64)], mut z: Vec<f64>) -> Vec<f64> {
    for (k, (v, tau)) in reflectors.iter().enumerate().rev() {
        if *tau == 0.0 {
            continue;
        }
        let tail = &mut z[k + 1..];
        let d: f64 = tail.iter().zip(v).map(|(a, b)| a * b).sum();
        let s = tau * d;
        for (t, vi) in tail.iter_mut().zip(v) {
            *t -= s * vi;
        }
    }
    z
}
