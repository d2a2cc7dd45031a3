//! Householder QR with column pivoting for small dense least-squares problems.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Pivot ratio `|R_kk| / |R_00|` below which a column counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub x: Vec<f64>,
    /// `||A x - b||_2` at the minimizer.
    pub residual_norm: f64,
}

/// Minimizes `||A x - b||_2` for `A` with at least as many rows as columns.
///
/// Fails with [`Error::RankDeficient`] when a pivot falls below
/// [`RANK_TOLERANCE`] relative to the first one; the error carries the number
/// of columns accepted before that point.
pub fn lstsq_pivoted(a: &DenseMatrix, b: &[f64]) -> Result<LeastSquares> {
    let (m, n) = (a.n_rows(), a.n_cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            context: "least-squares right-hand side",
            expected: m,
            found: b.len(),
        });
    }
    if m < n {
        return Err(Error::RankDeficient { rank: m, required: n });
    }
    if n == 0 {
        return Ok(LeastSquares {
            x: Vec::new(),
            residual_norm: libm::sqrt(b.iter().map(|v| v * v).sum()),
        });
    }

    // Column-major working copy: column j occupies r[j*m..(j+1)*m].
    let mut r = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            r[j * m + i] = a.get(i, j);
        }
    }
    let mut qtb = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut first_pivot = 0.0;

    for k in 0..n {
        // Pivot on the largest trailing column norm (recomputed, matrices are small).
        let (mut best, mut best_norm) = (k, -1.0);
        for j in k..n {
            let col = &r[j * m + k..(j + 1) * m];
            let nrm: f64 = col.iter().map(|v| v * v).sum();
            if nrm > best_norm {
                best_norm = nrm;
                best = j;
            }
        }
        if best != k {
            for i in 0..m {
                r.swap(k * m + i, best * m + i);
            }
            perm.swap(k, best);
        }

        let alpha = libm::sqrt(best_norm.max(0.0));
        if k == 0 {
            first_pivot = alpha;
        }
        if alpha == 0.0 || alpha < RANK_TOLERANCE * first_pivot {
            return Err(Error::RankDeficient { rank: k, required: n });
        }

        let x0 = r[k * m + k];
        let diag = if x0 >= 0.0 { -alpha } else { alpha };
        // v = x - diag*e1, stored in place of column k below the diagonal.
        let mut v: Vec<f64> = r[k * m + k..(k + 1) * m].to_vec();
        v[0] -= diag;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            let beta = 2.0 / vnorm2;
            for j in k + 1..n {
                let col = &mut r[j * m + k..(j + 1) * m];
                let dot: f64 = col.iter().zip(&v).map(|(c, vi)| c * vi).sum();
                let s = beta * dot;
                for (c, vi) in col.iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            let tail = &mut qtb[k..];
            let dot: f64 = tail.iter().zip(&v).map(|(c, vi)| c * vi).sum();
            let s = beta * dot;
            for (c, vi) in tail.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        r[k * m + k] = diag;
        for i in k + 1..m {
            r[k * m + i] = 0.0;
        }
    }

    let mut y = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = qtb[k];
        for j in k + 1..n {
            acc -= r[j * m + k] * y[j];
        }
        y[k] = acc / r[k * m + k];
    }
    let mut x = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = y[k];
    }
    let residual_norm = libm::sqrt(qtb[n..].iter().map(|v| v * v).sum());
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pivoted QR least squares"));
    }
    Ok(LeastSquares { x, residual_norm })
}
