//! Greedy discrete empirical interpolation point selection.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

fn argmax_abs(v: &[f64], exclude: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in v.iter().enumerate() {
        if exclude.contains(&i) {
            continue;
        }
        let a = x.abs();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best.map(|(i, _)| i)
}

/// Solves the small dense system `m x = r` by Gaussian elimination with
/// partial pivoting. `m` is row-major `k x k`.
fn solve_small(mut m: Vec<f64>, mut r: Vec<f64>, k: usize) -> Option<Vec<f64>> {
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a * k + col].abs().total_cmp(&m[b * k + col].abs()))?;
        if m[piv * k + col] == 0.0 {
            return None;
        }
        if piv != col {
            for j in 0..k {
                m.swap(piv * k + j, col * k + j);
            }
            r.swap(piv, col);
        }
        for row in col + 1..k {
            let f = m[row * k + col] / m[col * k + col];
            for j in col..k {
                m[row * k + j] -= f * m[col * k + j];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut s = r[row];
        for j in row + 1..k {
            s -= m[row * k + j] * x[j];
        }
        x[row] = s / m[row * k + row];
    }
    Some(x)
}

/// Selects `s` interpolation indices for the basis `phi` (`N_h x N_r`).
///
/// The first `min(s, N_r)` indices come from the classical greedy
/// procedure; any further ones are the rows with the largest leverage score
/// `||phi[i, :]||` among those not yet chosen (ties go to the lower index).
pub fn deim_select(phi: &DenseMatrix, s: usize) -> Result<Vec<usize>> {
    let (nh, nr) = (phi.n_rows(), phi.n_cols());
    if s == 0 || s > nh || nr == 0 {
        return Err(Error::InvalidArgument(alloc::format!(
            "cannot select {s} points from a {nh} x {nr} basis"
        )));
    }
    let greedy = s.min(nr);
    let mut chosen: Vec<usize> = Vec::with_capacity(s);
    let first = phi.column(0);
    chosen.push(argmax_abs(&first, &[]).expect("non-empty basis"));
    for k in 1..greedy {
        // interpolate column k from the first k columns at the chosen rows
        let m: Vec<f64> = chosen
            .iter()
            .flat_map(|&i| (0..k).map(move |j| phi.get(i, j)))
            .collect();
        let rhs: Vec<f64> = chosen.iter().map(|&i| phi.get(i, k)).collect();
        let c = solve_small(m, rhs, k).ok_or(Error::SingularInterpolation(k))?;
        let residual: Vec<f64> = (0..nh)
            .map(|i| {
                let row = phi.row(i);
                row[k] - (0..k).map(|j| row[j] * c[j]).sum::<f64>()
            })
            .collect();
        let next = argmax_abs(&residual, &[]).expect("non-empty basis");
        if chosen.contains(&next) {
            return Err(Error::SingularInterpolation(k));
        }
        chosen.push(next);
    }
    if s > greedy {
        let mut rest: Vec<(usize, f64)> = (0..nh)
            .filter(|i| !chosen.contains(i))
            .map(|i| (i, phi.row(i).iter().map(|v| v * v).sum::<f64>()))
            .collect();
        rest.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        chosen.extend(rest.iter().take(s - greedy).map(|&(i, _)| i));
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Reference greedy DEIM with explicit Gauss-Jordan inversion.
    pub(crate) fn brute_force_deim(phi: &DenseMatrix, m: usize) -> Vec<usize> {
        let nh = phi.n_rows();
        let mut p: Vec<usize> = Vec::new();
        for k in 0..m {
            let mut r: Vec<f64> = (0..nh).map(|i| phi.get(i, k)).collect();
            if k > 0 {
                // inverse of P^T U by Gauss-Jordan
                let mut aug = vec![vec![0.0; 2 * k]; k];
                for (a, &pi) in p.iter().enumerate() {
                    for j in 0..k {
                        aug[a][j] = phi.get(pi, j);
                    }
                    aug[a][k + a] = 1.0;
                }
                for col in 0..k {
                    let mut piv = col;
                    for row in col..k {
                        if aug[row][col].abs() > aug[piv][col].abs() {
                            piv = row;
                        }
                    }
                    aug.swap(col, piv);
                    let d = aug[col][col];
                    for j in 0..2 * k {
                        aug[col][j] /= d;
                    }
                    for row in 0..k {
                        if row != col {
                            let f = aug[row][col];
                            for j in 0..2 * k {
                                aug[row][j] -= f * aug[col][j];
                            }
                        }
                    }
                }
                let rhs: Vec<f64> = p.iter().map(|&pi| phi.get(pi, k)).collect();
                let c: Vec<f64> = (0..k).map(|a| (0..k).map(|b| aug[a][k + b] * rhs[b]).sum()).collect();
                for i in 0..nh {
                    r[i] -= (0..k).map(|j| phi.get(i, j) * c[j]).sum::<f64>();
                }
            }
            let mut best = 0;
            for i in 0..nh {
                if r[i].abs() > r[best].abs() {
                    best = i;
                }
            }
            p.push(best);
        }
        p
    }

    fn random_orthonormal(rng: &mut ChaCha8Rng, nh: usize, nr: usize) -> DenseMatrix {
        let a = DMatrix::from_fn(nh, nr, |_, _| rng.random_range(-1.0..1.0));
        let q = a.qr().q();
        DenseMatrix::from_fn(nh, nr, |i, j| q[(i, j)])
    }

    #[test]
    fn canonical_direction() {
        let phi = DenseMatrix::from_fn(6, 1, |i, _| if i == 3 { 1.0 } else { 0.0 });
        assert_eq!(deim_select(&phi, 1).unwrap(), vec![3]);
    }

    #[test]
    fn matches_reference_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let phi = random_orthonormal(&mut rng, 8, 3);
        assert_eq!(deim_select(&phi, 3).unwrap(), brute_force_deim(&phi, 3));
    }

    #[test]
    fn oversampling_uses_leverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = random_orthonormal(&mut rng, 20, 2);
        let idx = deim_select(&phi, 7).unwrap();
        assert_eq!(idx.len(), 7);
        assert_eq!(&idx[..2], &brute_force_deim(&phi, 2)[..]);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 7);
        let lev = |i: usize| phi.row(i).iter().map(|v| v * v).sum::<f64>();
        for w in idx[2..].windows(2) {
            assert!(lev(w[0]) >= lev(w[1]));
        }
        assert!(deim_select(&phi, 21).is_err());
    }

    #[test]
    fn column_sign_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let phi = random_orthonormal(&mut rng, 15, 4);
        let flipped = DenseMatrix::from_fn(15, 4, |i, j| if j % 2 == 1 { -phi.get(i, j) } else { phi.get(i, j) });
        assert_eq!(deim_select(&phi, 9).unwrap(), deim_select(&flipped, 9).unwrap());
    }
}
