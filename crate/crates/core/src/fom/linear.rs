//! Preconditioned BiCGSTAB.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, SparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolve {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `||b - Ax|| / ||b||`.
    pub residual: f64,
}

/// Symmetric Gauss-Seidel preconditioner `M = (D + L) D^-1 (D + U)`.
struct SymmetricGaussSeidel<'a> {
    a: &'a SparseMatrix,
    diag: Vec<f64>,
}

impl<'a> SymmetricGaussSeidel<'a> {
    fn new(a: &'a SparseMatrix) -> Result<Self> {
        let diag = a.diagonal();
        if let Some(i) = diag.iter().position(|&d| d == 0.0) {
            return Err(Error::ZeroDiagonal(i));
        }
        Ok(Self { a, diag })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let offs = self.a.row_offsets();
        let cols = self.a.col_indices();
        let vals = self.a.values();
        // forward: (D + L) y = r
        for i in 0..n {
            let mut s = r[i];
            for k in offs[i]..offs[i + 1] {
                let j = cols[k];
                if j < i {
                    s -= vals[k] * z[j];
                }
            }
            z[i] = s / self.diag[i];
        }
        // backward: (D + U) z = D y
        for i in (0..n).rev() {
            let mut s = self.diag[i] * z[i];
            for k in offs[i]..offs[i + 1] {
                let j = cols[k];
                if j > i {
                    s -= vals[k] * z[j];
                }
            }
            z[i] = s / self.diag[i];
        }
    }
}

/// Solves `A x = b` to relative residual `tol`, starting from `x0`.
///
/// A breakdown restarts the iteration once from the current iterate; a
/// second breakdown is an error, as is reaching `max_iter`.
pub fn solve_linear(a: &SparseMatrix, b: &[f64], x0: &[f64], tol: f64, max_iter: usize) -> Result<LinearSolve> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_linear: matrix must be square",
            expected: n,
            found: a.n_cols(),
        });
    }
    for (context, len) in [("solve_linear: rhs", b.len()), ("solve_linear: initial guess", x0.len())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                found: len,
            });
        }
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("solver tolerance must be positive".into()));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(LinearSolve {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let pre = SymmetricGaussSeidel::new(a)?;
    let mut x = x0.to_vec();
    let mut iterations = 0;
    let mut restarted = false;
    loop {
        match bicgstab(a, &pre, b, b_norm, &mut x, tol, max_iter, &mut iterations)? {
            Outcome::Converged(residual) => {
                return Ok(LinearSolve {
                    x,
                    iterations,
                    residual,
                })
            }
            Outcome::Restart => {}
            Outcome::Breakdown if !restarted => restarted = true,
            Outcome::Breakdown => return Err(Error::SolverBreakdown { iterations }),
        }
    }
}

enum Outcome {
    Converged(f64),
    Breakdown,
    Restart,
}

#[allow(clippy::too_many_arguments)]
fn bicgstab(
    a: &SparseMatrix,
    pre: &SymmetricGaussSeidel<'_>,
    b: &[f64],
    b_norm: f64,
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    iterations: &mut usize,
) -> Result<Outcome> {
    let n = b.len();
    let mut r = a.spmv(x)?;
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = norm2(&r) / b_norm;
    if res <= tol {
        return Ok(Outcome::Converged(res));
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    while *iterations < max_iter {
        *iterations += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return Ok(Outcome::Breakdown);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut p_hat);
        a.spmv_into(&p_hat, &mut v)?;
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            return Ok(Outcome::Breakdown);
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let s_res = norm2(&s) / b_norm;
        if s_res <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(Outcome::Converged(true_residual(a, b, b_norm, x)?));
        }
        pre.apply(&s, &mut s_hat);
        a.spmv_into(&s_hat, &mut t)?;
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Ok(Outcome::Breakdown);
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r) / b_norm;
        if !res.is_finite() {
            return Err(Error::NonFinite("BiCGSTAB residual"));
        }
        if res <= tol {
            let check = true_residual(a, b, b_norm, x)?;
            if check <= tol {
                return Ok(Outcome::Converged(check));
            }
            // recurrence drifted; continue from the true residual
            return Ok(Outcome::Restart);
        }
        if omega == 0.0 {
            return Ok(Outcome::Breakdown);
        }
    }
    Err(Error::NotConverged {
        iterations: *iterations,
        residual: res,
    })
}

fn true_residual(a: &SparseMatrix, b: &[f64], b_norm: f64, x: &[f64]) -> Result<f64> {
    let ax = a.spmv(x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    Ok(norm2(&r) / b_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_5pt(nx: usize, ny: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                t.push((c, c, 4.0));
                if i > 0 { t.push((c, c - 1, -1.0)) }
                if i + 1 < nx { t.push((c, c + 1, -1.0)) }
                if j > 0 { t.push((c, c - nx, -1.0)) }
                if j + 1 < ny { t.push((c, c + nx, -1.0)) }
            }
        }
        SparseMatrix::from_triplets(nx * ny, nx * ny, &t).unwrap()
    }

    #[test]
    fn identity_is_one_iteration() {
        let a = SparseMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        let sol = solve_linear(&a, &b, &[0.0; 5], 1e-12, 10).unwrap();
        assert!(sol.iterations <= 1);
        assert_eq!(sol.x, b);
    }

    #[test]
    fn laplacian_matches_dense_solve() {
        let a = laplacian_5pt(10, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sol = solve_linear(&a, &b, &[0.0; 100], 1e-10, 500).unwrap();
        let d = a.to_dense();
        let m = DMatrix::from_row_slice(100, 100, d.values());
        let oracle = m.lu().solve(&DVector::from_vec(b)).unwrap();
        let err: f64 = sol.x.iter().zip(oracle.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err / oracle.norm() <= 1e-6);
    }

    #[test]
    fn reported_residual_honours_tolerance() {
        let a = laplacian_5pt(30, 20);
        let b: Vec<f64> = (0..600).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let sol = solve_linear(&a, &b, &[0.0; 600], 1e-8, 1000).unwrap();
        assert!(sol.residual <= 1e-8);
        assert!(true_residual(&a, &b, norm2(&b), &sol.x).unwrap() <= 1e-8);
    }

    #[test]
    fn nonsymmetric_system() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i > 0 { t.push((i, i - 1, -1.8)) }
            if i + 1 < n { t.push((i, i + 1, -0.7)) }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let b = vec![1.0; n];
        let sol = solve_linear(&a, &b, &vec![0.0; n], 1e-12, 200).unwrap();
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn errors() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(solve_linear(&a, &[1.0, 1.0], &[0.0; 2], 1e-8, 10), Err(Error::ZeroDiagonal(0))));
        let a = laplacian_5pt(20, 20);
        let b = vec![1.0; 400];
        assert!(matches!(solve_linear(&a, &b, &[0.0; 400], 1e-14, 2), Err(Error::NotConverged { .. })));
        let zero = solve_linear(&a, &[0.0; 400], &[1.0; 400], 1e-8, 2).unwrap();
        assert!(zero.x.iter().all(|&v| v == 0.0));
    }
}
