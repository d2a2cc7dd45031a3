//! Online stage: masked volume-weighted assembly, reduced least-squares
//! solves and local reconstruction.

pub mod march;
pub mod simple;

pub use march::{hrom_march_burgers, hrom_march_transport, HromRun, OnlineSetup};
pub use simple::{hrom_simple_march, HromNsRun, NsOnlineSetup};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fv::{LinearSystem, LocalField};
use crate::linalg::{lstsq_pivoted, DenseMatrix, LeastSquares, SparseMatrix};
use crate::metrics::OpCounts;
use crate::mesh::Mesh;

/// Masked, weighted reduced operator `A^r` (`s x N_r`) and right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub ar: DenseMatrix,
    pub br: Vec<f64>,
    /// Multiply-adds spent building `ar`.
    pub madds: u64,
}

/// Builds `A^r[k, :] = sqrt(1/V_k) * row_k(A) Phi` and `b^r_k = sqrt(1/V_k) b_k`
/// for every stored row of `a_rows`, where `V_k` is the volume of the cell of
/// the `k`-th sampled row.
pub fn hyper_assemble(a_rows: &SparseMatrix, b: &[f64], volumes: &[f64], phi: &DenseMatrix) -> Result<ReducedSystem> {
    let s = a_rows.n_rows();
    for (context, len) in [("hyper_assemble rhs", b.len()), ("hyper_assemble volumes", volumes.len())] {
        if len != s {
            return Err(Error::DimensionMismatch {
                context,
                expected: s,
                found: len,
            });
        }
    }
    let nr = phi.n_cols();
    let mut ar = DenseMatrix::zeros(s, nr);
    let mut br = vec![0.0; s];
    let mut madds = 0;
    for k in 0..s {
        let v = volumes[k];
        if !(v > 0.0) {
            return Err(Error::NonPositiveVolume { cell: k, volume: v });
        }
        let w = libm::sqrt(1.0 / v);
        let row = ar.row_mut(k);
        madds += a_rows.row_dot_basis_into(k, phi, row)?;
        for x in row.iter_mut() {
            *x *= w;
        }
        br[k] = w * b[k];
    }
    Ok(ReducedSystem { ar, br, madds })
}

/// [`hyper_assemble`] on rows produced by a restricted assembler, with
/// weights from the mesh and counts recorded in `ops`.
pub fn hyper_assemble_system(mesh: &Mesh, sys: &LinearSystem, phi: &DenseMatrix, ops: &mut OpCounts) -> Result<ReducedSystem> {
    let n = mesh.n_cells();
    let volumes: Vec<f64> = sys.rows.iter().map(|&d| mesh.volume(d % n)).collect();
    let rs = hyper_assemble(&sys.a, &sys.b, &volumes, phi)?;
    ops.hyper_assemble_madds += rs.madds;
    ops.hyper_assemblies += 1;
    ops.face_visits += sys.face_visits;
    Ok(rs)
}

/// Least-squares minimizer of `||A^r a - b^r||` by pivoted QR.
pub fn solve_reduced(rs: &ReducedSystem) -> Result<LeastSquares> {
    let sol = lstsq_pivoted(&rs.ar, &rs.br)?;
    if sol.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("reduced solution"));
    }
    Ok(sol)
}

/// `Phi a` on the given cells (sorted, unique), for every component.
pub fn reconstruct_on(
    phi: &DenseMatrix,
    components: usize,
    cells: Vec<usize>,
    a: &[f64],
    ops: &mut OpCounts,
) -> Result<LocalField> {
    let nr = phi.n_cols();
    if a.len() != nr {
        return Err(Error::DimensionMismatch {
            context: "reduced coefficients",
            expected: nr,
            found: a.len(),
        });
    }
    let n_cells = phi.n_rows() / components;
    if let Some(&bad) = cells.iter().find(|&&c| c >= n_cells) {
        return Err(Error::InvalidCell { index: bad, n_cells });
    }
    let mut out = LocalField::zeros(cells, components)?;
    for comp in 0..components {
        for k in 0..out.len() {
            let row = phi.row(comp * n_cells + out.cells()[k]);
            let v = row.iter().zip(a).map(|(p, c)| p * c).sum();
            out.set_local(k, comp, v);
        }
    }
    ops.reconstruct_madds += (out.len() * components * nr) as u64;
    Ok(out)
}

/// Volume-weighted fit of `Phi` to prescribed values at sampled DOFs: the
/// masked system with `A = I`.
pub fn masked_fit(
    mesh: &Mesh,
    phi: &DenseMatrix,
    dofs: &[usize],
    values: &[f64],
    ops: &mut OpCounts,
) -> Result<LeastSquares> {
    let n = mesh.n_cells();
    let nr = phi.n_cols();
    let mut ar = DenseMatrix::zeros(dofs.len(), nr);
    let mut br = vec![0.0; dofs.len()];
    for (k, &d) in dofs.iter().enumerate() {
        let w = libm::sqrt(1.0 / mesh.volume(d % n));
        for (x, p) in ar.row_mut(k).iter_mut().zip(phi.row(d)) {
            *x = w * p;
        }
        br[k] = w * values[k];
    }
    ops.hyper_assemble_madds += (dofs.len() * nr) as u64;
    ops.hyper_assemblies += 1;
    ops.reduced_solves += 1;
    solve_reduced(&ReducedSystem { ar, br, madds: 0 })
}

/// Reduced coefficients over time for one field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
    /// Masked least-squares residual norm of each step (the online error
    /// indicator); zero for the initial state.
    pub residuals: Vec<f64>,
}

impl ReducedTrajectory {
    pub fn push(&mut self, t: f64, a: &[f64], residual: f64) {
        self.times.push(t);
        self.coefficients.push(a.to_vec());
        self.residuals.push(residual);
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.coefficients.last().map(Vec::as_slice)
    }

    /// CSV with columns `time,a_1..a_r`.
    pub fn to_csv(&self) -> alloc::string::String {
        use core::fmt::Write;
        let r = self.coefficients.first().map_or(0, Vec::len);
        let mut s = alloc::string::String::from("time");
        for k in 1..=r {
            let _ = write!(s, ",a_{k}");
        }
        s.push('\n');
        for (t, a) in self.times.iter().zip(&self.coefficients) {
            let _ = write!(s, "{t:e}");
            for v in a {
                let _ = write!(s, ",{v:e}");
            }
            s.push('\n');
        }
        s
    }
}

/// Index of the step whose time is closest to `t`, if within half a step.
pub(crate) fn step_of_time(t: f64, dt: f64, n_steps: usize) -> Option<usize> {
    let k = libm::round(t / dt);
    if k < 0.0 || (k * dt - t).abs() > 0.5 * dt || k as usize > n_steps {
        None
    } else {
        Some(k as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_rows_and_unit_volumes() {
        let phi = DenseMatrix::from_fn(6, 2, |i, j| (i * 2 + j) as f64);
        let rows = [1, 4];
        let a = SparseMatrix::identity(6).select_rows(&rows).unwrap();
        let b = [7.0, 9.0];
        let rs = hyper_assemble(&a, &b, &[1.0, 1.0], &phi).unwrap();
        assert_eq!(rs.ar.row(0), phi.row(1));
        assert_eq!(rs.ar.row(1), phi.row(4));
        assert_eq!(rs.br, b);
        let quarter = hyper_assemble(&a, &b, &[4.0, 4.0], &phi).unwrap();
        for k in 0..2 {
            for j in 0..2 {
                assert_eq!(quarter.ar.get(k, j), 0.5 * rs.ar.get(k, j));
            }
            assert_eq!(quarter.br[k], 0.5 * rs.br[k]);
        }
        assert!(hyper_assemble(&a, &b, &[1.0, 0.0], &phi).is_err());
    }

    #[test]
    fn madd_count_formula() {
        let a = SparseMatrix::from_triplets(1, 8, &[(0, 0, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 5, 1.0), (0, 7, 1.0)]).unwrap();
        let phi = DenseMatrix::zeros(8, 3);
        assert_eq!(hyper_assemble(&a, &[0.0], &[1.0], &phi).unwrap().madds, 15);
    }

    #[test]
    fn reduced_solve_cases() {
        let rs = ReducedSystem { ar: DenseMatrix::identity(3), br: vec![1.0, 2.0, 3.0], madds: 0 };
        assert_eq!(solve_reduced(&rs).unwrap().x, vec![1.0, 2.0, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ar = DenseMatrix::from_fn(10, 3, |_, _| rng.random_range(-1.0..1.0));
        let a_star = [0.3, -1.2, 2.0];
        let br = ar.matvec(&a_star).unwrap();
        let sol = solve_reduced(&ReducedSystem { ar, br, madds: 0 }).unwrap();
        for (x, y) in sol.x.iter().zip(a_star) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn reconstruction() {
        let phi = DenseMatrix::from_fn(8, 2, |i, j| (i + 3 * j) as f64);
        let mut ops = OpCounts::default();
        let zero = reconstruct_on(&phi, 2, vec![1, 3], &[0.0, 0.0], &mut ops).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let e1 = reconstruct_on(&phi, 2, vec![1, 3], &[1.0, 0.0], &mut ops).unwrap();
        assert_eq!(e1.values(), &[1.0, 3.0, 5.0, 7.0]);
        let a = [0.7, -0.2];
        let all = reconstruct_on(&phi, 1, (0..8).collect(), &a, &mut ops).unwrap();
        assert_eq!(all.values(), &phi.matvec(&a).unwrap()[..]);
        assert!(reconstruct_on(&phi, 2, vec![4], &a, &mut ops).is_err());
        assert_eq!(ops.reconstruct_madds, 8 + 8 + 16);
    }

    #[test]
    fn time_lookup() {
        assert_eq!(step_of_time(0.002, 1e-4, 2500), Some(20));
        assert_eq!(step_of_time(0.25, 1e-4, 2500), Some(2500));
        assert_eq!(step_of_time(0.3, 1e-4, 2500), None);
    }
}
