//! Transient SIMPLE for incompressible Navier-Stokes.

use alloc::vec::Vec;

use super::linear::solve_linear;
use super::snapshots::SnapshotSet;
use super::FomConfig;
use crate::error::{Error, Result};
use crate::fv::{
    assemble_momentum, assemble_pressure_correction, corrected_face_flux, gauss_gradient, gauss_gradient_at, relax,
    CellData, Field, FieldBcs, PressureCorrectionInputs, RowSubset,
};
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct NsState {
    pub u: Field,
    pub p: Field,
}

impl NsState {
    pub fn zeros(n_cells: usize) -> Self {
        Self {
            u: Field::zeros(n_cells, 2),
            p: Field::zeros(n_cells, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleReport {
    /// Sum over cells of |mass imbalance| of the predicted fluxes.
    pub continuity_residual: f64,
    /// Largest per-cell imbalance of the corrected fluxes.
    pub corrected_imbalance: f64,
    pub linear_iterations: usize,
}

/// Momentum predictor: returns `u*` and the relaxed momentum diagonal.
pub fn momentum_predictor(
    mesh: &Mesh,
    cfg: &FomConfig,
    bc_u: &FieldBcs,
    bc_p: &FieldBcs,
    u_old: &Field,
    state: &NsState,
) -> Result<(Field, Field, usize)> {
    let n = mesh.n_cells();
    let grad_p = gauss_gradient(mesh, &state.p, bc_p)?;
    let mut mom = assemble_momentum(mesh, &state.u, bc_u, &cfg.scheme(), u_old, Some(&grad_p), &RowSubset::All)?;
    relax(&mut mom, cfg.relax_u, &state.u, n)?;
    let sol = solve_linear(&mom.a, &mom.b, state.u.values(), cfg.linear_tol, cfg.max_linear_iter)?;
    let a_diag = Field::scalar((0..n).map(|i| mom.diagonal_of(i)).collect());
    Ok((Field::new(2, sol.x)?, a_diag, sol.iterations))
}

/// `-(V / a) grad p'` at one cell.
pub fn velocity_correction_at(
    mesh: &Mesh,
    a_diag: &dyn CellData,
    p_corr: &dyn CellData,
    bc_p_corr: &FieldBcs,
    cell: usize,
) -> Result<[f64; 2]> {
    let g = gauss_gradient_at(mesh, p_corr, bc_p_corr, cell)?;
    let a = a_diag.value(cell, 0)?;
    if a == 0.0 {
        return Err(Error::ZeroDiagonal(cell));
    }
    let scale = mesh.volume(cell) / a;
    Ok([-scale * g[0], -scale * g[1]])
}

/// One SIMPLE outer iteration within the time step that started from `u_old`.
pub fn simple_step(
    mesh: &Mesh,
    cfg: &FomConfig,
    bc_u: &FieldBcs,
    bc_p: &FieldBcs,
    u_old: &Field,
    state: &NsState,
) -> Result<(NsState, SimpleReport)> {
    let n = mesh.n_cells();
    let (u_star, a_diag, mut iterations) = momentum_predictor(mesh, cfg, bc_u, bc_p, u_old, state)?;
    let inp = PressureCorrectionInputs {
        a_diag: &a_diag,
        u_star: &u_star,
        p: &state.p,
        bc_u,
        bc_p,
    };
    let pc = assemble_pressure_correction(mesh, &inp, &RowSubset::All)?;
    let continuity_residual = pc.b.iter().map(|v| v.abs()).sum();
    let sol = solve_linear(&pc.a, &pc.b, &alloc::vec![0.0; n], cfg.linear_tol, cfg.max_linear_iter)?;
    iterations += sol.iterations;
    let p_corr = Field::scalar(sol.x);
    let bc_pc = bc_p.homogeneous();

    let mut u = u_star.clone();
    let mut p = state.p.clone();
    for c in 0..n {
        let du = velocity_correction_at(mesh, &a_diag, &p_corr, &bc_pc, c)?;
        u.set(c, 0, u_star.get(c, 0) + du[0]);
        u.set(c, 1, u_star.get(c, 1) + du[1]);
        p.set(c, 0, state.p.get(c, 0) + cfg.relax_p * p_corr.get(c, 0));
    }
    let flux: Vec<f64> = (0..mesh.n_faces())
        .map(|f| corrected_face_flux(mesh, &inp, &p_corr, f))
        .collect::<Result<_>>()?;
    let corrected_imbalance = (0..n)
        .map(|c| {
            mesh.cell_faces(c)
                .iter()
                .map(|&f| if mesh.faces()[f].owner == c { flux[f] } else { -flux[f] })
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    if !u.is_finite() || !p.is_finite() {
        return Err(Error::NonFinite("SIMPLE iteration"));
    }
    Ok((
        NsState { u, p },
        SimpleReport {
            continuity_residual,
            corrected_imbalance,
            linear_iterations: iterations,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NsMarchResult {
    pub final_state: NsState,
    pub u_snapshots: SnapshotSet,
    pub p_snapshots: SnapshotSet,
    pub steps: usize,
    /// Continuity residual after the last outer iteration of each step.
    pub step_residuals: Vec<f64>,
    /// True when some step ended above the configured continuity threshold.
    pub flagged: bool,
}

pub fn march_ns(
    mesh: &Mesh,
    cfg: &FomConfig,
    bc_u: &FieldBcs,
    bc_p: &FieldBcs,
    initial: &NsState,
) -> Result<NsMarchResult> {
    cfg.validate()?;
    let n = mesh.n_cells();
    if initial.u.n_cells() != n || initial.p.n_cells() != n {
        return Err(Error::DimensionMismatch {
            context: "initial Navier-Stokes state",
            expected: n,
            found: initial.u.n_cells(),
        });
    }
    let n_steps = cfg.n_steps();
    let mut u_snapshots = SnapshotSet::new("U", 2 * n);
    let mut p_snapshots = SnapshotSet::new("p", n);
    u_snapshots.push(0.0, initial.u.values().to_vec())?;
    p_snapshots.push(0.0, initial.p.values().to_vec())?;
    let mut state = initial.clone();
    let mut step_residuals = Vec::with_capacity(n_steps);
    for step in 1..=n_steps {
        let u_old = state.u.clone();
        let mut last = 0.0;
        for _ in 0..cfg.outer_iterations {
            let (next, report) = simple_step(mesh, cfg, bc_u, bc_p, &u_old, &state)?;
            state = next;
            last = report.continuity_residual;
        }
        step_residuals.push(last);
        if step % cfg.snapshot_stride == 0 {
            u_snapshots.push(cfg.time_of(step), state.u.values().to_vec())?;
            p_snapshots.push(cfg.time_of(step), state.p.values().to_vec())?;
        }
    }
    let flagged = step_residuals.iter().any(|&r| r > cfg.continuity_threshold);
    Ok(NsMarchResult {
        final_state: state,
        u_snapshots,
        p_snapshots,
        steps: n_steps,
        step_residuals,
        flagged,
    })
}
