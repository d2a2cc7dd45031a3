//! Hyper-reduced segregated SIMPLE loop.
//!
//! Velocity and pressure have separate bases and sample sets. Each outer
//! iteration solves the masked momentum system at the velocity samples and
//! the masked pressure-correction system at the pressure samples, then fits
//! the velocity correction at the velocity samples. The pressure equation is
//! driven by the local predicted velocity `H(u*)/a`, i.e. the reduced `u*`
//! plus its momentum residual over the diagonal; reduced velocity modes are
//! nearly solenoidal and would otherwise carry no continuity information. All fields are
//! reconstructed only on a two-layer closure of the combined sample cells.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::march::full_field;
use super::{hyper_assemble_system, masked_fit, reconstruct_on, solve_reduced, step_of_time, ReducedTrajectory};
use crate::error::{Error, Result};
use crate::fom::simple::velocity_correction_at;
use crate::fom::FomConfig;
use crate::fv::{
    assemble_momentum, assemble_pressure_correction, gauss_gradient_local, relax, CellData, Field, FieldBcs, LocalField,
    PressureCorrectionInputs, RowSubset,
};
use crate::mesh::{local_stencil_closure, Mesh};
use crate::metrics::OpCounts;
use crate::rom::{MagicPointSet, PodBasis};

/// Outer iterations over which residual growth is checked.
const DIVERGENCE_WINDOW: usize = 5;
/// Growth factor over the window that aborts the run.
const DIVERGENCE_GROWTH: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub struct NsOnlineSetup<'a> {
    pub basis_u: &'a PodBasis,
    pub basis_p: &'a PodBasis,
    pub points_u: &'a MagicPointSet,
    pub points_p: &'a MagicPointSet,
    pub a_u0: &'a [f64],
    pub a_p0: &'a [f64],
    pub output_times: &'a [f64],
    pub trajectory_stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HromNsRun {
    pub u: ReducedTrajectory,
    pub p: ReducedTrajectory,
    /// `(time, velocity, pressure)` at the requested output times.
    pub reconstructions: Vec<(f64, Field, Field)>,
    pub ops: OpCounts,
    pub steps: usize,
    /// Sampled continuity residual after the last outer iteration of each step.
    pub step_residuals: Vec<f64>,
}

struct Stencils {
    /// Two-layer closure of all sample cells.
    closure: Vec<usize>,
    /// Cells where momentum rows are assembled: one layer around the
    /// pressure samples plus the velocity samples.
    mom_cells: Vec<usize>,
    /// Cells where the pressure correction is needed.
    p_corr_cells: Vec<usize>,
}

impl Stencils {
    fn new(mesh: &Mesh, pu: &MagicPointSet, pp: &MagicPointSet) -> Result<Self> {
        let all: Vec<usize> = pu
            .union_cells
            .iter()
            .chain(&pp.union_cells)
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let closure = local_stencil_closure(mesh, &all, 2)?;
        let mom_cells = local_stencil_closure(mesh, &pp.union_cells, 1)?
            .iter()
            .chain(&pu.union_cells)
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let p_corr_cells = local_stencil_closure(mesh, &pu.union_cells, 1)?;
        Ok(Self {
            closure,
            mom_cells,
            p_corr_cells,
        })
    }
}

fn check_setup(mesh: &Mesh, s: &NsOnlineSetup<'_>) -> Result<()> {
    let n = mesh.n_cells();
    for (basis, comps, a0, points) in [(s.basis_u, 2, s.a_u0, s.points_u), (s.basis_p, 1, s.a_p0, s.points_p)] {
        if basis.n_dofs() != comps * n || basis.components() != comps {
            return Err(Error::DimensionMismatch {
                context: "basis rows vs mesh",
                expected: comps * n,
                found: basis.n_dofs(),
            });
        }
        if a0.len() != basis.rank() {
            return Err(Error::DimensionMismatch {
                context: "initial coefficients",
                expected: basis.rank(),
                found: a0.len(),
            });
        }
        if points.n_cells != n || points.components != comps {
            return Err(Error::InvalidArgument("magic points belong to another mesh or field".into()));
        }
        if points.len() < basis.rank() {
            return Err(Error::RankDeficient {
                rank: points.len(),
                required: basis.rank(),
            });
        }
    }
    Ok(())
}

/// Runs the reduced transient SIMPLE loop over `[0, t_final]`.
pub fn hrom_simple_march(
    mesh: &Mesh,
    cfg: &FomConfig,
    bc_u: &FieldBcs,
    bc_p: &FieldBcs,
    setup: &NsOnlineSetup<'_>,
) -> Result<HromNsRun> {
    cfg.validate()?;
    check_setup(mesh, setup)?;
    let n = mesh.n_cells();
    let scheme = cfg.scheme();
    let phi_u = setup.basis_u.phi();
    let phi_p = setup.basis_p.phi();
    let st = Stencils::new(mesh, setup.points_u, setup.points_p)?;
    let mom_rows = RowSubset::Rows(setup.points_u.union.clone());
    let p_rows = RowSubset::Rows(setup.points_p.union.clone());
    let mom_rows_d = RowSubset::cells(&st.mom_cells, 2, n);
    let u_cells = &setup.points_u.union_cells;
    let bc_pc = bc_p.homogeneous();

    let n_steps = cfg.n_steps();
    let stride = setup.trajectory_stride.max(1);
    let outputs: Vec<(usize, f64)> = setup
        .output_times
        .iter()
        .map(|&t| {
            step_of_time(t, cfg.dt, n_steps)
                .map(|k| (k, t))
                .ok_or_else(|| Error::InvalidArgument(alloc::format!("output time {t} is not a step time")))
        })
        .collect::<Result<_>>()?;

    let mut ops = OpCounts::default();
    let mut a_u = setup.a_u0.to_vec();
    let mut a_p = setup.a_p0.to_vec();
    let mut traj_u = ReducedTrajectory::default();
    let mut traj_p = ReducedTrajectory::default();
    traj_u.push(0.0, &a_u, 0.0);
    traj_p.push(0.0, &a_p, 0.0);
    let mut reconstructions = Vec::new();
    let emit = |k: usize, a_u: &[f64], a_p: &[f64], ops: &mut OpCounts, out: &mut Vec<(f64, Field, Field)>| -> Result<()> {
        for &(_, t) in outputs.iter().filter(|(s, _)| *s == k) {
            out.push((t, full_field(setup.basis_u, a_u, ops)?, full_field(setup.basis_p, a_p, ops)?));
        }
        Ok(())
    };
    emit(0, &a_u, &a_p, &mut ops, &mut reconstructions)?;
    let mut step_residuals = Vec::with_capacity(n_steps);

    for step in 1..=n_steps {
        let u_old = reconstruct_on(phi_u, 2, st.closure.clone(), &a_u, &mut ops)?;
        let mut history: Vec<f64> = Vec::with_capacity(cfg.outer_iterations);
        let (mut res_u, mut res_p) = (0.0, 0.0);
        for _ in 0..cfg.outer_iterations {
            let u_k = reconstruct_on(phi_u, 2, st.closure.clone(), &a_u, &mut ops)?;
            let p_k = reconstruct_on(phi_p, 1, st.closure.clone(), &a_p, &mut ops)?;

            // momentum predictor at the velocity samples
            let grad_p = gauss_gradient_local(mesh, &p_k, bc_p, u_cells.clone())?;
            let mut mom = assemble_momentum(mesh, &u_k, bc_u, &scheme, &u_old, Some(&grad_p), &mom_rows)?;
            relax(&mut mom, cfg.relax_u, &u_k, n)?;
            let rs = hyper_assemble_system(mesh, &mom, phi_u, &mut ops)?;
            let pred = solve_reduced(&rs)?;
            ops.reduced_solves += 1;
            res_u = pred.residual_norm;
            let a_star = pred.x;

            // full momentum rows wherever the pressure stencils need the
            // diagonal or the predicted velocity
            let grad_p_d = gauss_gradient_local(mesh, &p_k, bc_p, st.mom_cells.clone())?;
            let mut dsys = assemble_momentum(mesh, &u_k, bc_u, &scheme, &u_old, Some(&grad_p_d), &mom_rows_d)?;
            relax(&mut dsys, cfg.relax_u, &u_k, n)?;
            ops.face_visits += dsys.face_visits;
            let nd = st.mom_cells.len();
            let mut a_diag = LocalField::zeros(st.mom_cells.clone(), 1)?;
            for k in 0..nd {
                a_diag.set_local(k, 0, dsys.diagonal_of(k));
            }

            // predicted velocity H(u*)/a: the reduced u* plus its local
            // momentum residual scaled by the diagonal
            let u_rec = reconstruct_on(phi_u, 2, st.closure.clone(), &a_star, &mut ops)?;
            let mut u_star = LocalField::zeros(st.mom_cells.clone(), 2)?;
            for (k, &d) in dsys.rows.iter().enumerate() {
                let (cols, vals) = dsys.a.row(k);
                let mut r = dsys.b[k];
                for (&j, &v) in cols.iter().zip(vals) {
                    r -= v * u_rec.value(j % n, j / n)?;
                }
                let (cell, comp) = (d % n, d / n);
                let local = k % nd;
                u_star.set_local(local, comp, u_rec.value(cell, comp)? + r / dsys.diagonal_of(k));
            }
            let inp = PressureCorrectionInputs {
                a_diag: &a_diag,
                u_star: &u_star,
                p: &p_k,
                bc_u,
                bc_p,
            };
            let pc = assemble_pressure_correction(mesh, &inp, &p_rows)?;
            let continuity: f64 = pc.b.iter().map(|v| v.abs()).sum();
            let rs_p = hyper_assemble_system(mesh, &pc, phi_p, &mut ops)?;
            let corr = solve_reduced(&rs_p)?;
            ops.reduced_solves += 1;
            res_p = corr.residual_norm;
            let da_p = corr.x;

            // velocity correction fitted at the velocity samples
            let p_corr = reconstruct_on(phi_p, 1, st.p_corr_cells.clone(), &da_p, &mut ops)?;
            let dofs = &setup.points_u.union;
            let mut target = Vec::with_capacity(dofs.len());
            for &d in dofs {
                let du = velocity_correction_at(mesh, &a_diag, &p_corr, &bc_pc, d % n)?;
                target.push(du[d / n]);
            }
            let fit = masked_fit(mesh, phi_u, dofs, &target, &mut ops)?;
            for ((a, s), c) in a_u.iter_mut().zip(&a_star).zip(&fit.x) {
                *a = s + c;
            }
            for (a, d) in a_p.iter_mut().zip(&da_p) {
                *a += cfg.relax_p * d;
            }
            if !continuity.is_finite() || a_u.iter().chain(&a_p).any(|v| !v.is_finite()) {
                return Err(Error::Diverged {
                    step,
                    residual: continuity,
                });
            }
            history.push(continuity);
            let m = history.len();
            if m > DIVERGENCE_WINDOW {
                let before = history[m - 1 - DIVERGENCE_WINDOW];
                if continuity > DIVERGENCE_GROWTH * before && before > 0.0 {
                    return Err(Error::Diverged {
                        step,
                        residual: continuity,
                    });
                }
            }
        }
        step_residuals.push(history.last().copied().unwrap_or(0.0));
        if step % stride == 0 || step == n_steps {
            traj_u.push(cfg.time_of(step), &a_u, res_u);
            traj_p.push(cfg.time_of(step), &a_p, res_p);
        }
        emit(step, &a_u, &a_p, &mut ops, &mut reconstructions)?;
    }
    Ok(HromNsRun {
        u: traj_u,
        p: traj_p,
        reconstructions,
        ops,
        steps: n_steps,
        step_residuals,
    })
}
