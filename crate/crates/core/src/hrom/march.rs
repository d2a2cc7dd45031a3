//! Hyper-reduced time loops for scalar transport and Burgers.

use alloc::vec::Vec;

use super::{hyper_assemble_system, reconstruct_on, solve_reduced, step_of_time, ReducedTrajectory};
use crate::error::{Error, Result};
use crate::fom::FomConfig;
use crate::fv::{assemble_momentum, assemble_transport, CellData, Field, FieldBcs, RowSubset};
use crate::mesh::Mesh;
use crate::metrics::OpCounts;
use crate::rom::{MagicPointSet, PodBasis};

/// Offline artifacts and output requests of one online run.
#[derive(Debug, Clone, Copy)]
pub struct OnlineSetup<'a> {
    pub basis: &'a PodBasis,
    pub points: &'a MagicPointSet,
    /// Initial reduced coefficients.
    pub a0: &'a [f64],
    /// Times at which the full field is reconstructed.
    pub output_times: &'a [f64],
    /// Keep every `trajectory_stride`-th coefficient vector.
    pub trajectory_stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HromRun {
    pub trajectory: ReducedTrajectory,
    pub reconstructions: Vec<(f64, Field)>,
    pub ops: OpCounts,
    pub steps: usize,
}

impl OnlineSetup<'_> {
    fn check(&self, mesh: &Mesh, components: usize) -> Result<()> {
        let b = self.basis;
        if b.components() != components || b.n_dofs() != components * mesh.n_cells() {
            return Err(Error::DimensionMismatch {
                context: "basis rows vs mesh",
                expected: components * mesh.n_cells(),
                found: b.n_dofs(),
            });
        }
        if self.a0.len() != b.rank() {
            return Err(Error::DimensionMismatch {
                context: "initial coefficients",
                expected: b.rank(),
                found: self.a0.len(),
            });
        }
        if self.points.n_cells != mesh.n_cells() || self.points.components != components {
            return Err(Error::InvalidArgument("magic points belong to another mesh or field".into()));
        }
        if self.points.len() < b.rank() {
            return Err(Error::RankDeficient {
                rank: self.points.len(),
                required: b.rank(),
            });
        }
        Ok(())
    }

    pub(crate) fn output_steps(&self, cfg: &FomConfig) -> Result<Vec<(usize, f64)>> {
        let n = cfg.n_steps();
        self.output_times
            .iter()
            .map(|&t| {
                step_of_time(t, cfg.dt, n)
                    .map(|k| (k, t))
                    .ok_or_else(|| Error::InvalidArgument(alloc::format!("output time {t} is not a step time")))
            })
            .collect()
    }
}

pub(crate) fn full_field(basis: &PodBasis, a: &[f64], ops: &mut OpCounts) -> Result<Field> {
    ops.full_field_touches += 1;
    Field::new(basis.components(), basis.expand(a)?)
}

/// Shared loop: `step(a, ops)` advances the coefficients by one time step
/// and returns the new ones with the masked residual.
fn run_loop(
    cfg: &FomConfig,
    setup: &OnlineSetup<'_>,
    mut step: impl FnMut(&[f64], &mut OpCounts) -> Result<(Vec<f64>, f64)>,
) -> Result<HromRun> {
    cfg.validate()?;
    let n_steps = cfg.n_steps();
    let outputs = setup.output_steps(cfg)?;
    let stride = setup.trajectory_stride.max(1);
    let mut ops = OpCounts::default();
    let mut trajectory = ReducedTrajectory::default();
    let mut reconstructions = Vec::new();
    let mut a = setup.a0.to_vec();
    trajectory.push(0.0, &a, 0.0);
    for &(_, t) in outputs.iter().filter(|(k, _)| *k == 0) {
        reconstructions.push((t, full_field(setup.basis, &a, &mut ops)?));
    }
    for k in 1..=n_steps {
        let (next, residual) = step(&a, &mut ops)?;
        a = next;
        if k % stride == 0 || k == n_steps {
            trajectory.push(cfg.time_of(k), &a, residual);
        }
        for &(_, t) in outputs.iter().filter(|(s, _)| *s == k) {
            reconstructions.push((t, full_field(setup.basis, &a, &mut ops)?));
        }
    }
    Ok(HromRun {
        trajectory,
        reconstructions,
        ops,
        steps: n_steps,
    })
}

/// Hyper-reduced transport with a frozen convecting velocity. Only the
/// closure cells of `u_frozen` are read.
pub fn hrom_march_transport(
    mesh: &Mesh,
    cfg: &FomConfig,
    bc_u: &FieldBcs,
    bc_t: &FieldBcs,
    u_frozen: &dyn CellData,
    setup: &OnlineSetup<'_>,
) -> Result<HromRun> {
    setup.check(mesh, 1)?;
    let scheme = cfg.scheme();
    let phi = setup.basis.phi();
    let rows = RowSubset::Rows(setup.points.union.clone());
    let cells = &setup.points.union_cells;
    run_loop(cfg, setup, |a, ops| {
        let t_old = reconstruct_on(phi, 1, cells.clone(), a, ops)?;
        let sys = assemble_transport(mesh, u_frozen, bc_u, &scheme, &t_old, bc_t, &rows)?;
        let rs = hyper_assemble_system(mesh, &sys, phi, ops)?;
        let sol = solve_reduced(&rs)?;
        ops.reduced_solves += 1;
        Ok((sol.x, sol.residual_norm))
    })
}

/// Hyper-reduced Burgers: the convecting velocity is reconstructed on the
/// closure every step and the sampled rows are re-assembled.
pub fn hrom_march_burgers(mesh: &Mesh, cfg: &FomConfig, bc_u: &FieldBcs, setup: &OnlineSetup<'_>) -> Result<HromRun> {
    setup.check(mesh, 2)?;
    let scheme = cfg.scheme();
    let phi = setup.basis.phi();
    let rows = RowSubset::Rows(setup.points.union.clone());
    let closure = &setup.points.closure;
    run_loop(cfg, setup, |a, ops| {
        let u = reconstruct_on(phi, 2, closure.clone(), a, ops)?;
        let sys = assemble_momentum(mesh, &u, bc_u, &scheme, &u, None, &rows)?;
        let rs = hyper_assemble_system(mesh, &sys, phi, ops)?;
        let sol = solve_reduced(&rs)?;
        ops.reduced_solves += 1;
        Ok((sol.x, sol.residual_norm))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::{march_burgers, march_transport};
    use crate::fv::Bc;
    use crate::mesh::build_channel_mesh;
    use crate::rom::{build_magic_points, deim_select, pod};
    use alloc::vec;

    fn setup_mesh() -> (Mesh, FieldBcs, FieldBcs) {
        let m = build_channel_mesh(2.0, 1.0, 12, 6).unwrap();
        let bu = FieldBcs::from_pairs(&m, &[
            ("inlet", Bc::fixed_vector(1.0, 0.0)), ("outlet", Bc::ZeroGradient), ("walls", Bc::fixed_vector(0.0, 0.0)),
        ]).unwrap();
        let bt = FieldBcs::from_pairs(&m, &[
            ("inlet", Bc::fixed_scalar(1.0)), ("outlet", Bc::ZeroGradient), ("walls", Bc::ZeroGradient),
        ]).unwrap();
        (m, bu, bt)
    }

    #[test]
    fn full_sampling_reproduces_projection() {
        let (m, bu, bt) = setup_mesh();
        let cfg = FomConfig { dt: 0.01, t_final: 0.2, nu: 0.01, linear_tol: 1e-13, ..FomConfig::transport() };
        let u = Field::uniform(m.n_cells(), &[1.0, 0.0]);
        let fom = march_transport(&m, &cfg, &bu, &bt, &u, &Field::zeros(m.n_cells(), 1)).unwrap();
        // the trajectory spans at most 21 directions
        let basis = pod(&fom.snapshots, 21, 1).unwrap();
        let all: Vec<usize> = (0..m.n_cells()).collect();
        let none: [&str; 0] = [];
        let points = build_magic_points(&m, "T", 1, &all, &none, 1).unwrap();
        let a0 = basis.project(fom.snapshots.column(0)).unwrap();
        let setup = OnlineSetup { basis: &basis, points: &points, a0: &a0, output_times: &[0.2], trajectory_stride: 1 };
        let run = hrom_march_transport(&m, &cfg, &bu, &bt, &u, &setup).unwrap();
        for (k, a) in run.trajectory.coefficients.iter().enumerate() {
            let exact = basis.project(fom.snapshots.column(k)).unwrap();
            for (x, y) in a.iter().zip(&exact) {
                assert!((x - y).abs() <= 1e-8, "step {k}: {x} vs {y}");
            }
        }
        assert_eq!(run.ops.full_field_touches, 1);
    }

    #[test]
    fn zero_state_stays_zero() {
        let (m, bu, bt) = setup_mesh();
        let bu = bu.homogeneous();
        let bt = bt.homogeneous();
        let cfg = FomConfig { dt: 0.01, t_final: 0.05, ..FomConfig::transport() };
        let mut snaps = crate::fom::SnapshotSet::new("T", m.n_cells());
        for j in 0..3 {
            snaps.push(j as f64, (0..m.n_cells()).map(|i| ((i * (j + 2)) % 7) as f64).collect()).unwrap();
        }
        let basis = pod(&snaps, 3, 1).unwrap();
        let idx = deim_select(basis.phi(), 10).unwrap();
        let none: [&str; 0] = [];
        let points = build_magic_points(&m, "T", 1, &idx, &none, 1).unwrap();
        let a0 = vec![0.0; 3];
        let setup = OnlineSetup { basis: &basis, points: &points, a0: &a0, output_times: &[], trajectory_stride: 1 };
        let u = Field::uniform(m.n_cells(), &[1.0, 0.0]);
        let run = hrom_march_transport(&m, &cfg, &bu, &bt, &u, &setup).unwrap();
        assert!(run.trajectory.coefficients.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(run.ops.full_field_touches, 0);
        assert_eq!(run.ops.hyper_assemblies, 5);
    }

    #[test]
    fn burgers_full_sampling_tracks_fom() {
        let (m, bu, _) = setup_mesh();
        let cfg = FomConfig { dt: 0.01, t_final: 0.1, nu: 0.05, snapshot_stride: 1, ..FomConfig::burgers() };
        let fom = march_burgers(&m, &cfg, &bu, &Field::zeros(m.n_cells(), 2)).unwrap();
        let basis = pod(&fom.snapshots, 11, 2).unwrap();
        let dofs: Vec<usize> = (0..2 * m.n_cells()).collect();
        let none: [&str; 0] = [];
        let points = build_magic_points(&m, "U", 2, &dofs, &none, 1).unwrap();
        let a0 = basis.project(fom.snapshots.column(0)).unwrap();
        let setup = OnlineSetup { basis: &basis, points: &points, a0: &a0, output_times: &[0.1], trajectory_stride: 1 };
        let run = hrom_march_burgers(&m, &cfg, &bu, &setup).unwrap();
        let rec = &run.reconstructions[0].1;
        let err = crate::metrics::rel_l2(rec.values(), fom.final_field.values(), &m.volumes()).unwrap();
        assert!(err < 1e-6, "{err}");
    }
}
