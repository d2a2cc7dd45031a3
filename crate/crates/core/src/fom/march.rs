//! Semi-implicit Euler loops for scalar transport and Burgers.

use alloc::vec::Vec;

use super::linear::solve_linear;
use super::snapshots::SnapshotSet;
use super::FomConfig;
use crate::error::{Error, Result};
use crate::fv::{assemble_momentum, assemble_transport, Field, FieldBcs, RowSubset};
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct MarchResult {
    pub final_field: Field,
    pub snapshots: SnapshotSet,
    pub steps: usize,
    pub linear_iterations: usize,
}

fn check_len(field: &Field, mesh: &Mesh, comps: usize, context: &'static str) -> Result<()> {
    if field.n_components() != comps || field.n_cells() != mesh.n_cells() {
        return Err(Error::DimensionMismatch {
            context,
            expected: comps * mesh.n_cells(),
            found: field.values().len(),
        });
    }
    Ok(())
}

fn should_store(cfg: &FomConfig, step: usize) -> bool {
    step % cfg.snapshot_stride == 0
}

/// Transports `t0` with the frozen velocity `u_frozen`.
pub fn march_transport(
    mesh: &Mesh,
    cfg: &FomConfig,
    bc_u: &FieldBcs,
    bc_t: &FieldBcs,
    u_frozen: &Field,
    t0: &Field,
) -> Result<MarchResult> {
    cfg.validate()?;
    check_len(u_frozen, mesh, 2, "transport velocity")?;
    check_len(t0, mesh, 1, "initial temperature")?;
    let scheme = cfg.scheme();
    let n_steps = cfg.n_steps();
    let mut snapshots = SnapshotSet::new("T", mesh.n_cells());
    snapshots.push(0.0, t0.values().to_vec())?;
    let mut t = t0.clone();
    let mut iterations = 0;
    for step in 1..=n_steps {
        let sys = assemble_transport(mesh, u_frozen, bc_u, &scheme, &t, bc_t, &RowSubset::All)?;
        let sol = solve_linear(&sys.a, &sys.b, t.values(), cfg.linear_tol, cfg.max_linear_iter)?;
        iterations += sol.iterations;
        t = Field::new(1, sol.x)?;
        if should_store(cfg, step) {
            snapshots.push(cfg.time_of(step), t.values().to_vec())?;
        }
    }
    Ok(MarchResult {
        final_field: t,
        snapshots,
        steps: n_steps,
        linear_iterations: iterations,
    })
}

/// Advances Burgers by one step with the convecting flux lagged at `u_old`.
pub fn burgers_step(mesh: &Mesh, cfg: &FomConfig, bc_u: &FieldBcs, u_old: &Field) -> Result<(Field, usize)> {
    let sys = assemble_momentum(mesh, u_old, bc_u, &cfg.scheme(), u_old, None, &RowSubset::All)?;
    let sol = solve_linear(&sys.a, &sys.b, u_old.values(), cfg.linear_tol, cfg.max_linear_iter)?;
    Ok((Field::new(2, sol.x)?, sol.iterations))
}

pub fn march_burgers(mesh: &Mesh, cfg: &FomConfig, bc_u: &FieldBcs, u0: &Field) -> Result<MarchResult> {
    cfg.validate()?;
    check_len(u0, mesh, 2, "initial velocity")?;
    let n_steps = cfg.n_steps();
    let mut snapshots = SnapshotSet::new("U", 2 * mesh.n_cells());
    snapshots.push(0.0, u0.values().to_vec())?;
    let mut u = u0.clone();
    let mut iterations = 0;
    for step in 1..=n_steps {
        let (next, its) = burgers_step(mesh, cfg, bc_u, &u)?;
        iterations += its;
        u = next;
        if should_store(cfg, step) {
            snapshots.push(cfg.time_of(step), u.values().to_vec())?;
        }
    }
    Ok(MarchResult {
        final_field: u,
        snapshots,
        steps: n_steps,
        linear_iterations: iterations,
    })
}

/// Trajectory values of a snapshot set as fields.
pub fn snapshot_fields(set: &SnapshotSet, components: usize) -> Result<Vec<Field>> {
    set.columns().iter().map(|c| Field::new(components, c.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::Bc;
    use crate::mesh::build_channel_mesh;

    fn bcs(mesh: &Mesh, inlet: f64) -> (FieldBcs, FieldBcs) {
        let u = FieldBcs::from_pairs(mesh, &[
            ("inlet", Bc::fixed_vector(inlet, 0.0)), ("outlet", Bc::ZeroGradient), ("walls", Bc::fixed_vector(0.0, 0.0)),
        ]).unwrap();
        let t = FieldBcs::from_pairs(mesh, &[
            ("inlet", Bc::fixed_scalar(1.0)), ("outlet", Bc::ZeroGradient), ("walls", Bc::ZeroGradient),
        ]).unwrap();
        (u, t)
    }

    #[test]
    fn zero_steps_keeps_initial_field() {
        let m = build_channel_mesh(2.0, 1.0, 4, 2).unwrap();
        let (bu, bt) = bcs(&m, 1.0);
        let cfg = FomConfig { t_final: 0.0, ..FomConfig::transport() };
        let r = march_transport(&m, &cfg, &bu, &bt, &Field::zeros(8, 2), &Field::zeros(8, 1)).unwrap();
        assert_eq!(r.snapshots.len(), 1);
        assert_eq!(r.snapshots.times(), &[0.0]);
    }

    #[test]
    fn no_flow_no_diffusion_keeps_initial_field() {
        let m = build_channel_mesh(2.0, 1.0, 4, 2).unwrap();
        let (bu, bt) = bcs(&m, 0.0);
        let cfg = FomConfig { t_final: 1e-3, nu: 0.0, ..FomConfig::transport() };
        let t0 = Field::scalar((0..8).map(|i| i as f64 * 0.1).collect());
        let r = march_transport(&m, &cfg, &bu, &bt, &Field::zeros(8, 2), &t0).unwrap();
        assert_eq!(r.snapshots.len(), 11);
        for c in r.snapshots.columns() {
            for (a, b) in c.iter().zip(t0.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transport_snapshot_count() {
        let m = build_channel_mesh(2.0, 1.0, 4, 2).unwrap();
        let (bu, bt) = bcs(&m, 1.0);
        let cfg = FomConfig::transport();
        let r = march_transport(&m, &cfg, &bu, &bt, &Field::uniform(8, &[1.0, 0.0]), &Field::zeros(8, 1)).unwrap();
        assert_eq!(r.snapshots.len(), 2501);
        assert!((r.snapshots.times()[2500] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn burgers_zero_inlet_stays_zero() {
        let m = build_channel_mesh(2.0, 1.0, 4, 2).unwrap();
        let (bu, _) = bcs(&m, 0.0);
        let cfg = FomConfig { t_final: 3e-3, ..FomConfig::burgers() };
        let r = march_burgers(&m, &cfg, &bu, &Field::zeros(8, 2)).unwrap();
        assert!(r.snapshots.columns().iter().all(|c| c.iter().all(|&v| v == 0.0)));
        assert_eq!(r.snapshots.len(), 11);
    }

    #[test]
    fn burgers_snapshot_count() {
        let m = build_channel_mesh(2.0, 1.0, 4, 2).unwrap();
        let (bu, _) = bcs(&m, 1.0);
        let r = march_burgers(&m, &FomConfig::burgers(), &bu, &Field::zeros(8, 2)).unwrap();
        assert_eq!(r.snapshots.len(), 501);
        assert!((r.snapshots.times()[500] - 0.15).abs() < 1e-12);
    }

    #[test]
    fn burgers_single_step_matches_manual_solve() {
        let m = build_channel_mesh(2.0, 1.0, 6, 3).unwrap();
        let (bu, _) = bcs(&m, 1.0);
        let cfg = FomConfig { t_final: 1e-4, ..FomConfig::transport() };
        let u0 = Field::uniform(18, &[0.3, 0.1]);
        let r = march_burgers(&m, &cfg, &bu, &u0).unwrap();
        let sys = assemble_momentum(&m, &u0, &bu, &cfg.scheme(), &u0, None, &RowSubset::All).unwrap();
        let manual = solve_linear(&sys.a, &sys.b, u0.values(), cfg.linear_tol, cfg.max_linear_iter).unwrap();
        assert_eq!(r.final_field.values(), &manual.x[..]);
    }
}
