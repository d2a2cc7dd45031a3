//! Full-order time marching.

pub mod linear;
pub mod march;
pub mod simple;
pub mod snapshots;

pub use linear::{solve_linear, LinearSolve};
pub use march::{march_burgers, march_transport, MarchResult};
pub use simple::{march_ns, simple_step, NsMarchResult, NsState, SimpleReport};
pub use snapshots::SnapshotSet;

use crate::error::{Error, Result};
use crate::fv::ConvectionDiffusion;

/// Time-marching and solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FomConfig {
    pub dt: f64,
    pub t_final: f64,
    pub nu: f64,
    /// Store a snapshot every `snapshot_stride` steps (the initial field is
    /// always stored).
    pub snapshot_stride: usize,
    pub linear_tol: f64,
    pub max_linear_iter: usize,
    pub relax_u: f64,
    pub relax_p: f64,
    /// SIMPLE outer iterations per time step.
    pub outer_iterations: usize,
    pub upwind_blend: f64,
    /// Continuity residual above which a SIMPLE step is flagged.
    pub continuity_threshold: f64,
}

impl FomConfig {
    /// Scalar transport case: dt = 1e-4 s to 0.25 s, nu = 4e-5.
    pub fn transport() -> Self {
        Self {
            dt: 1e-4,
            t_final: 0.25,
            nu: 4e-5,
            snapshot_stride: 1,
            linear_tol: 1e-8,
            max_linear_iter: 1000,
            relax_u: 1.0,
            relax_p: 1.0,
            outer_iterations: 1,
            upwind_blend: 0.0,
            continuity_threshold: f64::INFINITY,
        }
    }

    /// Burgers case: dt = 1e-4 s to 0.15 s, snapshots every third step.
    pub fn burgers() -> Self {
        Self {
            t_final: 0.15,
            snapshot_stride: 3,
            ..Self::transport()
        }
    }

    /// Cylinder-like obstacle flow at Re = 200 (D = 1 m, U = 1 m/s).
    pub fn navier_stokes() -> Self {
        Self {
            dt: 5e-3,
            t_final: 2.0,
            nu: reynolds_viscosity(200.0, 1.0, 1.0),
            snapshot_stride: 1,
            linear_tol: 1e-8,
            max_linear_iter: 2000,
            relax_u: 0.7,
            relax_p: 0.3,
            outer_iterations: 20,
            upwind_blend: 1.0,
            continuity_threshold: 1e-2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidTimeStep(self.dt));
        }
        let bad = |what: &str| Err(Error::InvalidArgument(alloc::format!("invalid {what}")));
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad("final time");
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad("viscosity");
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot stride");
        }
        if !(self.linear_tol > 0.0) || self.max_linear_iter == 0 {
            return bad("linear solver settings");
        }
        for a in [self.relax_u, self.relax_p] {
            if !(a > 0.0 && a <= 1.0) {
                return bad("under-relaxation factor");
            }
        }
        if self.outer_iterations == 0 {
            return bad("outer iteration count");
        }
        if !(0.0..=1.0).contains(&self.upwind_blend) {
            return bad("upwind blend");
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        libm::round(self.t_final / self.dt) as usize
    }

    /// Time of step `k`, computed without accumulation.
    pub fn time_of(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn scheme(&self) -> ConvectionDiffusion {
        ConvectionDiffusion {
            nu: self.nu,
            dt: self.dt,
            upwind_blend: self.upwind_blend,
        }
    }
}

/// `nu = U D / Re`.
pub fn reynolds_viscosity(re: f64, u: f64, d: f64) -> f64 {
    u * d / re
}
