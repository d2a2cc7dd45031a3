//! TOML case configuration.
//!
//! ```toml
//! [case]
//! kind = "transport"          # transport | burgers | navier_stokes
//! name = "step-transport"
//! seed = 0
//!
//! [geometry]
//! kind = "step"               # step | obstacle_channel | channel
//! preset = "default"          # step only: default | fine
//!
//! [fom]                       # every key optional, preset per case kind
//! dt = 1e-4
//! t_final = 0.25
//!
//! [initial]
//! t = 0.0
//!
//! [convecting]                # transport only: Burgers pre-run for U
//! dt = 1e-3
//! t_final = 0.05
//! u0 = [1.0, 0.0]
//!
//! [[bc.T]]
//! patch = "inlet"
//! type = "fixed"
//! value = [1.0]
//!
//! [rom]
//! layers = 1
//! obligatory = []
//! fields.T = { modes = 7, samples = 100 }
//!
//! [output]
//! times = [0.002, 0.01, 0.052]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use hrom_core::fom::{reynolds_viscosity, FomConfig};
use hrom_core::fv::{Bc, BoundaryCondition, FieldBcs};
use hrom_core::mesh::{GeometryConfig, Mesh, ObstacleChannelGeometry, StepGeometry};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, PathContext, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Transport,
    Burgers,
    NavierStokes,
}

impl CaseKind {
    /// `(field name, components)` of the reduced fields.
    pub fn fields(self) -> &'static [(&'static str, usize)] {
        match self {
            CaseKind::Transport => &[("T", 1)],
            CaseKind::Burgers => &[("U", 2)],
            CaseKind::NavierStokes => &[("U", 2), ("p", 1)],
        }
    }

    /// Fields that need a boundary-condition table.
    pub fn bc_fields(self) -> &'static [&'static str] {
        match self {
            CaseKind::Transport => &["U", "T"],
            CaseKind::Burgers => &["U"],
            CaseKind::NavierStokes => &["U", "p"],
        }
    }

    pub fn preset(self) -> FomConfig {
        match self {
            CaseKind::Transport => FomConfig::transport(),
            CaseKind::Burgers => FomConfig::burgers(),
            CaseKind::NavierStokes => FomConfig::navier_stokes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    pub kind: CaseKind,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Opaque problem parameters, carried into hashes and reports only.
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySection {
    Step {
        preset: Option<String>,
        upstream_length: Option<f64>,
        downstream_length: Option<f64>,
        inlet_height: Option<f64>,
        step_height: Option<f64>,
        nx_upstream: Option<usize>,
        nx_downstream: Option<usize>,
        ny_inlet: Option<usize>,
        ny_step: Option<usize>,
    },
    ObstacleChannel {
        x_range: Option<[f64; 2]>,
        y_range: Option<[f64; 2]>,
        obstacle: Option<[f64; 4]>,
        nx: Option<usize>,
        ny: Option<usize>,
    },
    Channel {
        length: f64,
        height: f64,
        nx: usize,
        ny: usize,
    },
}

impl GeometrySection {
    pub fn resolve(&self) -> Result<GeometryConfig> {
        Ok(match self {
            GeometrySection::Step {
                preset,
                upstream_length,
                downstream_length,
                inlet_height,
                step_height,
                nx_upstream,
                nx_downstream,
                ny_inlet,
                ny_step,
            } => {
                let base = match preset.as_deref() {
                    None | Some("default") => StepGeometry::default(),
                    Some("fine") => StepGeometry::fine(),
                    Some(other) => return Err(CliError::Config(format!("unknown step preset `{other}`"))),
                };
                GeometryConfig::Step(StepGeometry {
                    upstream_length: upstream_length.unwrap_or(base.upstream_length),
                    downstream_length: downstream_length.unwrap_or(base.downstream_length),
                    inlet_height: inlet_height.unwrap_or(base.inlet_height),
                    step_height: step_height.unwrap_or(base.step_height),
                    nx_upstream: nx_upstream.unwrap_or(base.nx_upstream),
                    nx_downstream: nx_downstream.unwrap_or(base.nx_downstream),
                    ny_inlet: ny_inlet.unwrap_or(base.ny_inlet),
                    ny_step: ny_step.unwrap_or(base.ny_step),
                })
            }
            GeometrySection::ObstacleChannel {
                x_range,
                y_range,
                obstacle,
                nx,
                ny,
            } => {
                let base = ObstacleChannelGeometry::default();
                GeometryConfig::ObstacleChannel(ObstacleChannelGeometry {
                    x_range: x_range.unwrap_or(base.x_range),
                    y_range: y_range.unwrap_or(base.y_range),
                    obstacle: obstacle.unwrap_or(base.obstacle),
                    nx: nx.unwrap_or(base.nx),
                    ny: ny.unwrap_or(base.ny),
                })
            }
            GeometrySection::Channel { length, height, nx, ny } => GeometryConfig::Channel {
                length: *length,
                height: *height,
                nx: *nx,
                ny: *ny,
            },
        })
    }
}

/// Overrides of the case-kind preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FomSection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub nu: Option<f64>,
    /// Alternative to `nu`: `nu = reference_velocity * reference_length / reynolds`.
    pub reynolds: Option<f64>,
    pub reference_velocity: Option<f64>,
    pub reference_length: Option<f64>,
    pub snapshot_stride: Option<usize>,
    pub linear_tol: Option<f64>,
    pub max_linear_iter: Option<usize>,
    pub relax_u: Option<f64>,
    pub relax_p: Option<f64>,
    pub outer_iterations: Option<usize>,
    pub upwind_blend: Option<f64>,
    pub continuity_threshold: Option<f64>,
    /// Snapshot columns must satisfy `||x|| <= factor * max|bc| * sqrt(n_dofs)`.
    pub snapshot_norm_factor: Option<f64>,
}

pub const DEFAULT_NORM_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub u: Option<[f64; 2]>,
    pub p: Option<f64>,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvectingSection {
    pub dt: f64,
    pub t_final: f64,
    pub u0: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Fixed,
    ZeroGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcEntry {
    pub patch: String,
    #[serde(rename = "type")]
    pub kind: BcKind,
    pub value: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRom {
    pub modes: usize,
    pub samples: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomSection {
    #[serde(default = "one")]
    pub layers: usize,
    #[serde(default)]
    pub obligatory: Vec<String>,
    pub fields: BTreeMap<String, FieldRom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default = "one")]
    pub trajectory_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            times: Vec::new(),
            trajectory_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub case: CaseSection,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub fom: FomSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub convecting: Option<ConvectingSection>,
    pub bc: BTreeMap<String, Vec<BcEntry>>,
    pub rom: RomSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Everything that determines the full-order run; its hash keys the
/// snapshot store.
#[derive(Serialize)]
struct FomKey<'a> {
    kind: CaseKind,
    seed: u64,
    parameters: &'a BTreeMap<String, f64>,
    geometry: &'a GeometrySection,
    fom: FomRecord,
    initial: &'a InitialSection,
    convecting: &'a Option<ConvectingSection>,
    bc: &'a BTreeMap<String, Vec<BcEntry>>,
}

/// Serializable mirror of the resolved [`FomConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FomRecord {
    pub dt: f64,
    pub t_final: f64,
    pub nu: f64,
    pub snapshot_stride: usize,
    pub linear_tol: f64,
    pub max_linear_iter: usize,
    pub relax_u: f64,
    pub relax_p: f64,
    pub outer_iterations: usize,
    pub upwind_blend: f64,
    pub continuity_threshold: f64,
}

impl From<FomConfig> for FomRecord {
    fn from(c: FomConfig) -> Self {
        Self {
            dt: c.dt,
            t_final: c.t_final,
            nu: c.nu,
            snapshot_stride: c.snapshot_stride,
            linear_tol: c.linear_tol,
            max_linear_iter: c.max_linear_iter,
            relax_u: c.relax_u,
            relax_p: c.relax_p,
            outer_iterations: c.outer_iterations,
            upwind_blend: c.upwind_blend,
            // TOML has no infinity literal in every reader; keep it finite
            continuity_threshold: if c.continuity_threshold.is_finite() { c.continuity_threshold } else { f64::MAX },
        }
    }
}

/// Index of the snapshot column taken at time `t`.
pub fn snapshot_index(fom: &FomConfig, t: f64) -> Option<usize> {
    if !t.is_finite() {
        return None;
    }
    let k = (t / fom.dt).round();
    if k < 0.0 || (k * fom.dt - t).abs() > 1e-6 * fom.dt || k as usize > fom.n_steps() {
        return None;
    }
    let k = k as usize;
    (k % fom.snapshot_stride == 0).then_some(k / fom.snapshot_stride)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl CaseConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: CaseConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn kind(&self) -> CaseKind {
        self.case.kind
    }

    /// The preset for the case kind with this file's overrides applied.
    pub fn fom_config(&self) -> Result<FomConfig> {
        let f = &self.fom;
        let mut c = self.kind().preset();
        macro_rules! set {
            ($($k:ident),*) => { $( if let Some(v) = f.$k { c.$k = v; } )* };
        }
        set!(dt, t_final, nu, snapshot_stride, linear_tol, max_linear_iter, relax_u, relax_p, outer_iterations, upwind_blend, continuity_threshold);
        if let Some(re) = f.reynolds {
            if f.nu.is_some() {
                return Err(CliError::Config("give either `fom.nu` or `fom.reynolds`, not both".into()));
            }
            c.nu = reynolds_viscosity(re, f.reference_velocity.unwrap_or(1.0), f.reference_length.unwrap_or(1.0));
        }
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn norm_factor(&self) -> f64 {
        self.fom.snapshot_norm_factor.unwrap_or(DEFAULT_NORM_FACTOR)
    }

    pub fn mesh(&self) -> Result<Mesh> {
        self.geometry
            .resolve()?
            .build()
            .map_err(|e| CliError::Config(format!("geometry: {e}")))
    }

    /// Resolved boundary conditions of `field`.
    pub fn field_bcs(&self, mesh: &Mesh, field: &str) -> Result<FieldBcs> {
        let entries = self
            .bc
            .get(field)
            .ok_or_else(|| CliError::Config(format!("missing boundary conditions for field `{field}`")))?;
        let list = entries
            .iter()
            .map(|e| {
                let bc = match (e.kind, e.value.as_deref()) {
                    (BcKind::ZeroGradient, None) => Bc::ZeroGradient,
                    (BcKind::Fixed, Some([v])) => Bc::fixed_scalar(*v),
                    (BcKind::Fixed, Some([x, y])) => Bc::fixed_vector(*x, *y),
                    (BcKind::ZeroGradient, Some(_)) => {
                        return Err(CliError::Config(format!("bc.{field} `{}`: zero_gradient takes no value", e.patch)))
                    }
                    (BcKind::Fixed, _) => {
                        return Err(CliError::Config(format!(
                            "bc.{field} `{}`: fixed needs a value of 1 or 2 numbers",
                            e.patch
                        )))
                    }
                };
                Ok(BoundaryCondition::new(e.patch.clone(), bc))
            })
            .collect::<Result<Vec<_>>>()?;
        FieldBcs::resolve(mesh, &list).map_err(|e| CliError::Config(format!("bc.{field}: {e}")))
    }

    /// Largest fixed boundary value over all fields (at least 1).
    pub fn bc_scale(&self, mesh: &Mesh) -> Result<f64> {
        let mut m: f64 = 0.0;
        for f in self.kind().bc_fields() {
            m = m.max(self.field_bcs(mesh, f)?.max_fixed_magnitude());
        }
        Ok(if m > 0.0 { m } else { 1.0 })
    }

    pub fn field_rom(&self, field: &str) -> Result<FieldRom> {
        self.rom
            .fields
            .get(field)
            .copied()
            .ok_or_else(|| CliError::Config(format!("rom.fields.{field} is missing")))
    }

    fn validate(&self) -> Result<()> {
        let kind = self.kind();
        self.fom_config()?;
        for f in kind.bc_fields() {
            if !self.bc.contains_key(*f) {
                return Err(CliError::Config(format!("missing [[bc.{f}]] table")));
            }
        }
        if let Some(extra) = self.bc.keys().find(|k| !kind.bc_fields().contains(&k.as_str())) {
            return Err(CliError::Config(format!("bc.{extra} is not a field of this case")));
        }
        for (f, _) in kind.fields() {
            let r = self.field_rom(f)?;
            if r.modes == 0 {
                return Err(CliError::Config(format!("rom.fields.{f}.modes must be at least 1")));
            }
            if r.samples < r.modes {
                return Err(CliError::Config(format!("rom.fields.{f}: samples must be >= modes")));
            }
        }
        if let Some(extra) = self.rom.fields.keys().find(|k| !kind.fields().iter().any(|(f, _)| f == k)) {
            return Err(CliError::Config(format!("rom.fields.{extra} is not a field of this case")));
        }
        match (kind, &self.convecting) {
            (CaseKind::Transport, None) => {
                return Err(CliError::Config("transport needs a [convecting] section".into()))
            }
            (CaseKind::Transport, Some(c)) if !(c.dt > 0.0 && c.t_final >= 0.0) => {
                return Err(CliError::Config("convecting.dt must be positive and t_final non-negative".into()))
            }
            (CaseKind::Burgers | CaseKind::NavierStokes, Some(_)) => {
                return Err(CliError::Config("[convecting] only applies to transport".into()))
            }
            _ => {}
        }
        if self.output.trajectory_stride == 0 {
            return Err(CliError::Config("output.trajectory_stride must be at least 1".into()));
        }
        let fom = self.fom_config()?;
        if let Some(t) = self.output.times.iter().find(|&&t| snapshot_index(&fom, t).is_none()) {
            return Err(CliError::Config(format!("output time {t} is not a snapshot time")));
        }
        let mesh = self.mesh()?;
        for f in kind.bc_fields() {
            self.field_bcs(&mesh, f)?;
        }
        mesh.patch_owner_cells(&self.rom.obligatory)
            .map_err(|e| CliError::Config(format!("rom.obligatory: {e}")))?;
        Ok(())
    }

    /// Hash of everything the full-order run depends on.
    pub fn fom_hash(&self) -> Result<String> {
        let key = FomKey {
            kind: self.kind(),
            seed: self.case.seed,
            parameters: &self.case.parameters,
            geometry: &self.geometry,
            fom: self.fom_config()?.into(),
            initial: &self.initial,
            convecting: &self.convecting,
            bc: &self.bc,
        };
        let text = toml::to_string(&key).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(sha256_hex(text.as_bytes()))
    }

    /// Hash of the full-order key plus the reduction settings.
    pub fn offline_hash(&self) -> Result<String> {
        let rom = toml::to_string(&self.rom).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(sha256_hex(format!("{}\n{rom}", self.fom_hash()?).as_bytes()))
    }

    /// Directory-friendly mode label, e.g. `U5s100_p4s100`.
    pub fn rom_label(&self) -> String {
        self.kind()
            .fields()
            .iter()
            .filter_map(|(f, _)| self.rom.fields.get(*f).map(|r| format!("{f}{}s{}", r.modes, r.samples)))
            .collect::<Vec<_>>()
            .join("_")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TRANSPORT: &str = r#"
[case]
kind = "transport"
name = "t"

[geometry]
kind = "channel"
length = 4.0
height = 1.0
nx = 8
ny = 2

[fom]
t_final = 0.001

[convecting]
dt = 1e-3
t_final = 0.002
u0 = [1.0, 0.0]

[[bc.U]]
patch = "inlet"
type = "fixed"
value = [1.0, 0.0]

[[bc.U]]
patch = "outlet"
type = "zero_gradient"

[[bc.U]]
patch = "walls"
type = "zero_gradient"

[[bc.T]]
patch = "inlet"
type = "fixed"
value = [1.0]

[[bc.T]]
patch = "outlet"
type = "zero_gradient"

[[bc.T]]
patch = "walls"
type = "zero_gradient"

[rom]
fields.T = { modes = 2, samples = 4 }
"#;

    #[test]
    fn parses_and_applies_preset() {
        let c = CaseConfig::from_toml(TRANSPORT).unwrap();
        let f = c.fom_config().unwrap();
        assert_eq!(f.dt, 1e-4);
        assert_eq!(f.t_final, 0.001);
        assert_eq!(c.rom.layers, 1);
        assert_eq!(c.rom_label(), "T2s4");
        assert_eq!(c.mesh().unwrap().n_cells(), 16);
    }

    #[test]
    fn reynolds_sets_viscosity() {
        let text = TRANSPORT.replace("t_final = 0.001", "t_final = 0.001\nreynolds = 200.0");
        let c = CaseConfig::from_toml(&text).unwrap();
        assert!((c.fom_config().unwrap().nu - 0.005).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_location() {
        let bad = TRANSPORT.replace("nx = 8", "nx = \"eight\"");
        match CaseConfig::from_toml(&bad) {
            Err(CliError::Config(m)) => assert!(m.contains("line"), "{m}"),
            other => panic!("{other:?}"),
        }
        let e = CaseConfig::from_toml(&TRANSPORT.replace("samples = 4", "samples = 1")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = CaseConfig::from_toml(&TRANSPORT.replace("patch = \"walls\"\ntype = \"zero_gradient\"\n\n[[bc.T]]", "patch = \"nowhere\"\ntype = \"zero_gradient\"\n\n[[bc.T]]")).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
    }

    #[test]
    fn hashes_split_by_stage() {
        let a = CaseConfig::from_toml(TRANSPORT).unwrap();
        let b = CaseConfig::from_toml(&TRANSPORT.replace("modes = 2", "modes = 3")).unwrap();
        let c = CaseConfig::from_toml(&TRANSPORT.replace("t_final = 0.001", "t_final = 0.002")).unwrap();
        assert_eq!(a.fom_hash().unwrap(), b.fom_hash().unwrap());
        assert_ne!(a.offline_hash().unwrap(), b.offline_hash().unwrap());
        assert_ne!(a.fom_hash().unwrap(), c.fom_hash().unwrap());
        assert_eq!(a.fom_hash().unwrap().len(), 64);
    }
}
