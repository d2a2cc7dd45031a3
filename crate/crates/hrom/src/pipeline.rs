//! Case stages. Each `*_stage` function works in memory and is what the
//! acceptance tests drive; the `cmd_*` functions wrap them with artifact IO.

use std::path::{Path, PathBuf};
use std::time::Instant;

use hrom_core::fom::{march_burgers, march_ns, march_transport, FomConfig, NsState, SnapshotSet};
use hrom_core::fv::{CellData, Field};
use hrom_core::hrom::{
    hrom_march_burgers, hrom_march_transport, hrom_simple_march, NsOnlineSetup, OnlineSetup, ReducedTrajectory,
};
use hrom_core::linalg::DenseMatrix;
use hrom_core::mesh::Mesh;
use hrom_core::metrics::{rel_l2, speedup_table, OpCounts, RunReport};
use hrom_core::rom::{build_magic_points, deim_select, pod_from_gram, MagicPointSet, PodBasis};

pub use crate::config::snapshot_index;
use crate::config::{sha256_hex, CaseConfig, CaseKind};
use crate::error::{CliError, PathContext, Result};
use crate::gram::gram_matrix;
use crate::io::{self, NamedField};
use crate::store::{self, FileEntry, FomManifest, OfflineField, OfflineManifest, OnlineManifest, Reconstruction, SnapshotEntry};

pub const LINEAR_SOLVER: &str = "BiCGSTAB with symmetric Gauss-Seidel preconditioning (in place of GAMG)";

/// Orthonormality required of a basis before it is written.
const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Online runs timed per report; the median is kept.
pub const ONLINE_REPEATS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Emit {
    Vtk,
    #[default]
    Csv,
    Both,
}

impl Emit {
    fn csv(self) -> bool {
        matches!(self, Emit::Csv | Emit::Both)
    }

    fn vtk(self) -> bool {
        matches!(self, Emit::Vtk | Emit::Both)
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub threads: usize,
    pub emit: Emit,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            threads: 1,
            emit: Emit::Csv,
        }
    }
}

pub struct FomOutput {
    pub mesh: Mesh,
    /// One set per reduced field, in [`CaseKind::fields`] order.
    pub snapshots: Vec<SnapshotSet>,
    pub u_frozen: Option<Field>,
    pub seconds: f64,
    pub steps: usize,
    pub linear_iterations: Option<usize>,
    pub flagged: Option<bool>,
    pub max_step_continuity: Option<f64>,
}

fn uniform(n: usize, v: &[f64]) -> Field {
    Field::uniform(n, v)
}

/// Initial full-order state of each reduced field.
pub fn initial_fields(cfg: &CaseConfig, n: usize) -> Vec<Field> {
    let i = &cfg.initial;
    match cfg.kind() {
        CaseKind::Transport => vec![uniform(n, &[i.t.unwrap_or(0.0)])],
        CaseKind::Burgers => vec![uniform(n, &i.u.unwrap_or([0.0, 0.0]))],
        CaseKind::NavierStokes => vec![uniform(n, &i.u.unwrap_or([0.0, 0.0])), uniform(n, &[i.p.unwrap_or(0.0)])],
    }
}

/// The frozen convecting velocity of a transport case: the end state of a
/// short Burgers run from a uniform field.
pub fn convecting_velocity(cfg: &CaseConfig, mesh: &Mesh, fom: &FomConfig) -> Result<Field> {
    let c = cfg
        .convecting
        .as_ref()
        .ok_or_else(|| CliError::Config("transport needs a [convecting] section".into()))?;
    let pre = FomConfig {
        dt: c.dt,
        t_final: c.t_final,
        snapshot_stride: usize::MAX,
        ..*fom
    };
    let bc_u = cfg.field_bcs(mesh, "U")?;
    Ok(march_burgers(mesh, &pre, &bc_u, &uniform(mesh.n_cells(), &c.u0))?.final_field)
}

pub fn fom_stage(cfg: &CaseConfig) -> Result<FomOutput> {
    let mesh = cfg.mesh()?;
    let fom = cfg.fom_config()?;
    let n = mesh.n_cells();
    let init = initial_fields(cfg, n);
    let out = match cfg.kind() {
        CaseKind::Transport => {
            let u = convecting_velocity(cfg, &mesh, &fom)?;
            let (bu, bt) = (cfg.field_bcs(&mesh, "U")?, cfg.field_bcs(&mesh, "T")?);
            let t0 = Instant::now();
            let r = march_transport(&mesh, &fom, &bu, &bt, &u, &init[0])?;
            FomOutput {
                seconds: t0.elapsed().as_secs_f64(),
                steps: r.steps,
                linear_iterations: Some(r.linear_iterations),
                snapshots: vec![r.snapshots],
                u_frozen: Some(u),
                flagged: None,
                max_step_continuity: None,
                mesh,
            }
        }
        CaseKind::Burgers => {
            let bu = cfg.field_bcs(&mesh, "U")?;
            let t0 = Instant::now();
            let r = march_burgers(&mesh, &fom, &bu, &init[0])?;
            FomOutput {
                seconds: t0.elapsed().as_secs_f64(),
                steps: r.steps,
                linear_iterations: Some(r.linear_iterations),
                snapshots: vec![r.snapshots],
                u_frozen: None,
                flagged: None,
                max_step_continuity: None,
                mesh,
            }
        }
        CaseKind::NavierStokes => {
            let (bu, bp) = (cfg.field_bcs(&mesh, "U")?, cfg.field_bcs(&mesh, "p")?);
            let state = NsState {
                u: init[0].clone(),
                p: init[1].clone(),
            };
            let t0 = Instant::now();
            let r = march_ns(&mesh, &fom, &bu, &bp, &state)?;
            FomOutput {
                seconds: t0.elapsed().as_secs_f64(),
                steps: r.steps,
                linear_iterations: None,
                snapshots: vec![r.u_snapshots, r.p_snapshots],
                u_frozen: None,
                flagged: Some(r.flagged),
                max_step_continuity: Some(r.step_residuals.iter().copied().fold(0.0, f64::max)),
                mesh,
            }
        }
    };
    let bound_scale = cfg.norm_factor() * cfg.bc_scale(&out.mesh)?;
    for s in &out.snapshots {
        let bound = bound_scale * (s.n_dofs() as f64).sqrt();
        let m = s.max_column_norm();
        if !(m <= bound) {
            return Err(CliError::Solver(hrom_core::Error::InvalidArgument(format!(
                "snapshot norm {m:e} of field {} exceeds the sanity bound {bound:e}",
                s.field()
            ))));
        }
    }
    Ok(out)
}

pub struct OfflineOutput {
    /// `(basis, points)` per reduced field.
    pub fields: Vec<(PodBasis, MagicPointSet)>,
    pub seconds: f64,
}

pub fn offline_stage(cfg: &CaseConfig, mesh: &Mesh, snapshots: &[SnapshotSet], threads: usize) -> Result<OfflineOutput> {
    let t0 = Instant::now();
    let mut fields = Vec::new();
    for (&(name, comps), snaps) in cfg.kind().fields().iter().zip(snapshots) {
        let r = cfg.field_rom(name)?;
        let gram = gram_matrix(snaps, threads);
        let basis = pod_from_gram(snaps, &gram, r.modes, comps)?;
        let err = basis.orthonormality_error();
        if !(err <= ORTHONORMALITY_TOL) {
            return Err(CliError::Solver(hrom_core::Error::InvalidArgument(format!(
                "basis of {name} lost orthonormality ({err:e})"
            ))));
        }
        let s = r.samples.min(basis.n_dofs());
        let deim = deim_select(basis.phi(), s)?;
        let points = build_magic_points(mesh, name, comps, &deim, &cfg.rom.obligatory, cfg.rom.layers)?;
        fields.push((basis, points));
    }
    Ok(OfflineOutput {
        fields,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

pub struct OnlineOutput {
    pub trajectories: Vec<(String, ReducedTrajectory)>,
    /// `(time, [(field, values)])`
    pub reconstructions: Vec<(f64, Vec<(String, Field)>)>,
    pub ops: OpCounts,
    pub steps: usize,
    /// Median wall time over the repetitions.
    pub seconds: f64,
    pub run_seconds: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs the reduced model `repeats` times (at least once) and keeps the
/// median wall time. All repetitions are deterministic; the first one's
/// results are returned.
pub fn online_stage(
    cfg: &CaseConfig,
    mesh: &Mesh,
    offline: &[(PodBasis, MagicPointSet)],
    u_frozen: Option<&dyn CellData>,
    repeats: usize,
) -> Result<OnlineOutput> {
    let fom = cfg.fom_config()?;
    let n = mesh.n_cells();
    let init = initial_fields(cfg, n);
    let a0: Vec<Vec<f64>> = offline
        .iter()
        .zip(&init)
        .map(|((b, _), f)| b.project(f.values()))
        .collect::<hrom_core::Result<_>>()?;
    let times = &cfg.output.times;
    let stride = cfg.output.trajectory_stride;
    let names: Vec<String> = cfg.kind().fields().iter().map(|(f, _)| f.to_string()).collect();
    let mut timings = Vec::new();
    let mut first: Option<OnlineOutput> = None;
    for _ in 0..repeats.max(1) {
        let t0 = Instant::now();
        let result = match cfg.kind() {
            CaseKind::Transport | CaseKind::Burgers => {
                let (basis, points) = &offline[0];
                let setup = OnlineSetup {
                    basis,
                    points,
                    a0: &a0[0],
                    output_times: times,
                    trajectory_stride: stride,
                };
                let bu = cfg.field_bcs(mesh, "U")?;
                let run = if cfg.kind() == CaseKind::Transport {
                    let bt = cfg.field_bcs(mesh, "T")?;
                    let u = u_frozen.ok_or_else(|| CliError::Stale("transport online run needs the convecting velocity".into()))?;
                    hrom_march_transport(mesh, &fom, &bu, &bt, u, &setup)?
                } else {
                    hrom_march_burgers(mesh, &fom, &bu, &setup)?
                };
                let elapsed = t0.elapsed().as_secs_f64();
                (
                    elapsed,
                    OnlineOutput {
                        trajectories: vec![(names[0].clone(), run.trajectory)],
                        reconstructions: run.reconstructions.into_iter().map(|(t, f)| (t, vec![(names[0].clone(), f)])).collect(),
                        ops: run.ops,
                        steps: run.steps,
                        seconds: 0.0,
                        run_seconds: Vec::new(),
                    },
                )
            }
            CaseKind::NavierStokes => {
                let (bu, bp) = (cfg.field_bcs(mesh, "U")?, cfg.field_bcs(mesh, "p")?);
                let setup = NsOnlineSetup {
                    basis_u: &offline[0].0,
                    basis_p: &offline[1].0,
                    points_u: &offline[0].1,
                    points_p: &offline[1].1,
                    a_u0: &a0[0],
                    a_p0: &a0[1],
                    output_times: times,
                    trajectory_stride: stride,
                };
                let run = hrom_simple_march(mesh, &fom, &bu, &bp, &setup)?;
                let elapsed = t0.elapsed().as_secs_f64();
                (
                    elapsed,
                    OnlineOutput {
                        trajectories: vec![(names[0].clone(), run.u), (names[1].clone(), run.p)],
                        reconstructions: run
                            .reconstructions
                            .into_iter()
                            .map(|(t, u, p)| (t, vec![(names[0].clone(), u), (names[1].clone(), p)]))
                            .collect(),
                        ops: run.ops,
                        steps: run.steps,
                        seconds: 0.0,
                        run_seconds: Vec::new(),
                    },
                )
            }
        };
        timings.push(result.0);
        if first.is_none() {
            first = Some(result.1);
        }
    }
    let mut out = first.expect("at least one run");
    out.seconds = median(timings.clone());
    out.run_seconds = timings;
    Ok(out)
}

/// Relative errors of the reconstructions against the snapshots.
pub fn reconstruction_errors(
    cfg: &CaseConfig,
    mesh: &Mesh,
    snapshots: &[SnapshotSet],
    online: &OnlineOutput,
) -> Result<Vec<(f64, String, f64)>> {
    let fom = cfg.fom_config()?;
    let v = mesh.volumes();
    let mut errors = Vec::new();
    for (t, fields) in &online.reconstructions {
        let k = snapshot_index(&fom, *t).ok_or_else(|| CliError::Config(format!("output time {t} is not a snapshot time")))?;
        for ((name, f), s) in fields.iter().zip(snapshots) {
            errors.push((*t, name.clone(), rel_l2(f.values(), s.column(k), &v)?));
        }
    }
    Ok(errors)
}

// ---------------------------------------------------------------- artifacts

fn mesh_bytes(mesh: &Mesh) -> Result<Vec<u8>> {
    let mut b = Vec::new();
    io::write_mesh(&mut b, mesh)?;
    Ok(b)
}

fn emit_fields(dir: &Path, stem: &str, title: &str, mesh: &Mesh, fields: &[NamedField<'_>], emit: Emit) -> Result<Vec<FileEntry>> {
    let mut out = Vec::new();
    if emit.csv() {
        out.push(store::write_bytes(dir, &format!("{stem}.csv"), io::fields_csv(mesh, fields).as_bytes())?);
    }
    if emit.vtk() {
        out.push(store::write_bytes(dir, &format!("{stem}.vtk"), io::fields_vtk(mesh, title, fields).as_bytes())?);
    }
    Ok(out)
}

fn time_tag(t: f64) -> String {
    format!("t{t}")
}

fn with_diagnostic<T>(dir: &Path, r: Result<T>) -> Result<T> {
    if let Err(e) = &r {
        if matches!(e, CliError::Solver(_)) {
            let _ = std::fs::create_dir_all(dir);
            let _ = std::fs::write(dir.join("diagnostic.txt"), format!("{e}\n"));
        }
    }
    r
}

/// Full-order run: writes the mesh, the snapshot store, the manifest and the
/// final fields.
pub fn cmd_fom(cfg: &CaseConfig, opts: &RunOptions) -> Result<FomManifest> {
    let dir = store::fom_dir(&opts.out);
    let out = with_diagnostic(&dir, fom_stage(cfg))?;
    store::create_dir(&dir)?;
    let _ = std::fs::remove_file(dir.join("diagnostic.txt"));
    let mb = mesh_bytes(&out.mesh)?;
    let mesh_hash = sha256_hex(&mb);
    let mesh_entry = store::write_bytes(&dir, "mesh.hfvm", &mb)?;
    let mut fields = Vec::new();
    for (&(name, comps), s) in cfg.kind().fields().iter().zip(&out.snapshots) {
        let file = store::write_with(&dir, &format!("{name}.hfvd"), |w| io::write_dense_columns(w, s.n_dofs(), s.columns()))?;
        fields.push(SnapshotEntry {
            name: name.to_string(),
            components: comps,
            n_dofs: s.n_dofs(),
            file,
        });
    }
    let convecting = match &out.u_frozen {
        Some(u) => Some(store::write_with(&dir, "U_convecting.hfvd", |w| {
            io::write_dense_columns(w, u.values().len(), std::slice::from_ref(&u.values().to_vec()))
        })?),
        None => None,
    };
    let last: Vec<NamedField<'_>> = cfg
        .kind()
        .fields()
        .iter()
        .zip(&out.snapshots)
        .map(|(&(name, comps), s)| NamedField {
            name,
            components: comps,
            values: s.last().expect("initial column"),
        })
        .collect();
    let hash = cfg.fom_hash()?;
    emit_fields(&dir, "final", &format!("{} final fom {hash}", cfg.case.name), &out.mesh, &last, opts.emit)?;
    let manifest = FomManifest {
        case: cfg.case.name.clone(),
        fom_hash: hash,
        mesh_hash,
        seed: cfg.case.seed,
        linear_solver: LINEAR_SOLVER.into(),
        steps: out.steps,
        linear_iterations: out.linear_iterations,
        flagged: out.flagged,
        max_step_continuity: out.max_step_continuity,
        mesh: mesh_entry,
        convecting,
        fields,
        times: out.snapshots[0].times().to_vec(),
    };
    store::write_manifest(&dir, &manifest)?;
    store::write_timing(&dir, &[("fom_seconds", out.seconds)])?;
    Ok(manifest)
}

/// Snapshot store contents loaded back from disk.
pub struct LoadedFom {
    pub manifest: FomManifest,
    pub mesh: Mesh,
    pub snapshots: Vec<SnapshotSet>,
    pub u_frozen: Option<Field>,
    pub seconds: f64,
}

pub fn load_fom(dir: &Path, expected_hash: Option<&str>) -> Result<LoadedFom> {
    let manifest: FomManifest = store::read_manifest(dir)?;
    if let Some(h) = expected_hash {
        store::check_hash("snapshot store", &manifest.fom_hash, h)?;
    }
    let mb = store::read_verified(dir, &manifest.mesh)?;
    let mesh = io::read_mesh(&mut mb.as_slice())?;
    let mut snapshots = Vec::new();
    for e in &manifest.fields {
        let bytes = store::read_verified(dir, &e.file)?;
        let (len, cols) = io::read_dense_columns(&mut bytes.as_slice())?;
        if len != e.n_dofs || cols.len() != manifest.times.len() {
            return Err(CliError::Format(format!("snapshot file of {} has the wrong shape", e.name)));
        }
        let mut s = SnapshotSet::new(e.name.clone(), len);
        for (t, c) in manifest.times.iter().zip(cols) {
            s.push(*t, c)?;
        }
        snapshots.push(s);
    }
    let u_frozen = match &manifest.convecting {
        Some(e) => {
            let bytes = store::read_verified(dir, e)?;
            let (_, mut cols) = io::read_dense_columns(&mut bytes.as_slice())?;
            Some(Field::new(2, cols.pop().unwrap_or_default())?)
        }
        None => None,
    };
    let seconds = store::read_timing(dir, "fom_seconds")?;
    Ok(LoadedFom {
        manifest,
        mesh,
        snapshots,
        u_frozen,
        seconds,
    })
}

/// Offline training from the snapshot store.
pub fn cmd_offline(cfg: &CaseConfig, opts: &RunOptions) -> Result<OfflineManifest> {
    let fom = load_fom(&store::fom_dir(&opts.out), Some(&cfg.fom_hash()?))?;
    let label = cfg.rom_label();
    let dir = store::offline_dir(&opts.out, &label);
    let off = with_diagnostic(&dir, offline_stage(cfg, &fom.mesh, &fom.snapshots, opts.threads))?;
    store::create_dir(&dir)?;
    let mut fields = Vec::new();
    for ((basis, points), &(name, comps)) in off.fields.iter().zip(cfg.kind().fields()) {
        let r = cfg.field_rom(name)?;
        let basis_file = store::write_with(&dir, &format!("basis_{name}.hfvd"), |w| io::write_dense(w, basis.phi()))?;
        let sv: String = std::iter::once("k,singular_value\n".to_string())
            .chain(basis.singular_values().iter().enumerate().map(|(k, s)| format!("{},{s:e}\n", k + 1)))
            .collect();
        let sv_file = store::write_bytes(&dir, &format!("singular_values_{name}.csv"), sv.as_bytes())?;
        let pts_file = store::write_bytes(&dir, &format!("points_{name}.csv"), io::points_csv(points).as_bytes())?;
        fields.push(OfflineField {
            name: name.to_string(),
            components: comps,
            requested_modes: r.modes,
            rank: basis.rank(),
            samples: r.samples,
            sampled_rows: points.len(),
            closure_cells: points.closure.len(),
            orthonormality_error: basis.orthonormality_error(),
            deim: points.deim.clone(),
            basis: basis_file,
            singular_values: sv_file,
            points: pts_file,
        });
    }
    let manifest = OfflineManifest {
        case: cfg.case.name.clone(),
        fom_hash: cfg.fom_hash()?,
        offline_hash: cfg.offline_hash()?,
        mesh_hash: fom.manifest.mesh_hash.clone(),
        layers: cfg.rom.layers,
        obligatory_patches: cfg.rom.obligatory.clone(),
        fields,
    };
    store::write_manifest(&dir, &manifest)?;
    store::write_timing(&dir, &[("offline_seconds", off.seconds)])?;
    Ok(manifest)
}

pub fn load_offline(dir: &Path, mesh: &Mesh, expected_hash: &str) -> Result<(OfflineManifest, Vec<(PodBasis, MagicPointSet)>, f64)> {
    let manifest: OfflineManifest = store::read_manifest(dir)?;
    store::check_hash("offline", &manifest.offline_hash, expected_hash)?;
    let mut fields = Vec::new();
    for f in &manifest.fields {
        let bytes = store::read_verified(dir, &f.basis)?;
        let phi: DenseMatrix = io::read_dense(&mut bytes.as_slice())?;
        let sv_bytes = store::read_verified(dir, &f.singular_values)?;
        let sv = String::from_utf8_lossy(&sv_bytes)
            .lines()
            .skip(1)
            .map(|l| {
                l.split_once(',')
                    .and_then(|(_, v)| v.parse::<f64>().ok())
                    .ok_or_else(|| CliError::Format("bad singular value row".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        let basis = PodBasis::from_parts(f.name.clone(), f.components, phi, sv).map_err(|e| CliError::Format(e.to_string()))?;
        let points = build_magic_points(mesh, &f.name, f.components, &f.deim, &manifest.obligatory_patches, manifest.layers)?;
        fields.push((basis, points));
    }
    let seconds = store::read_timing(dir, "offline_seconds")?;
    Ok((manifest, fields, seconds))
}

/// Online replay: trajectory CSVs, reconstructions and the run report.
pub fn cmd_online(cfg: &CaseConfig, opts: &RunOptions) -> Result<RunReport> {
    let label = cfg.rom_label();
    let fom = load_fom(&store::fom_dir(&opts.out), Some(&cfg.fom_hash()?))?;
    let (off_manifest, offline, offline_seconds) = load_offline(&store::offline_dir(&opts.out, &label), &fom.mesh, &cfg.offline_hash()?)?;
    if off_manifest.mesh_hash != fom.manifest.mesh_hash {
        return Err(CliError::Stale("offline artifacts were built on another mesh".into()));
    }
    let dir = store::online_dir(&opts.out, &label);
    let u = fom.u_frozen.as_ref().map(|f| f as &dyn CellData);
    let on = with_diagnostic(&dir, online_stage(cfg, &fom.mesh, &offline, u, ONLINE_REPEATS))?;
    store::create_dir(&dir)?;
    let mut trajectories = Vec::new();
    for (name, traj) in &on.trajectories {
        trajectories.push(store::write_bytes(&dir, &format!("trajectory_{name}.csv"), trajectory_csv(traj).as_bytes())?);
    }
    let mut reconstructions = Vec::new();
    for (t, fields) in &on.reconstructions {
        let mut named = Vec::new();
        for (name, f) in fields {
            let file = store::write_with(&dir, &format!("{name}_{}.hfvd", time_tag(*t)), |w| {
                io::write_dense_columns(w, f.values().len(), std::slice::from_ref(&f.values().to_vec()))
            })?;
            reconstructions.push(Reconstruction {
                time: *t,
                field: name.clone(),
                components: f.n_components(),
                file,
            });
            named.push(NamedField {
                name,
                components: f.n_components(),
                values: f.values(),
            });
        }
        emit_fields(&dir, &format!("fields_{}", time_tag(*t)), &format!("{} online {label} t={t}", cfg.case.name), &fom.mesh, &named, opts.emit)?;
    }
    let report = RunReport {
        case: cfg.case.name.clone(),
        modes: offline.iter().map(|(b, _)| (b.field().to_string(), b.rank())).collect(),
        fom_seconds: fom.seconds,
        offline_seconds,
        online_seconds: on.seconds,
        errors: reconstruction_errors(cfg, &fom.mesh, &fom.snapshots, &on)?,
        ops: on.ops,
        config_hash: cfg.offline_hash()?,
    };
    let report_file = report_name(&report);
    let path = dir.join(&report_file);
    std::fs::write(&path, report.to_text()).at(path)?;
    store::write_manifest(
        &dir,
        &OnlineManifest {
            case: cfg.case.name.clone(),
            fom_hash: cfg.fom_hash()?,
            offline_hash: cfg.offline_hash()?,
            mesh_hash: fom.manifest.mesh_hash.clone(),
            steps: on.steps,
            trajectories,
            reconstructions,
            report: report_file,
        },
    )?;
    let runs: Vec<(String, f64)> = on.run_seconds.iter().enumerate().map(|(k, s)| (format!("online_run{}_seconds", k + 1), *s)).collect();
    let mut timing: Vec<(&str, f64)> = vec![("online_seconds", on.seconds)];
    timing.extend(runs.iter().map(|(k, s)| (k.as_str(), *s)));
    store::write_timing(&dir, &timing)?;
    Ok(report)
}

/// `report_<case>_<hash prefix>.txt`
pub fn report_name(r: &RunReport) -> String {
    let h = r.config_hash.get(..12).unwrap_or(&r.config_hash);
    format!("report_{}_{h}.txt", r.case)
}

/// `time,a_1..a_r,residual`
pub fn trajectory_csv(t: &ReducedTrajectory) -> String {
    let r = t.coefficients.first().map_or(0, Vec::len);
    let mut s = String::from("time");
    for k in 1..=r {
        s.push_str(&format!(",a_{k}"));
    }
    s.push_str(",residual\n");
    for ((time, a), res) in t.times.iter().zip(&t.coefficients).zip(&t.residuals) {
        s.push_str(&format!("{time:e}"));
        for v in a {
            s.push_str(&format!(",{v:e}"));
        }
        s.push_str(&format!(",{res:e}\n"));
    }
    s
}

/// Values of every field at time `t` from either a snapshot store or an
/// online directory, with the mesh hash.
fn fields_at(dir: &Path, t: f64) -> Result<(String, Vec<(String, usize, Vec<f64>)>)> {
    let close = |a: f64| (a - t).abs() <= 1e-9 * t.abs().max(1.0);
    if let Ok(m) = store::read_manifest::<FomManifest>(dir) {
        let k = m
            .times
            .iter()
            .position(|&x| close(x))
            .ok_or_else(|| CliError::Stale(format!("{} has no snapshot at t={t}", dir.display())))?;
        let mut out = Vec::new();
        for e in &m.fields {
            let bytes = store::read_verified(dir, &e.file)?;
            let (_, cols) = io::read_dense_columns(&mut bytes.as_slice())?;
            out.push((e.name.clone(), e.components, cols[k].clone()));
        }
        return Ok((m.mesh_hash, out));
    }
    let m: OnlineManifest = store::read_manifest(dir)?;
    let mut out = Vec::new();
    for r in m.reconstructions.iter().filter(|r| close(r.time)) {
        let bytes = store::read_verified(dir, &r.file)?;
        let (_, mut cols) = io::read_dense_columns(&mut bytes.as_slice())?;
        out.push((r.field.clone(), r.components, cols.pop().unwrap_or_default()));
    }
    if out.is_empty() {
        return Err(CliError::Stale(format!("{} has no reconstruction at t={t}", dir.display())));
    }
    Ok((m.mesh_hash, out))
}

fn mesh_from(dir: &Path) -> Result<Mesh> {
    let m: FomManifest = store::read_manifest(dir)?;
    let bytes = store::read_verified(dir, &m.mesh)?;
    io::read_mesh(&mut bytes.as_slice())
}

/// Errors of `online` against `reference` at `times`; writes `errors.csv` and
/// the pointwise error fields `|f - g|` into `out`.
pub fn cmd_compare(reference: &Path, online: &Path, times: &[f64], out: &Path, emit: Emit) -> Result<Vec<(f64, String, f64)>> {
    let mesh = mesh_from(reference)?;
    let mesh_hash = sha256_hex(&mesh_bytes(&mesh)?);
    let volumes = mesh.volumes();
    store::create_dir(out)?;
    let mut rows = Vec::new();
    for &t in times {
        let (h_ref, reference_fields) = fields_at(reference, t)?;
        let (h_on, online_fields) = fields_at(online, t)?;
        if h_ref != mesh_hash || h_on != mesh_hash {
            return Err(CliError::Stale("compared runs use different meshes".into()));
        }
        let mut diffs = Vec::new();
        for (name, comps, g) in &reference_fields {
            let Some((_, _, f)) = online_fields.iter().find(|(n, _, _)| n == name) else {
                continue;
            };
            rows.push((t, name.clone(), rel_l2(f, g, &volumes)?));
            let d: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b).abs()).collect();
            diffs.push((format!("err_{name}"), *comps, d));
        }
        let named: Vec<NamedField<'_>> = diffs
            .iter()
            .map(|(n, c, v)| NamedField {
                name: n,
                components: *c,
                values: v,
            })
            .collect();
        emit_fields(out, &format!("error_{}", time_tag(t)), &format!("error t={t}"), &mesh, &named, emit)?;
    }
    let mut csv = String::from("time,field,rel_l2\n");
    for (t, f, e) in &rows {
        csv.push_str(&format!("{t},{f},{e:e}\n"));
    }
    let path = out.join("errors.csv");
    std::fs::write(&path, csv).at(path)?;
    Ok(rows)
}

/// Parses a report written by [`RunReport::to_text`].
pub fn parse_report(text: &str) -> Result<RunReport> {
    let mut r = RunReport {
        case: String::new(),
        modes: Vec::new(),
        fom_seconds: 0.0,
        offline_seconds: 0.0,
        online_seconds: 0.0,
        errors: Vec::new(),
        ops: OpCounts::default(),
        config_hash: String::new(),
    };
    let bad = |l: &str| CliError::Format(format!("bad report line `{l}`"));
    for line in text.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| bad(line))?;
        let num = || v.parse::<f64>().map_err(|_| bad(line));
        let int = || v.parse::<u64>().map_err(|_| bad(line));
        match k {
            "case" => r.case = v.to_string(),
            "config_hash" => r.config_hash = v.to_string(),
            "modes" => {
                r.modes = v
                    .split(',')
                    .filter(|p| !p.is_empty())
                    .map(|p| {
                        let (f, n) = p.strip_prefix("N_").and_then(|p| p.split_once('=')).ok_or_else(|| bad(line))?;
                        Ok((f.to_string(), n.parse().map_err(|_| bad(line))?))
                    })
                    .collect::<Result<_>>()?
            }
            "fom_seconds" => r.fom_seconds = num()?,
            "offline_seconds" => r.offline_seconds = num()?,
            "online_seconds" => r.online_seconds = num()?,
            "hyper_assemble_madds" => r.ops.hyper_assemble_madds = int()?,
            "hyper_assemblies" => r.ops.hyper_assemblies = int()?,
            "reconstruct_madds" => r.ops.reconstruct_madds = int()?,
            "face_visits" => r.ops.face_visits = int()?,
            "reduced_solves" => r.ops.reduced_solves = int()?,
            "full_field_touches" => r.ops.full_field_touches = int()?,
            _ if k.starts_with("rel_l2[") => {
                let inner = k.trim_start_matches("rel_l2[").trim_end_matches(']');
                let (f, t) = inner.split_once('@').ok_or_else(|| bad(line))?;
                r.errors.push((t.parse().map_err(|_| bad(line))?, f.to_string(), num()?));
            }
            _ => {}
        }
    }
    Ok(r)
}

/// Speed-up table over every online directory under `root`.
pub fn cmd_report(root: &Path) -> Result<(String, String)> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .at(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("online-")))
        .collect();
    dirs.sort();
    let mut reports = Vec::new();
    for d in &dirs {
        let m: OnlineManifest = store::read_manifest(d)?;
        let path = d.join(&m.report);
        let text = std::fs::read_to_string(&path).at(path)?;
        reports.push(parse_report(&text)?);
    }
    if reports.is_empty() {
        return Err(CliError::Stale(format!("no online runs under {}", root.display())));
    }
    let (text, csv) = speedup_table(&reports);
    for (name, body) in [("speedup.txt", &text), ("speedup.csv", &csv)] {
        let path = root.join(name);
        std::fs::write(&path, body).at(path)?;
    }
    Ok((text, csv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub preset: String,
    pub n_cells: usize,
    pub madds_per_assembly: f64,
    pub sampled_rows: usize,
    pub fom_seconds: f64,
    pub online_seconds: f64,
}

/// Online cost on the default and fine step meshes for the same reduction
/// settings. Returns the rows and the relative spread of the per-assembly
/// multiply-add counts.
pub fn bench_scaling(cfg: &CaseConfig, threads: usize) -> Result<(Vec<ScalingRow>, f64)> {
    if cfg.kind() != CaseKind::Transport {
        return Err(CliError::Config("bench-scaling runs the transport case".into()));
    }
    let mut rows = Vec::new();
    for preset in ["default", "fine"] {
        let mut c = cfg.clone();
        c.geometry = crate::config::GeometrySection::Step {
            preset: Some(preset.into()),
            upstream_length: None,
            downstream_length: None,
            inlet_height: None,
            step_height: None,
            nx_upstream: None,
            nx_downstream: None,
            ny_inlet: None,
            ny_step: None,
        };
        let fom = fom_stage(&c)?;
        let off = offline_stage(&c, &fom.mesh, &fom.snapshots, threads)?;
        let u = fom.u_frozen.as_ref().map(|f| f as &dyn CellData);
        let on = online_stage(&c, &fom.mesh, &off.fields, u, 1)?;
        rows.push(ScalingRow {
            preset: preset.into(),
            n_cells: fom.mesh.n_cells(),
            madds_per_assembly: on.ops.madds_per_assembly(),
            sampled_rows: off.fields[0].1.len(),
            fom_seconds: fom.seconds,
            online_seconds: on.seconds,
        });
    }
    let a = rows[0].madds_per_assembly;
    let b = rows[1].madds_per_assembly;
    let spread = (a - b).abs() / a.max(b);
    Ok((rows, spread))
}

pub fn scaling_table(rows: &[ScalingRow], spread: f64) -> String {
    let mut s = String::from("mesh,n_cells,sampled_rows,madds_per_assembly,fom_seconds,online_seconds\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.4},{:.4}\n",
            r.preset, r.n_cells, r.sampled_rows, r.madds_per_assembly, r.fom_seconds, r.online_seconds
        ));
    }
    s.push_str(&format!("# relative spread of madds per assembly: {spread:.4e}\n"));
    s
}
