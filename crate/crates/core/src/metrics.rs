//! Error norms, operation counters and speed-up tables.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

/// Volume-weighted relative L2 distance `||f - g||_V / ||g||_V`.
///
/// `f` and `g` are component-blocked over `volumes.len()` cells. When `g` is
/// identically zero the absolute norm of `f` is returned.
pub fn rel_l2(f: &[f64], g: &[f64], volumes: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::DimensionMismatch {
            context: "rel_l2 field lengths",
            expected: g.len(),
            found: f.len(),
        });
    }
    let n = volumes.len();
    if n == 0 || f.len() % n != 0 {
        return Err(Error::DimensionMismatch {
            context: "rel_l2 cell count",
            expected: n,
            found: f.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (a, b)) in f.iter().zip(g).enumerate() {
        let v = volumes[i % n];
        num += v * (a - b) * (a - b);
        den += v * b * b;
    }
    if den == 0.0 {
        Ok(libm::sqrt(num))
    } else {
        Ok(libm::sqrt(num / den))
    }
}

/// Instrumented operation counts of an online run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Multiply-adds spent in masked assembly, `sum_k nnz(row k) * N_r`.
    pub hyper_assemble_madds: u64,
    pub hyper_assemblies: u64,
    /// Multiply-adds spent reconstructing local values from coefficients.
    pub reconstruct_madds: u64,
    /// Faces visited by the row-restricted assemblers.
    pub face_visits: u64,
    pub reduced_solves: u64,
    /// Operations that touched an array of full mesh size.
    pub full_field_touches: u64,
}

impl OpCounts {
    pub fn merge(&mut self, other: &OpCounts) {
        self.hyper_assemble_madds += other.hyper_assemble_madds;
        self.hyper_assemblies += other.hyper_assemblies;
        self.reconstruct_madds += other.reconstruct_madds;
        self.face_visits += other.face_visits;
        self.reduced_solves += other.reduced_solves;
        self.full_field_touches += other.full_field_touches;
    }

    /// Mean masked-assembly cost per assembly.
    pub fn madds_per_assembly(&self) -> f64 {
        if self.hyper_assemblies == 0 {
            0.0
        } else {
            self.hyper_assemble_madds as f64 / self.hyper_assemblies as f64
        }
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "hyper_assemble_madds={}\nhyper_assemblies={}\nreconstruct_madds={}\nface_visits={}\nreduced_solves={}\nfull_field_touches={}\n",
            self.hyper_assemble_madds,
            self.hyper_assemblies,
            self.reconstruct_madds,
            self.face_visits,
            self.reduced_solves,
            self.full_field_touches
        )
    }
}

/// Timing and accuracy summary of one offline/online run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub case: String,
    /// Mode counts per field, e.g. `[("U", 5), ("p", 4)]`.
    pub modes: Vec<(String, usize)>,
    pub fom_seconds: f64,
    pub offline_seconds: f64,
    pub online_seconds: f64,
    /// `(time, field, relative L2 error)`.
    pub errors: Vec<(f64, String, f64)>,
    pub ops: OpCounts,
    pub config_hash: String,
}

impl RunReport {
    /// FOM time over online time.
    pub fn fom_speedup(&self) -> f64 {
        ratio(self.fom_seconds, self.online_seconds)
    }

    /// Offline time over online time.
    pub fn offline_ratio(&self) -> f64 {
        ratio(self.offline_seconds, self.online_seconds)
    }

    pub fn mode_label(&self) -> String {
        let parts: Vec<String> = self.modes.iter().map(|(f, n)| format!("N_{f}={n}")).collect();
        parts.join(",")
    }

    /// Plain `key=value` text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case={}", self.case);
        let _ = writeln!(s, "modes={}", self.mode_label());
        let _ = writeln!(s, "config_hash={}", self.config_hash);
        let _ = writeln!(s, "fom_seconds={:.6}", self.fom_seconds);
        let _ = writeln!(s, "offline_seconds={:.6}", self.offline_seconds);
        let _ = writeln!(s, "online_seconds={:.6}", self.online_seconds);
        let _ = writeln!(s, "speedup_fom_over_online={:.4}", self.fom_speedup());
        let _ = writeln!(s, "ratio_offline_over_online={:.4}", self.offline_ratio());
        for (t, f, e) in &self.errors {
            let _ = writeln!(s, "rel_l2[{f}@{t}]={e:.6e}");
        }
        s.push_str(&self.ops.to_key_values());
        s
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        f64::INFINITY
    }
}

/// Aligned text table and CSV twin of the timing columns of `reports`.
pub fn speedup_table(reports: &[RunReport]) -> (String, String) {
    let header = ["case", "modes", "fom_s", "offline_s", "online_s", "fom/online", "offline/online"];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            [
                r.case.clone(),
                r.mode_label(),
                format!("{:.4}", r.fom_seconds),
                format!("{:.4}", r.offline_seconds),
                format!("{:.4}", r.online_seconds),
                format!("{:.3}", r.fom_speedup()),
                format!("{:.3}", r.offline_ratio()),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut text = String::new();
    let line = |cells: &[&str], out: &mut String| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  "));
    };
    line(&header, &mut text);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&cells, &mut text);
    }
    let mut csv = String::from("case,modes,fom_seconds,offline_seconds,online_seconds,fom_over_online,offline_over_online\n");
    for r in reports {
        let _ = writeln!(
            csv,
            "{},\"{}\",{},{},{},{},{}",
            r.case,
            r.mode_label(),
            r.fom_seconds,
            r.offline_seconds,
            r.online_seconds,
            r.fom_speedup(),
            r.offline_ratio()
        );
    }
    (text, csv)
}
