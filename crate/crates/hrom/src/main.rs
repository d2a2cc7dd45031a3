use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hrom::pipeline::{self, Emit, RunOptions};
use hrom::{CaseConfig, Result};

#[derive(Parser)]
#[command(name = "hrom", version, about = "Hyper-reduced finite-volume models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Vtk,
    Csv,
    Both,
}

impl From<EmitArg> for Emit {
    fn from(e: EmitArg) -> Self {
        match e {
            EmitArg::Vtk => Emit::Vtk,
            EmitArg::Csv => Emit::Csv,
            EmitArg::Both => Emit::Both,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Case file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Artifact root.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `case.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the offline stage (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    emit: EmitArg,
}

impl Common {
    fn load(&self) -> Result<(CaseConfig, RunOptions)> {
        let mut cfg = CaseConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.case.seed = s;
        }
        let threads = self
            .threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let opts = RunOptions {
            out: self.out.clone(),
            threads: threads.max(1),
            emit: self.emit.into(),
        };
        Ok((cfg, opts))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full-order run and snapshot store.
    Fom(Common),
    /// POD bases, DEIM indices and magic points from the snapshot store.
    Offline(Common),
    /// Hyper-reduced replay with reconstructions and a run report.
    Online(Common),
    /// Relative errors between two runs (full-order or online directories).
    Compare {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        online: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        emit: EmitArg,
    },
    /// Speed-up table over every online run under an artifact root.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Online cost on the default and fine step meshes.
    BenchScaling(Common),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fom(c) => {
            let (cfg, opts) = c.load()?;
            let m = pipeline::cmd_fom(&cfg, &opts)?;
            println!("fom {} steps, {} snapshots, hash {}", m.steps, m.times.len(), m.fom_hash);
            if m.flagged == Some(true) {
                eprintln!("warning: continuity residual above threshold");
            }
        }
        Command::Offline(c) => {
            let (cfg, opts) = c.load()?;
            let m = pipeline::cmd_offline(&cfg, &opts)?;
            for f in &m.fields {
                println!("{}: rank {}, {} sampled rows, {} closure cells", f.name, f.rank, f.sampled_rows, f.closure_cells);
            }
        }
        Command::Online(c) => {
            let (cfg, opts) = c.load()?;
            print!("{}", pipeline::cmd_online(&cfg, &opts)?.to_text());
        }
        Command::Compare {
            reference,
            online,
            times,
            out,
            emit,
        } => {
            for (t, f, e) in pipeline::cmd_compare(&reference, &online, &times, &out, emit.into())? {
                println!("t={t} {f} rel_l2={e:.6e}");
            }
        }
        Command::Report { out } => print!("{}", pipeline::cmd_report(&out)?.0),
        Command::BenchScaling(c) => {
            let (cfg, opts) = c.load()?;
            let (rows, spread) = pipeline::bench_scaling(&cfg, opts.threads)?;
            let table = pipeline::scaling_table(&rows, spread);
            std::fs::create_dir_all(&opts.out)?;
            std::fs::write(opts.out.join("scaling.csv"), &table)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
