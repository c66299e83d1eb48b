//! `stabcheck`: runs stability analyses from a config file.

mod config;
mod export;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::config::Overrides;

#[derive(Parser)]
#[command(name = "stabcheck", version, about = "Estimate and falsify stability properties of disturbed systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses of a config and write a JSON report.
    Run {
        config: PathBuf,
        /// Directory of the report; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Write the plottable parts of a report as CSV files.
    ExportPlots {
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the builtin systems.
    ListSystems,
}

fn run_command(config: &Path, out: Option<PathBuf>, ov: Overrides, jobs: Option<usize>) -> Result<i32> {
    if let Some(k) = jobs {
        if k == 0 {
            anyhow::bail!("--jobs must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let resolved = config::load(config)?.resolve(&ov)?;
    let dir = out
        .or_else(|| resolved.config.output.dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let report = run::run(&resolved)?;
    for a in &report.analyses {
        println!("{}: {:?} ({})", a.property.name(), a.report.status(), a.report.verdict.note);
    }
    for c in &report.cross_checks {
        if !c.consistent {
            for d in &c.diagnostics {
                println!("inconsistent: {d}");
            }
        }
    }
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(&resolved.config.output.report);
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&path, json + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    println!("report written to {}", path.display());
    Ok(report.summary.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            tol,
            horizon,
            jobs,
        } => run_command(&config, out, Overrides { seed, tol, horizon }, jobs),
        Command::ExportPlots { report, out } => export::export(&report, &out).map(|done| {
            for n in &done.notices {
                eprintln!("notice: {n}");
            }
            for p in &done.written {
                println!("wrote {}", p.display());
            }
            0
        }),
        Command::ListSystems => {
            for line in stabcheck::dynamics::list_builtins() {
                println!("{line}");
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
