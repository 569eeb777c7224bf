//! `soret <evolve|stationary|spectrum|diagnose> --config <path> [--out <dir>]`
//!
//! Exit status: 0 on success, 2 for a bad config or invalid model input,
//! 3 for a numerical failure (a `failure.json` is written to the output
//! directory), 1 for I/O errors.

mod commands;
mod config;
mod output;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use config::{Command, Job};
use setup::Failure;

/// Caps the worker threads used by a sweep.
const THREADS_VAR: &str = "SORET_THREADS";

#[derive(Parser)]
#[command(name = "soret", version, about = "Thermodiffusion runs from a JSON config")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FailureReport<'a> {
    command: &'static str,
    kind: &'static str,
    message: String,
    sweep_value: Option<&'a Value>,
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    dir: String,
    value: Option<&'a Value>,
    exit_code: u8,
}

fn run_job(command: Command, job: &Job) -> (u8, String) {
    match commands::run(command, job) {
        Ok(line) => (0, line),
        Err(f) => {
            let code = f.exit_code();
            if let Failure::Model(e) = &f {
                if code == 3 {
                    let report = FailureReport {
                        command: command.name(),
                        kind: e.kind(),
                        message: e.to_string(),
                        sweep_value: job.sweep_value.as_ref(),
                    };
                    let written = std::fs::create_dir_all(&job.out)
                        .map_err(anyhow::Error::from)
                        .and_then(|_| output::write_json(&job.out.join("failure.json"), &report));
                    if let Err(w) = written {
                        eprintln!("soret: {w:#}");
                    }
                }
            }
            (code, format!("soret {}: {f}", command.name()))
        }
    }
}

fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_VAR} must be a positive integer, got `{s}`")),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = match config::load(cli.command, &cli.config, cli.out.as_deref()) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("soret {}: config error: {e}", cli.command.name());
            return ExitCode::from(2);
        }
    };
    let threads = match thread_cap() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("soret: {e}");
            return ExitCode::from(2);
        }
    };

    let results: Vec<(u8, String)> = if jobs.len() == 1 {
        vec![run_job(cli.command, &jobs[0])]
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = match builder.build() {
            Ok(p) => p,
            Err(e) => {
                eprintln!("soret: cannot start worker threads: {e}");
                return ExitCode::from(1);
            }
        };
        pool.install(|| jobs.par_iter().map(|j| run_job(cli.command, j)).collect())
    };

    for ((code, line), job) in results.iter().zip(&jobs) {
        let prefix = match &job.sweep_value {
            Some(v) => format!("[{}] {v} ", job.out.display()),
            None => String::new(),
        };
        if *code == 0 {
            println!("{prefix}{line}");
        } else {
            eprintln!("{prefix}{line}");
        }
    }

    if jobs.len() > 1 {
        let entries: Vec<SweepEntry> = results
            .iter()
            .zip(&jobs)
            .map(|((code, _), j)| SweepEntry {
                dir: j
                    .out
                    .file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                value: j.sweep_value.as_ref(),
                exit_code: *code,
            })
            .collect();
        if let Some(root) = jobs[0].out.parent() {
            if let Err(e) = std::fs::create_dir_all(root)
                .map_err(anyhow::Error::from)
                .and_then(|_| output::write_json(&root.join("sweep.json"), &entries))
            {
                eprintln!("soret: {e:#}");
                return ExitCode::from(1);
            }
        }
    }

    ExitCode::from(results.iter().map(|(c, _)| *c).max().unwrap_or(0))
}
