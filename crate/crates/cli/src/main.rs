//! `dynakernel <eval|identities|eigen|mc|residual> --config <path> [--set key=value]...`
//!
//! Exit codes: 0 when every row succeeded, 2 when any row errored or failed its check,
//! 1 on configuration or I/O failure.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Eval,
    Identities,
    Eigen,
    Mc,
    Residual,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Identities => "identities",
            Command::Eigen => "eigen",
            Command::Mc => "mc",
            Command::Residual => "residual",
        }
    }
}

/// Green's functions and heat kernels with dynamical boundary conditions.
#[derive(Debug, Parser)]
#[command(name = "dynakernel", version)]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config field, e.g. `--set truncation.lmax=20` or `--set x=[[0.1,0.2]]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn config_failure(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("dynakernel: {msg}");
    ExitCode::from(1)
}

fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var("DYNAKERNEL_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(Some(v)),
            _ => Err(format!("DYNAKERNEL_THREADS must be a positive integer, got `{s}`")),
        },
    }
}

fn sidecar_path(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    primary.with_file_name(format!("{stem}{suffix}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let cfg = match RunConfig::load(&cli.config, &cli.set).and_then(|c| c.validate_for(cli.command.name()).map(|_| c)) {
        Ok(c) => c,
        Err(e) => return config_failure(e),
    };
    match thread_cap() {
        Ok(Some(t)) => {
            dynakernel::par::set_thread_cap(t);
        }
        Ok(None) => {}
        Err(e) => return config_failure(e),
    }
    let out = match cli.command {
        Command::Eval => commands::eval(&cfg),
        Command::Identities => commands::identities(&cfg),
        Command::Eigen => commands::eigen(&cfg),
        Command::Mc => commands::mc(&cfg),
        Command::Residual => commands::residual(&cfg),
    };
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, &out.primary).and_then(|_| {
            out.sidecars.iter().try_for_each(|(suffix, body)| std::fs::write(sidecar_path(path, suffix), body))
        }),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(out.primary.as_bytes()).and_then(|_| {
                out.sidecars.iter().try_for_each(|(_, body)| so.write_all(b"\n").and_then(|_| so.write_all(body.as_bytes())))
            })
        }
    };
    match written {
        // A closed reader (e.g. `| head`) is not a failure of the run.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
        Err(e) => return config_failure(format!("writing output: {e}")),
        Ok(()) => {}
    }
    if out.failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
