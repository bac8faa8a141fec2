//! `linproc`: simulate dependent-entry sample covariance matrices, solve
//! their limiting spectral law and compare the two.
//!
//! Exit status: 0 on success, 2 for invalid configuration (including an
//! exceeded memory budget), 3 when a numerical routine fails.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use linproc_core::lsd::EquationVariant;
use serde::Serialize;

use config::{Command, ConfigError, ExperimentConfig, FileConfig, Overrides};

#[derive(Debug, Parser)]
#[command(name = "linproc", version, about = "Spectra of sample covariance matrices built from one linear process")]
struct Cli {
    /// Command to run; overrides "command" in the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON experiment file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// {normalized|raw}-{y|yinv}-{direct|companion}
    #[arg(long)]
    variant: Option<EquationVariant>,
    #[arg(long = "p")]
    p: Option<usize>,
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long = "y")]
    y: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: Command,
    config: &'a ExperimentConfig,
    outputs: Vec<String>,
    versions: Versions,
    /// The only part that varies between identical runs.
    runtime: Runtime,
}

#[derive(Serialize)]
struct Versions {
    linproc: &'static str,
    linproc_core: &'static str,
}

#[derive(Serialize)]
struct Runtime {
    started_unix_ms: u128,
    elapsed_ms: u128,
    jobs: Option<usize>,
}

const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

enum Failure {
    Config(ConfigError),
    Library(linproc_core::Error),
    Io(std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Library(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_INVALID,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Library(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "cannot write outputs: {e}"),
        }
    }
}

fn load(cli: Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut file = match &cli.config {
        Some(path) => FileConfig::read(path)?,
        None => FileConfig::default(),
    };
    Overrides {
        command: cli.command,
        seed: cli.seed,
        out: cli.out,
        jobs: cli.jobs,
        variant: cli.variant,
        p: cli.p,
        n: cli.n,
        y: cli.y,
        replicates: cli.replicates,
    }
    .apply(&mut file);
    ExperimentConfig::resolve(file)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let config = load(cli).map_err(Failure::Config)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
    let clock = Instant::now();
    log::info!("running {} into {}", config.command, config.out.display());

    let mut artifacts = commands::run(&config).map_err(Failure::Library)?;
    let mut outputs = artifacts.names();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        command: config.command,
        config: &config,
        outputs,
        versions: Versions {
            linproc: env!("CARGO_PKG_VERSION"),
            linproc_core: linproc_core::VERSION,
        },
        runtime: Runtime {
            started_unix_ms: started,
            elapsed_ms: clock.elapsed().as_millis(),
            jobs: config.jobs,
        },
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Failure::Io(e.into()))?;
    bytes.push(b'\n');
    artifacts.add("manifest.json", bytes);
    let written = artifacts.commit(&config.out).map_err(Failure::Io)?;
    log::info!("wrote {} files", written.len());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
