mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use polariton_core::spectroscopy::Engine;

use config::{ConfigError, RunConfig};

/// Polariton spectroscopy of a strongly driven transmon-resonator device.
#[derive(Debug, Parser)]
#[command(name = "polariton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; defaults reproduce the reference power sweep.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineArg>,
    /// Override single config keys, e.g. `device.g0_MHz=40 sweep.mode=detuning`.
    #[arg(long, global = true, num_args = 1.., value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dressed levels, polaritons and the transition table at one coupler power.
    Eigen {
        #[arg(long, default_value_t = -30.0, allow_hyphen_values = true, value_name = "DBM")]
        dbm: f64,
    },
    /// Spectroscopy map plus line overlays.
    Sweep,
    /// The same sweep on the device and on its dispersive twin.
    CompareDispersive,
    /// Perturbative line crossing and the resolvability threshold.
    Crossing,
    /// Built-in cross-checks between solver routes and closed forms.
    Validate,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Eigen,
    Meq,
    Both,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Eigen => Engine::Eigen,
            EngineArg::Meq => Engine::Meq,
            EngineArg::Both => Engine::Both,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(String),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub fn run_error(e: impl std::fmt::Display) -> AppError {
    AppError::Run(e.to_string())
}

fn resolve(cli: &Cli) -> Result<(RunConfig, usize), AppError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.params)?;
    if let Some(e) = cli.engine {
        cfg.sweep.engine = e.into();
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    let workers = match cli.workers {
        Some(0) => return Err(ConfigError::Invalid("--workers must be at least 1".into()).into()),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    Ok((cfg, workers))
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let (cfg, workers) = resolve(cli)?;
    match cli.command {
        Command::Eigen { dbm } => report::eigen(&cfg, dbm),
        Command::Sweep => report::sweep(&cfg, workers),
        Command::CompareDispersive => report::compare_dispersive(&cfg, workers),
        Command::Crossing => report::crossing(&cfg),
        Command::Validate => report::validate(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
