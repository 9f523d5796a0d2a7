//! `qbm`: run bath, work-statistics and fluctuation-theorem experiments from a
//! TOML configuration.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 statistical-quality failure (outputs are still written).

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{ExperimentConfig, Mode, Oracle};
use error::CliError;
use output::{json_bytes, sha256_hex, Manifest, Versions};

/// Overrides the configured output directory.
const ENV_OUTPUT_DIR: &str = "QBM_OUTPUT_DIR";
/// Size of the worker pool.
const ENV_THREADS: &str = "QBM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "qbm", version, about = "Quantum Brownian motion work statistics and fluctuation theorems")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Damping and noise kernels in time and frequency.
    Kernels,
    /// Homogeneous Green's functions h, g and their derivatives.
    Greens,
    /// Equilibrium variances and free energies.
    Thermal,
    /// Analytic work mean, variance and fluctuation-theorem residuals.
    Work,
    /// High- and low-temperature expansions of the work variance.
    Expand,
    /// Monte Carlo work samples and estimators.
    Mc(McArgs),
    /// Decoherence threshold of coarse-grained position histories.
    Dechist(DechistArgs),
    /// Full pipeline ending in a single verdict.
    VerifyFt(McArgs),
    /// Analytic work statistics over a parameter grid.
    Sweep,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kernels => "kernels",
            Command::Greens => "greens",
            Command::Thermal => "thermal",
            Command::Work => "work",
            Command::Expand => "expand",
            Command::Mc(_) => "mc",
            Command::Dechist(_) => "dechist",
            Command::VerifyFt(_) => "verify-ft",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Quantum,
    Classical,
}

#[derive(Debug, Args)]
struct McArgs {
    /// Number of work samples per direction.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// `continuum` or `discrete:N`.
    #[arg(long)]
    oracle: Option<Oracle>,
}

#[derive(Debug, Args)]
struct DechistArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    separation_scale: Option<f64>,
}

/// Folds command-line flags into the configuration, so the recorded config
/// is the one that produced the outputs.
fn apply_flags(cfg: &mut ExperimentConfig, cmd: &Command) {
    match cmd {
        Command::Mc(a) | Command::VerifyFt(a) => {
            if let Some(n) = a.samples {
                cfg.mc.samples = n;
            }
            if let Some(s) = a.seed {
                cfg.mc.seed = s;
            }
            if let Some(m) = a.mode {
                cfg.mc.mode = match m {
                    ModeArg::Quantum => Mode::Quantum,
                    ModeArg::Classical => Mode::Classical,
                };
            }
            if let Some(o) = a.oracle {
                cfg.mc.oracle = o;
            }
        }
        Command::Dechist(a) => {
            if let Some(s) = a.sigma {
                cfg.dechist.sigma = s;
            }
            if let Some(s) = a.separation_scale {
                cfg.dechist.separation_scale = s;
            }
        }
        _ => {}
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(ENV_THREADS) else {
        return Ok(());
    };
    let n = v
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{ENV_THREADS}: expected a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{ENV_THREADS}: {e}")))
}

fn write_run(dir: &Path, subcommand: &str, cfg: &ExperimentConfig, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let config_text = cfg.to_toml();
    std::fs::write(dir.join("config.toml"), &config_text)?;
    for (name, bytes) in files {
        std::fs::write(dir.join(name), bytes)?;
    }
    let manifest = Manifest {
        subcommand: subcommand.into(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        seed: commands::uses_seed(subcommand).then_some(cfg.mc.seed),
        versions: Versions {
            qbm: env!("CARGO_PKG_VERSION"),
            qbm_core: qbm_core::VERSION,
        },
        outputs: files.iter().map(|(n, b)| (n.clone(), sha256_hex(b))).collect(),
    };
    std::fs::write(dir.join("manifest.json"), json_bytes(&manifest))?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    configure_threads()?;
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", cli.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    apply_flags(&mut cfg, &cli.command);
    let name = cli.command.name();
    cfg.validate(commands::needs(name))?;

    let outputs = commands::run(name, &cfg)?;
    let root = std::env::var_os(ENV_OUTPUT_DIR).map_or_else(|| PathBuf::from(&cfg.output.directory), PathBuf::from);
    let dir = root.join(name);
    write_run(&dir, name, &cfg, &outputs.files)?;
    log::info!("wrote {} files to {}", outputs.files.len() + 2, dir.display());

    match outputs.quality_failure {
        Some(msg) => {
            eprintln!("qbm: statistical quality: {msg}");
            Ok(ExitCode::from(4))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qbm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
