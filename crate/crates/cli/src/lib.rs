//! Batch experiment driver for the `chordlab` library.

pub mod config;
mod experiments;
pub mod output;

use std::path::PathBuf;

use clap::Parser;

use config::{ConfigError, Experiment, ExperimentConfig};
use output::Artifacts;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chordlab", version, about = "Run phase-space decoherence experiments")]
pub struct Args {
    /// Experiment to run.
    #[arg(value_enum, required_unless_present = "schema")]
    pub experiment: Option<Experiment>,
    /// TOML configuration file.
    #[arg(long, required_unless_present = "schema")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the CSV column reference and exit.
    #[arg(long)]
    pub schema: bool,
}

/// Result of one experiment before it is written out.
#[derive(Debug, Default)]
pub struct Report {
    pub results: serde_json::Value,
    pub summary: String,
    pub warnings: Vec<String>,
    /// Set when a check inside the experiment failed.
    pub failed: bool,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(chordlab::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
            RunError::Io(e) => write!(f, "i/o failure: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<chordlab::Error> for RunError {
    fn from(e: chordlab::Error) -> Self {
        match e {
            chordlab::Error::Io(io) => RunError::Io(io),
            other => RunError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Runs one experiment with a parsed configuration, writing artifacts to
/// `out`.
pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig, out: &std::path::Path) -> Result<Report, RunError> {
    if let Some(declared) = cfg.experiment {
        if declared != experiment {
            return Err(RunError::Config(ConfigError {
                location: "field `experiment`".into(),
                message: format!("config declares `{}` but `{}` was requested", declared.name(), experiment.name()),
            }));
        }
    }
    let mut artifacts = Artifacts::create(out)?;
    let report = experiments::dispatch(experiment, cfg, &mut artifacts)?;
    let mut text = format!("experiment: {}\nhbar: {}\nseed: {}\n\n", experiment.name(), cfg.hbar, cfg.seed);
    text.push_str(&report.summary);
    if !report.warnings.is_empty() {
        text.push_str("\nwarnings:\n");
        for w in &report.warnings {
            text.push_str(&format!("  - {w}\n"));
        }
    }
    artifacts.text("summary.txt", &text)?;
    output::write_sidecar(&mut artifacts, experiment.name(), cfg, &report.results, &report.warnings)?;
    Ok(report)
}

/// Command-line entry point; returns the process exit code.
pub fn run(args: &Args) -> i32 {
    if args.schema {
        print!("{}", output::schema());
        return EXIT_OK;
    }
    let (Some(experiment), Some(path)) = (args.experiment, args.config.as_ref()) else {
        eprintln!("an experiment and --config are required");
        return EXIT_CONFIG;
    };
    let mut cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("chordlab-out"));
    match run_experiment(experiment, &cfg, &out) {
        Ok(report) => {
            print!("{}", report.summary);
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.failed {
                EXIT_NUMERICAL
            } else {
                EXIT_OK
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_NUMERICAL
        }
    }
}
