//! Batch front-end: `validate`, `consistency`, `converge`, `extend-demo` and
//! `mc-compare`, each driven by a TOML experiment file and writing CSV.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::error::Error;

pub use config::{parse_config, to_toml, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "feynman-dirichlet", version, about = "Chernoff iteration of Feynman-type formulas for Dirichlet heat problems")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check operator, charts, extension and initial datum.
    Validate,
    /// Consistency residual over the time-step ladder.
    Consistency,
    /// Chernoff convergence table against the chosen oracle.
    Converge,
    /// Extended initial datum across the collar.
    ExtendDemo,
    /// Analytic, Crank–Nicolson and Monte Carlo values side by side.
    McCompare,
}

/// Whether a command's checks held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail(String),
}

pub(crate) struct Context {
    pub cfg: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    /// Creates `name` in the output directory and writes the provenance
    /// comment line.
    pub fn csv(&self, name: &str) -> Result<csv::Writer<File>, CliError> {
        fs::create_dir_all(&self.out)?;
        let mut file = File::create(self.out.join(name))?;
        writeln!(
            file,
            "# feynman-dirichlet {} config_sha256={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.seed
        )?;
        Ok(csv::Writer::from_writer(file))
    }
}

/// Runs one subcommand on a config file.
pub fn run(command: Command, config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = parse_config(&text)?;
    let ctx = Context {
        config_hash: hex::encode(Sha256::digest(text.as_bytes())),
        seed: seed.unwrap_or(cfg.seed),
        out: out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir)),
        cfg,
    };
    match command {
        Command::Validate => commands::validate(&ctx),
        Command::Consistency => commands::consistency(&ctx),
        Command::Converge => commands::converge(&ctx),
        Command::ExtendDemo => commands::extend_demo(&ctx),
        Command::McCompare => commands::mc_compare(&ctx),
    }
}

/// Parses arguments, runs, and maps the result to an exit code:
/// 0 pass, 1 failure, 2 config error.
pub fn main_with<I, S>(argv: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    let Some(config) = args.config else {
        eprintln!("config error: --config is required");
        return 2;
    };
    match run(args.command, &config, args.out, args.seed) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail(msg)) => {
            eprintln!("FAIL: {msg}");
            1
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
