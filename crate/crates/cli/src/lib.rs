//! Command line front end: loads a JSON configuration, runs one stage of the
//! pipeline and writes its results.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 the condition
//! fails (`check`), 4 simulation setup or step-size failure, 5 no
//! counterexample exists because the condition holds.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{cmd_check, cmd_counterexample, cmd_diagnose, cmd_reduce, cmd_simulate};
pub use config::{Loaded, ProblemConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Setup(String),
    #[error("{0}")]
    NoCounterexample(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Input(_) => 2,
            CliError::Setup(_) => 4,
            CliError::NoCounterexample(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "torusdecay", version, about = "Decay of periodic entropy solutions: condition checks, reduction, simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides outputs.directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the solver.
    #[arg(long, global = true, env = "TORUSDECAY_THREADS")]
    pub threads: Option<usize>,
    /// Print the machine-readable report instead of a summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Decay threshold on the L1 distance to the mean.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide the nonlinearity-diffusivity condition at the mean value.
    Check,
    /// Normalize the problem by a lattice change of variables.
    Reduce,
    /// Run the monotone scheme and audit the trajectory.
    Simulate,
    /// Sample the travelling-wave counterexample of a failing problem.
    Counterexample {
        /// Comma-separated sample times.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
    },
    /// Audit stored trajectory frames.
    Diagnose {
        /// Frame file written by `simulate`.
        #[arg(long)]
        frames: PathBuf,
        /// A second frame file with the same grid and times, for the contraction audit.
        #[arg(long)]
        paired: Option<PathBuf>,
    },
}

/// Result of one subcommand, before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
    pub json: serde_json::Value,
    /// Files relative to the output directory.
    pub files: Vec<(String, Vec<u8>)>,
}

fn load(cli: &Cli) -> Result<Loaded, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Input("--config is required".into()))?;
    Loaded::from_path(path)
}

/// Runs the subcommand inside a thread pool of the requested size.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| CliError::Setup(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Check => cmd_check(&load(cli)?),
        Command::Reduce => cmd_reduce(&load(cli)?),
        Command::Simulate => cmd_simulate(&load(cli)?, cli.threshold),
        Command::Counterexample { times } => cmd_counterexample(&load(cli)?, times.as_deref(), cli.threshold),
        Command::Diagnose { frames, paired } => cmd_diagnose(frames, paired.as_deref(), cli.threshold),
    })
}

/// Writes every file through a temporary file in the target directory and a rename.
pub fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    let io = |what: &str, e: std::io::Error| CliError::Io(format!("{what}: {e}"));
    std::fs::create_dir_all(dir).map_err(|e| io(&dir.display().to_string(), e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(name, e))?;
        tmp.write_all(bytes).map_err(|e| io(name, e))?;
        tmp.flush().map_err(|e| io(name, e))?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| io(&target.display().to_string(), e.error))?;
    }
    Ok(())
}

/// The output directory: `--out`, else the configured one.
fn out_dir(cli: &Cli) -> Option<PathBuf> {
    if cli.out.is_some() {
        return cli.out.clone();
    }
    let cfg = cli.config.as_ref()?;
    let loaded = Loaded::from_path(cfg).ok()?;
    loaded.config.outputs.directory.map(|d| loaded.base_dir.join(d))
}

/// Full command-line behaviour; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(outcome) => {
            if let Some(dir) = out_dir(cli) {
                if let Err(e) = write_outputs(&dir, &outcome.files) {
                    eprintln!("error: {e}");
                    return e.exit_code();
                }
            }
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&outcome.json).expect("reports serialize"));
            } else {
                print!("{}", outcome.summary);
            }
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
