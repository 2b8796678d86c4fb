//! Library half of the `lfa` binary: config handling, pipeline and subcommands.

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{RunConfig, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    /// Single-line JSON object for standard error.
    pub fn to_line(&self) -> String {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
        };
        serde_json::json!({ "error": kind, "message": self.to_string() }).to_string()
    }
}

impl From<lfa_core::Error> for CliError {
    fn from(e: lfa_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lfa",
    version,
    about = "Local function approximation explanations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the output directory from the config file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Leave timestamps out of reports.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Worker threads for point-level parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Train (or load) the model and write model.json and metrics.json.
    Train,
    /// Explain the selected points with every configured method.
    Explain,
    /// Reference-vs-engine distance matrix over the selected points.
    Equivalence,
    /// Weight recovery on linear, logistic and sinusoid models.
    Recover,
    /// Build an adversarial neighborhood for a one-dimensional function.
    Nfl,
    /// Bottom-k perturbation curves and sign tests.
    PerturbTest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Explain => "explain",
            Command::Equivalence => "equivalence",
            Command::Recover => "recover",
            Command::Nfl => "nfl",
            Command::PerturbTest => "perturb-test",
        }
    }
}

/// Resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct Run {
    pub command: Command,
    pub config: RunConfig,
    pub timestamp: bool,
}

impl Run {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let mut config = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::minimal(),
        };
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        if let Some(out) = &cli.out {
            config.output_dir = out.clone();
        }
        if cli.threads == Some(0) {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        if let config::ModelSource::Train { train, .. } = &mut config.model {
            train.seed = config.seed;
        }
        config.validate()?;
        Ok(Run {
            command: cli.command,
            config,
            timestamp: !cli.no_timestamp,
        })
    }
}

/// Parse-free entry point; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let run = Run::from_cli(cli)?;
    let go = || commands::dispatch(&run);
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(go),
        None => go(),
    }
}
