//! Batch front end: reads a JSON config, runs one subcommand and renders a
//! deterministic table on stdout. Run metadata goes to stderr.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use sha2::{Digest, Sha256};
use wickfock::tensor::MatrixDump;
use wickfock::CMatrix;

mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use error::CliError;
pub use table::{Cell, OutputFormat, ResultTable};

use config::ConfigFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CheckDeformation,
    BuildFock,
    Partition,
    AnyonGas,
    Qkms,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "wickfock",
    version,
    about = "Deformed Fock modules, anyon lattice gases and q-KMS functionals"
)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Defaults to JSON for reports and CSV for scans.
    #[arg(long, value_enum)]
    pub output: Option<OutputFormat>,
    /// Seed for randomized inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the main matrix of the run as a JSON dump.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Fock-space cutoff (build-fock, partition); overrides the config.
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub version: &'static str,
    pub config_sha256: String,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub table: ResultTable,
    pub format: OutputFormat,
    pub metadata: Metadata,
}

impl Report {
    pub fn stdout(&self) -> String {
        self.table.render(self.format)
    }

    pub fn metadata_line(&self) -> String {
        format!(
            "wickfock {} config-sha256 {} wall-time {:.3}s",
            self.metadata.version, self.metadata.config_sha256, self.metadata.wall_time
        )
    }
}

/// What a subcommand hands back to the dispatcher.
pub(crate) struct Outcome {
    pub table: ResultTable,
    pub default_format: OutputFormat,
    pub dump: Option<CMatrix>,
}

pub fn dispatch(cfg: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let file = ConfigFile::load(&cfg.config)?;
    if cfg.cutoff.is_some() && !matches!(cfg.command, Command::BuildFock | Command::Partition) {
        return Err(error::invalid("--cutoff only applies to build-fock and partition"));
    }
    let outcome = match cfg.command {
        Command::CheckDeformation => commands::check_deformation(&file, cfg)?,
        Command::BuildFock => commands::build_fock(&file, cfg)?,
        Command::Partition => commands::partition(&file, cfg)?,
        Command::AnyonGas => commands::anyon_gas(&file, cfg)?,
        Command::Qkms => commands::qkms(&file, cfg)?,
    };
    if let Some(path) = &cfg.dump {
        let m = outcome
            .dump
            .ok_or_else(|| error::invalid("this run has no matrix to dump"))?;
        let json = MatrixDump::from_matrix(&m).to_json()?;
        std::fs::write(path, json + "\n").map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
    }
    Ok(Report {
        table: outcome.table,
        format: cfg.output.unwrap_or(outcome.default_format),
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: format!("{:x}", Sha256::digest(file.text.as_bytes())),
            wall_time: start.elapsed().as_secs_f64(),
        },
    })
}
