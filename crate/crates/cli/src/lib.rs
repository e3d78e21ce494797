//! Command-line driver: figure data, verification suite and parameter
//! sweeps for shortcuts to adiabaticity in dissipative two-level systems.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod table;

use std::path::{Path, PathBuf};

use clap::Parser;

use crate::commands::Outcome;
use crate::config::{Command, ExperimentConfig, Format, Overrides};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "nh-sta", version, about = "Shortcuts to adiabaticity for dissipative two-level systems")]
pub struct Cli {
    /// What to run.
    #[arg(value_enum)]
    pub command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Comma-separated decay rates (units of 1/τ).
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Number of grid intervals (even, at least 100).
    #[arg(long)]
    pub steps: Option<usize>,
    /// End of the time window (units of τ).
    #[arg(long, allow_hyphen_values = true)]
    pub t_final: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Data file format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            gamma: self.gamma.clone(),
            steps: self.steps,
            t_final: self.t_final,
            out: self.out.clone(),
            format: self.format,
        }
    }

    /// Reads the config file (if any) and applies overrides.
    pub fn resolve(&self, env_out: Option<&str>) -> Result<ExperimentConfig> {
        let text = match &self.config {
            Some(path) => Some((
                std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig { path: path.clone(), source })?,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            )),
            None => None,
        };
        let file = text.as_ref().map(|(t, dir)| (t.as_str(), dir.as_path()));
        ExperimentConfig::resolve(self.command, file, &self.overrides(), env_out)
    }
}

/// Resolves the configuration and runs the command.
pub fn run(cli: &Cli, env_out: Option<&str>) -> Outcome {
    match cli.resolve(env_out) {
        Ok(cfg) => commands::execute(&cfg),
        Err(e) => Outcome { report: String::new(), failure: Some(e) },
    }
}
