//! Experiment driver for certified margins: certify, compare, coverage and
//! sweep subcommands over counts files, probability files or synthetic
//! classifiers.

pub mod commands;
pub mod config;
pub mod error;
pub mod synthetic;

use std::fs::{self, File};
use std::io;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::SweepAxis;
use crate::config::{ExperimentConfig, RawConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "smoothcert", version, about = "Certified margins and radii for randomized smoothing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct ConfigArgs {
    /// Flat TOML file with experiment keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub keys: RawConfig,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let base = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        ExperimentConfig::from_raw(&base.overlay(self.keys.clone()))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify every input with every method; write records and CTA curves.
    Certify(ConfigArgs),
    /// Gain table of one CTA curve over another.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        ours: PathBuf,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Empirical miscoverage on a synthetic multinomial source.
    Coverage {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 1000)]
        replications: usize,
    },
    /// Repeat certify over values of one axis.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Certify(args) => {
            let cfg = args.resolve()?;
            let dir = commands::certify(&cfg)?;
            println!("wrote {}", dir.display());
        }
        Command::Compare {
            baseline,
            ours,
            output,
        } => {
            let base = commands::read_cta(&baseline)?;
            let ours = commands::read_cta(&ours)?;
            match output {
                Some(path) => commands::compare(&base, &ours, File::create(path)?)?,
                None => commands::compare(&base, &ours, io::stdout().lock())?,
            }
        }
        Command::Coverage {
            config,
            replications,
        } => {
            let cfg = config.resolve()?;
            let rows = commands::coverage(&cfg, replications)?;
            let dir = cfg.out.join(&cfg.name);
            fs::create_dir_all(&dir)?;
            commands::write_coverage(File::create(dir.join("coverage.csv"))?, &rows)?;
            commands::write_coverage(io::stdout().lock(), &rows)?;
        }
        Command::Sweep {
            config,
            axis,
            values,
        } => {
            let cfg = config.resolve()?;
            for dir in commands::sweep(&cfg, axis, &values)? {
                println!("wrote {}", dir.display());
            }
        }
    }
    Ok(())
}
