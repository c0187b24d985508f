//! Command-line driver: reads a JSON [`RunConfig`], runs one subcommand and
//! writes a CSV or JSON result document.
//!
//! Exit codes: 0 ok, 1 other failure, 2 configuration error, 3 λ outside the
//! admissible domain, 4 tolerance breach.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{execute, Command, Report};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use output::{Cell, Document, Table};

#[derive(Debug, Parser)]
#[command(name = "bose-genfun", version, about = "Depletion generating functions, tail bounds and Fock-space checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; overrides `output.path` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Scattering lengths of the configured potential.
    Scattering(CommonArgs),
    /// Λ(λ) by quadrature and in closed form on the λ grid.
    Genfun(CommonArgs),
    /// Mean, variance, cumulants and central moments of the depletion.
    Moments(CommonArgs),
    /// Chernoff and quadratic tail bounds with the non-concentration witness.
    Tails(CommonArgs),
    /// Λ_O(λ) for a one-particle observable.
    Observable(CommonArgs),
    /// Exact Fock-space checks on the pairs with the largest angles.
    Oracle(CommonArgs),
}

impl Sub {
    pub fn split(&self) -> (Command, &CommonArgs) {
        match self {
            Sub::Scattering(a) => (Command::Scattering, a),
            Sub::Genfun(a) => (Command::Genfun, a),
            Sub::Moments(a) => (Command::Moments, a),
            Sub::Tails(a) => (Command::Tails, a),
            Sub::Observable(a) => (Command::Observable, a),
            Sub::Oracle(a) => (Command::Oracle, a),
        }
    }
}

/// Loads the config, applies the overrides, runs the command and writes its
/// document. A tolerance breach is reported after the document is written.
pub fn run(cli: &Cli) -> CliResult<Report> {
    let (cmd, args) = cli.command.split();
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.override_seed(seed);
    }
    if let Some(out) = &args.out {
        cfg.output.path = Some(out.clone());
    }
    let report = execute(cmd, &cfg)?;
    let bytes = report.document.render(cfg.output.format)?;
    match &cfg.output.path {
        Some(p) => output::write_atomic(p, &bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    if !report.breaches.is_empty() {
        return Err(CliError::Tolerance(report.breaches.join("; ")));
    }
    Ok(report)
}
