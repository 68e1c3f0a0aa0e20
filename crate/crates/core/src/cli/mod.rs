//! Command-line driver: trace simulation, batch recovery and the self-check.
//!
//! Exit codes: 0 success, 1 when some rows or checks failed, 2 for usage
//! errors (bad flags or configuration).

mod check;
mod config;
mod run_fit;
mod simulate;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use crate::models::ModelKind;
use crate::{Error, Result};

pub use check::{
    cmd_check, gradient_suite_error, laplace_step2_value, oracle_grid_error, remainder_ratios, CheckItem,
    CheckOptions, CheckReport,
};
pub use config::{
    settings, ExampleId, Experiment, ExperimentConfig, FitOverrides, ProblemSelector, Setting, ASSUMED_R1,
};
pub use run_fit::{cmd_fit, FitRow, FitRun};
pub use simulate::{cmd_simulate, figure_grid, SimulateRun, FIGURE_POINTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fracorder", version, about = "Simulate boundary traces of multi-term fractional diffusion and recover the orders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write sampled traces (tables) or model curves (figures) as CSV.
    Simulate(RunArgs),
    /// Recover orders and amplitudes for every row of a table.
    Fit(RunArgs),
    /// Run the self-check suite and report measured errors.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Fp,
    Fr,
    Both,
}

impl KindArg {
    fn kinds(self) -> Vec<ModelKind> {
        match self {
            KindArg::Fp => vec![ModelKind::Polynomial],
            KindArg::Fr => vec![ModelKind::Rational],
            KindArg::Both => vec![ModelKind::Polynomial, ModelKind::Rational],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// table1a, table1b, table2, table3, fig1, fig2 or custom.
    #[arg(long)]
    pub experiment: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the rows.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Comma-separated T0 values replacing the preset list.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub t0: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Right end of the figure time axis.
    #[arg(long)]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Relative error injected into Γ, to confirm the checks can fail.
    #[arg(long, hide = true, default_value_t = 0.0)]
    pub gamma_bias: f64,
}

impl RunArgs {
    /// Configuration from the file (if any) with flag overrides applied.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let name = self
                    .experiment
                    .as_deref()
                    .ok_or_else(|| Error::invalid("either --config or --experiment is required"))?;
                ExperimentConfig::new(name.parse()?)
            }
        };
        if let Some(name) = &self.experiment {
            cfg.experiment = name.parse()?;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(t0) = &self.t0 {
            cfg.t0 = Some(t0.clone());
        }
        if let Some(k) = self.kind {
            cfg.kinds = k.kinds();
        }
        if let Some(t) = self.t_max {
            cfg.t_max = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn usage(e: &Error) -> i32 {
    eprintln!("error: {e}");
    EXIT_USAGE
}

/// Executes a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Check(args) => {
            let report = cmd_check(&CheckOptions {
                gamma_error: args.gamma_bias,
            });
            print!("{}", report.render());
            if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_PARTIAL
            }
        }
        Command::Simulate(args) => {
            let cfg = match args.resolve() {
                Ok(c) => c,
                Err(e) => return usage(&e),
            };
            match cmd_simulate(&cfg) {
                Ok(run) => {
                    for f in &run.files {
                        println!("{}", f.display());
                    }
                    for e in &run.errors {
                        error!("{e}");
                        eprintln!("failed: {e}");
                    }
                    if run.errors.is_empty() {
                        EXIT_OK
                    } else {
                        EXIT_PARTIAL
                    }
                }
                Err(e @ Error::InvalidInput(_)) => usage(&e),
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_PARTIAL
                }
            }
        }
        Command::Fit(args) => {
            let cfg = match args.resolve() {
                Ok(c) => c,
                Err(e) => return usage(&e),
            };
            match cmd_fit(&cfg) {
                Ok(run) => {
                    println!("{}", run.csv.display());
                    println!("{}", run.json.display());
                    let failed = run.failures();
                    if failed == 0 {
                        EXIT_OK
                    } else {
                        eprintln!("{failed} of {} rows failed", run.rows.len());
                        EXIT_PARTIAL
                    }
                }
                Err(e @ Error::InvalidInput(_)) => usage(&e),
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_PARTIAL
                }
            }
        }
    }
}
