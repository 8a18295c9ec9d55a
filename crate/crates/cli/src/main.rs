use clap::Parser;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use fracrbf::assembly::SpatialDerivative;
use fracrbf::kernels::RadialKernel;
use fracrbf::precondition::PreconditionerForm;
use fracrbf::problems::ProblemId;
use fracrbf::tables::TableId;
use fracrbf_cli::backend::Library;
use fracrbf_cli::config::RunConfig;
use fracrbf_cli::run::{run_single, run_table, CliError};

/// Meshless RBF collocation for time-space-fractional Black-Scholes equations.
///
/// Without `--table`, solves one configuration and writes its artifacts to
/// `--out`. With `--table 1|2`, regenerates that table's twelve cells.
/// Flags override keys read from `--config`.
#[derive(Debug, Parser)]
#[command(name = "fracrbf", version)]
struct Args {
    /// TOML file with any subset of the run keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// example1, example2
    #[arg(long)]
    problem: Option<ProblemId>,
    /// Time order, in (0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Space order, in (0, 1].
    #[arg(long)]
    beta: Option<f64>,
    /// Number of nodes.
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// polyharmonic:DEGREE or multiquadric:SHAPE:EXPONENT
    #[arg(long)]
    kernel: Option<RadialKernel>,
    /// Solve G directly instead of the preconditioned system.
    #[arg(long)]
    no_precondition: bool,
    /// Apply the preconditioner as a dense explicit inverse (diagnostic).
    #[arg(long)]
    explicit_preconditioner: bool,
    /// rl or caputo
    #[arg(long)]
    spatial: Option<SpatialDerivative>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Regenerate table 1 or 2.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    table: Option<u8>,
    /// Comma-separated steps at which to write diagonal solution slices.
    #[arg(long, value_delimiter = ',')]
    slice_steps: Option<Vec<usize>>,
    #[arg(long)]
    slice_samples: Option<usize>,
    /// Add wall-clock columns; outputs then differ between reruns.
    #[arg(long)]
    timings: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

impl Args {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { c.$field = v; })*
            };
        }
        set!(
            problem,
            alpha,
            beta,
            np,
            dt,
            steps,
            kernel,
            spatial,
            sigma,
            rate,
            out,
            slice_steps,
            slice_samples
        );
        if self.no_precondition {
            c.precondition = false;
        }
        if self.explicit_preconditioner {
            c.preconditioner = PreconditionerForm::Explicit;
        }
        if self.timings {
            c.timings = true;
        }
        Ok(c)
    }
}

fn execute(args: &Args) -> Result<(serde_json::Value, bool), CliError> {
    let config = args.config()?;
    if args.print_config {
        print!("{}", config.to_toml());
        return Ok((serde_json::Value::Null, true));
    }
    match args.table.and_then(TableId::from_number) {
        Some(table) => {
            std::fs::create_dir_all(&config.out).map_err(|source| CliError::Io {
                path: config.out.clone(),
                source,
            })?;
            let cells = run_table(table, &config.out, &config.solver_options(), &Library)?;
            let failed = cells.iter().filter(|c| !c.ok()).count();
            let summary = json!({
                "table": table.number(),
                "csv": config.out.join(format!("{table}.csv")),
                "cells": cells.len(),
                "failed": failed,
            });
            Ok((summary, failed == 0))
        }
        None => {
            let s = run_single(&config, &Library)?;
            let summary = json!({
                "out": s.out,
                "cond_before": s.report.cond_before,
                "cond_after": s.report.cond_after,
                "final_rmse": s.report.final_rmse,
                "max_analytic_error": s.report.max_analytic_error,
            });
            Ok((summary, true))
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok((summary, ok)) => {
            if !summary.is_null() {
                println!("{summary}");
            }
            // 3: the table was written but some cells failed.
            ExitCode::from(if ok { 0 } else { 3 })
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
