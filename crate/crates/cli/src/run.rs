//! `run_single` and `run_table`: validate, call the backend, write artifacts.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

use fracrbf::assembly::SpatialDerivative;
use fracrbf::nodes::{NodeError, NodeSet};
use fracrbf::precondition::{PreconditionReport, PreconditionerForm};
use fracrbf::problems::ProblemId;
use fracrbf::series::{PlotData, SeriesError};
use fracrbf::solver::{ErrorStats, SolutionHistory, SolverError, SolverOptions};
use fracrbf::tables::{CellMetrics, ReferenceRow, TableId};

use crate::backend::Backend;
use crate::config::{ConfigError, RunConfig};
use crate::output::{csv_bytes, num, opt_num, write_atomic};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Nodes(#[from] NodeError),
    #[error(transparent)]
    Solver(SolverError),
    #[error("solver broke down at step {step}: {message}")]
    Breakdown { step: usize, message: String },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Io { .. } => "io",
            Self::Nodes(_) => "nodes",
            Self::Solver(_) => "solver",
            Self::Breakdown { .. } => "breakdown",
            Self::Series(_) => "series",
        }
    }

    /// `{"error": {"kind", "message", "step"?}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        if let Self::Breakdown { step, .. } = self {
            body["step"] = json!(step);
        }
        json!({ "error": body })
    }

    /// 2 for configuration problems caught before compute, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            _ => 1,
        }
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsReport {
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub t0: f64,
    pub sigma: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionsReport {
    pub precondition: bool,
    pub preconditioner: PreconditionerForm,
    pub spatial: SpatialDerivative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResidual {
    pub step: usize,
    pub t: f64,
    pub rmse: f64,
    /// `‖GΛ - U‖₂`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub setup_ms: f64,
    pub steps_ms: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub problem: ProblemId,
    pub np: usize,
    pub interior: usize,
    pub boundary: usize,
    pub steps: usize,
    pub kernel: String,
    pub params: ParamsReport,
    pub options: OptionsReport,
    pub cond_before: f64,
    pub cond_after: f64,
    pub ratio: f64,
    pub preconditioned: bool,
    pub final_time: f64,
    pub final_rmse: f64,
    /// Present only when an exact solution applies (`α = β = 1`).
    pub max_analytic_error: Option<f64>,
    pub residuals: Vec<StepResidual>,
    pub timings: Option<TimingReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub out: PathBuf,
    pub report: RunReport,
}

fn millis(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn steps_csv(history: &SolutionHistory, errors: Option<&[ErrorStats]>, timings: bool) -> Vec<u8> {
    let mut header = vec!["step", "t", "rmse", "max_analytic_err"];
    if timings {
        header.push("wall_ms");
    }
    let rows = history.records.iter().enumerate().map(|(k, r)| {
        let mut row = vec![
            r.step.to_string(),
            num(r.time),
            num(r.rmse),
            opt_num(errors.and_then(|e| e.get(k)).map(|e| e.max)),
        ];
        if timings {
            row.push(num(millis(r.wall_time)));
        }
        row
    });
    csv_bytes(&header, rows)
}

fn solution_csv(history: &SolutionHistory, exact: Option<&[f64]>) -> Vec<u8> {
    let nodes = &history.nodes;
    let values = history
        .nodal(history.len())
        .expect("step count is in range");
    let rows = (0..nodes.len()).map(|i| {
        let p = nodes.point(i);
        vec![
            i.to_string(),
            num(p[0]),
            p.get(1).map(|&y| num(y)).unwrap_or_default(),
            nodes.kind(i).to_string(),
            num(values[i]),
            opt_num(exact.map(|e| e[i])),
        ]
    });
    csv_bytes(&["index", "x", "y", "kind", "u", "exact"], rows)
}

fn nodes_csv(nodes: &NodeSet) -> Vec<u8> {
    let mut bytes = Vec::new();
    nodes.write_csv(&mut bytes).expect("writing to memory");
    bytes
}

/// `rmse.csv` plus one `slice_stepNNNN.csv` per requested step.
fn write_plot_data(out: &Path, data: &PlotData, dim: usize) -> Result<(), CliError> {
    let rows = data.rmse.iter().map(|&(t, e)| vec![num(t), num(e)]);
    write(&out.join("rmse.csv"), &csv_bytes(&["t", "rmse"], rows))?;
    let header: &[&str] = if dim == 1 {
        &["x", "u", "exact"]
    } else {
        &["x", "y", "u", "exact"]
    };
    for slice in &data.slices {
        let rows = slice.points.iter().map(|p| {
            let mut row: Vec<String> = p.x.iter().map(|&v| num(v)).collect();
            row.push(num(p.u));
            row.push(opt_num(p.exact));
            row
        });
        write(
            &out.join(format!("slice_step{:04}.csv", slice.step)),
            &csv_bytes(header, rows),
        )?;
    }
    Ok(())
}

fn report(
    config: &RunConfig,
    history: &SolutionHistory,
    errors: Option<&[ErrorStats]>,
) -> RunReport {
    let PreconditionReport {
        cond_before,
        cond_after,
        ratio,
        preconditioned,
    } = history.report;
    let last = history.last().expect("at least one step");
    let sqrt_n = (history.nodes.len() as f64).sqrt();
    RunReport {
        problem: config.problem,
        np: history.nodes.len(),
        interior: history.nodes.interior_count(),
        boundary: history.nodes.boundary_count(),
        steps: history.len(),
        kernel: config.kernel.to_string(),
        params: ParamsReport {
            alpha: config.alpha,
            beta: config.beta,
            dt: config.dt,
            t0: history.params.t0,
            sigma: config.sigma,
            rate: config.rate,
        },
        options: OptionsReport {
            precondition: config.precondition,
            preconditioner: config.preconditioner,
            spatial: config.spatial,
        },
        cond_before,
        cond_after,
        ratio,
        preconditioned,
        final_time: last.time,
        final_rmse: last.rmse,
        max_analytic_error: errors.and_then(|e| e.last()).map(|e| e.max),
        residuals: history
            .records
            .iter()
            .map(|r| StepResidual {
                step: r.step,
                t: r.time,
                rmse: r.rmse,
                residual: r.rmse * sqrt_n,
            })
            .collect(),
        timings: config.timings.then(|| TimingReport {
            setup_ms: millis(history.setup_time),
            steps_ms: history.records.iter().map(|r| millis(r.wall_time)).sum(),
        }),
    }
}

/// Solves one configuration and writes `nodes.csv`, `steps.csv`,
/// `solution.csv`, `report.json`, `rmse.csv` and the slice files into `config.out`.
pub fn run_single(config: &RunConfig, backend: &dyn Backend) -> Result<RunSummary, CliError> {
    config.validate()?;
    let params = config.params().map_err(ConfigError::from)?;
    let problem = config
        .problem
        .build(config.market())
        .ok_or(ConfigError::CustomProblem)?;
    let nodes = backend.nodes(problem.dim(), config.np)?;
    let out = config.out.clone();
    create_dir(&out)?;
    write(&out.join("nodes.csv"), &nodes_csv(&nodes))?;

    let analytic = if config.alpha == 1.0 && config.beta == 1.0 {
        problem.analytic.clone()
    } else {
        None
    };
    let options = config.solver_options();
    let history = match backend.solve(
        &problem,
        &nodes,
        &config.kernel,
        &params,
        config.steps,
        &options,
    ) {
        Ok(h) => h,
        Err(SolverError::Breakdown {
            step,
            source,
            partial,
        }) => {
            write(
                &out.join("steps.csv"),
                &steps_csv(&partial, None, config.timings),
            )?;
            return Err(CliError::Breakdown {
                step,
                message: source.to_string(),
            });
        }
        Err(e) => return Err(CliError::Solver(e)),
    };
    let errors = analytic.as_ref().map(|a| backend.errors(&history, a));
    let exact: Option<Vec<f64>> = analytic.as_ref().map(|a| {
        let t = history.last().expect("at least one step").time;
        nodes.points().map(|x| a(x, t)).collect()
    });

    write(
        &out.join("steps.csv"),
        &steps_csv(&history, errors.as_deref(), config.timings),
    )?;
    write(
        &out.join("solution.csv"),
        &solution_csv(&history, exact.as_deref()),
    )?;
    let report = report(config, &history, errors.as_deref());
    write(&out.join("report.json"), &to_json_bytes(&report))?;
    let plot = backend.plot(
        &history,
        analytic.as_ref(),
        &config.slices(),
        config.slice_samples,
    )?;
    write_plot_data(&out, &plot, nodes.dim())?;
    Ok(RunSummary { out, report })
}

/// One regenerated table row next to its published reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellOutcome {
    pub reference: ReferenceRow,
    pub metrics: Option<CellMetrics>,
    pub error: Option<String>,
}

impl CellOutcome {
    pub fn ok(&self) -> bool {
        self.metrics.is_some()
    }
}

const TABLE_HEADER: [&str; 12] = [
    "alpha",
    "beta",
    "N_p",
    "cond_G",
    "cond_Gtilde",
    "RMSE",
    "RMSE_first",
    "paper_cond_G",
    "paper_cond_Gtilde",
    "paper_RMSE",
    "status",
    "error",
];

/// The table as CSV, one row per cell in published order.
pub fn table_csv(cells: &[CellOutcome]) -> Vec<u8> {
    let rows = cells.iter().map(|c| {
        let r = &c.reference;
        let m = c.metrics.as_ref();
        vec![
            num(r.alpha),
            num(r.beta),
            r.np.to_string(),
            opt_num(m.map(|m| m.cond_g)),
            opt_num(m.map(|m| m.cond_gtilde)),
            opt_num(m.map(|m| m.rmse)),
            opt_num(m.map(|m| m.rmse_first)),
            num(r.cond_g),
            num(r.cond_gtilde),
            num(r.rmse),
            if c.ok() { "ok" } else { "failed" }.to_string(),
            c.error.clone().unwrap_or_default(),
        ]
    });
    csv_bytes(&TABLE_HEADER, rows)
}

/// Runs every cell of `table` in parallel. Each cell's outcome is written to
/// `out/tableN/cell_KK.json` as soon as it finishes, and the consolidated
/// table to `out/tableN.csv`. A failed cell is recorded and the rest still run.
pub fn run_table(
    table: TableId,
    out: &Path,
    options: &SolverOptions,
    backend: &dyn Backend,
) -> Result<Vec<CellOutcome>, CliError> {
    let cell_dir = out.join(table.to_string());
    create_dir(&cell_dir)?;
    let cells = table
        .rows()
        .par_iter()
        .enumerate()
        .map(|(k, row)| {
            let outcome = match backend.table_cell(table, row, options) {
                Ok(m) => CellOutcome {
                    reference: *row,
                    metrics: Some(m),
                    error: None,
                },
                Err(e) => CellOutcome {
                    reference: *row,
                    metrics: None,
                    error: Some(e.to_string()),
                },
            };
            write(
                &cell_dir.join(format!("cell_{k:02}.json")),
                &to_json_bytes(&outcome),
            )?;
            Ok(outcome)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write(&out.join(format!("{table}.csv")), &table_csv(&cells))?;
    Ok(cells)
}
