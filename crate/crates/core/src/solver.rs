//! Time stepping with the full L1 memory: `G` is assembled and factored once,
//! each step builds `U^m` from every previous nodal vector and solves for `Λ^m`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};
use thiserror::Error;

use crate::assembly::{
    build_rhs, build_system_with, AssemblyError, CollocationSystem, SpatialDerivative,
};
use crate::fractional::QuadratureConfig;
use crate::kernels::RadialKernel;
use crate::nodes::NodeSet;
use crate::params::FractionalParams;
use crate::precondition::{FactoredSystem, PreconditionReport, PreconditionerForm, SolveError};
use crate::problems::ProblemSpec;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("at least one time step is required")]
    NoSteps,
    #[error("steps end at t = {end} beyond the problem interval [{t0}, {t1}]")]
    TimeInterval { end: f64, t0: f64, t1: f64 },
    #[error("node set is {nodes}-dimensional but the problem is {problem}-dimensional")]
    Dimension { nodes: usize, problem: usize },
    #[error("initial value at node {0} is not finite")]
    Initial(usize),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Factorization(#[from] SolveError),
    #[error("breakdown at step {step}: {source}")]
    Breakdown {
        step: usize,
        source: Box<SolverError>,
        partial: Box<SolutionHistory>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub precondition: bool,
    pub quadrature: QuadratureConfig,
    /// Keep only the most recent `n` nodal vectors in the memory term; `None`
    /// keeps the full history, which is the scheme. For studies only.
    pub memory_window: Option<usize>,
    /// RL unless a study asks otherwise.
    pub spatial: SpatialDerivative,
    /// Ignored when `precondition` is off.
    pub preconditioner_form: PreconditionerForm,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            precondition: true,
            quadrature: QuadratureConfig::default(),
            memory_window: None,
            spatial: SpatialDerivative::default(),
            preconditioner_form: PreconditionerForm::default(),
        }
    }
}

/// One completed time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// `Λ^m`.
    pub coefficients: DVector<f64>,
    /// `u^m = AΛ^m`.
    pub values: DVector<f64>,
    /// `sqrt(mean((GΛ^m - U^m)²))`.
    pub rmse: f64,
    pub wall_time: Duration,
}

/// Initial data plus every completed step, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionHistory {
    pub nodes: NodeSet,
    pub kernel: RadialKernel,
    pub params: FractionalParams,
    pub initial: DVector<f64>,
    pub records: Vec<StepRecord>,
    pub report: PreconditionReport,
    pub setup_time: Duration,
}

impl SolutionHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `u^m`, with `u^0` the sampled initial condition.
    pub fn nodal(&self, m: usize) -> Option<&DVector<f64>> {
        if m == 0 {
            Some(&self.initial)
        } else {
            self.records.get(m - 1).map(|r| &r.values)
        }
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// `σ^m(x) = Σ_j λ_j Φ(x, x_j)`.
    pub fn interpolant(&self, m: usize, x: &[f64]) -> Option<f64> {
        let record = self.records.get(m.checked_sub(1)?)?;
        evaluate_interpolant(&self.kernel, &self.nodes, &record.coefficients, x).ok()
    }
}

/// `σ(x) = Σ_j λ_j Φ(x, x_j)`.
pub fn evaluate_interpolant(
    kernel: &RadialKernel,
    nodes: &NodeSet,
    coefficients: &DVector<f64>,
    x: &[f64],
) -> Result<f64, crate::kernels::KernelError> {
    nodes
        .points()
        .zip(coefficients.iter())
        .map(|(c, l)| kernel.eval(x, c).map(|phi| phi * l))
        .sum()
}

/// `sqrt((1/N) Σ_j (G_j·Λ - U_j)²)` against the unpreconditioned system.
pub fn residual_rmse(g: &DMatrix<f64>, coefficients: &DVector<f64>, u: &DVector<f64>) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    (g * coefficients - u).norm() / (u.len() as f64).sqrt()
}

/// Nodal error against an exact solution at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub step: usize,
    pub time: f64,
    pub max: f64,
    pub rms: f64,
}

/// Per-step max and root-mean-square nodal errors for every completed step.
pub fn analytic_error<F>(history: &SolutionHistory, analytic: F) -> Vec<ErrorStats>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    history
        .records
        .iter()
        .map(|rec| {
            let errs: Vec<f64> = (0..history.nodes.len())
                .into_par_iter()
                .map(|i| (rec.values[i] - analytic(history.nodes.point(i), rec.time)).abs())
                .collect();
            let n = errs.len().max(1) as f64;
            ErrorStats {
                step: rec.step,
                time: rec.time,
                max: errs.iter().copied().fold(0.0, f64::max),
                rms: (errs.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
            }
        })
        .collect()
}

/// Assembles, factors and steps `steps` times.
pub fn run(
    problem: &ProblemSpec,
    nodes: &NodeSet,
    kernel: &RadialKernel,
    params: &FractionalParams,
    steps: usize,
    options: &SolverOptions,
) -> Result<SolutionHistory, SolverError> {
    if steps == 0 {
        return Err(SolverError::NoSteps);
    }
    if nodes.dim() != problem.dim() {
        return Err(SolverError::Dimension {
            nodes: nodes.dim(),
            problem: problem.dim(),
        });
    }
    let (t0, t1) = problem.time;
    let end = params.time(steps);
    let slack = 1e-9 * params.dt;
    if params.t0 < t0 - slack || end > t1 + slack {
        return Err(SolverError::TimeInterval { end, t0, t1 });
    }

    let started = Instant::now();
    let system = build_system_with(nodes, kernel, params, &options.quadrature, options.spatial)?;
    let form = options.precondition.then_some(options.preconditioner_form);
    let factored = FactoredSystem::with_form(&system.operator, form)?;
    let initial = DVector::from_iterator(nodes.len(), nodes.points().map(|x| problem.initial(x)));
    if let Some(i) = initial.iter().position(|v| !v.is_finite()) {
        return Err(SolverError::Initial(i));
    }
    let mut history = SolutionHistory {
        nodes: nodes.clone(),
        kernel: *kernel,
        params: *params,
        initial,
        records: Vec::with_capacity(steps),
        report: factored.report(),
        setup_time: started.elapsed(),
    };

    let mut levels: Vec<DVector<f64>> = vec![history.initial.clone()];
    for m in 1..=steps {
        let clock = Instant::now();
        match advance(&system, &factored, problem, m, &levels, options) {
            Ok((coefficients, values, rmse)) => {
                levels.push(values.clone());
                history.records.push(StepRecord {
                    step: m,
                    time: params.time(m),
                    coefficients,
                    values,
                    rmse,
                    wall_time: clock.elapsed(),
                });
            }
            Err(source) => {
                return Err(SolverError::Breakdown {
                    step: m,
                    source: Box::new(source),
                    partial: Box::new(history),
                })
            }
        }
    }
    Ok(history)
}

fn advance(
    system: &CollocationSystem,
    factored: &FactoredSystem,
    problem: &ProblemSpec,
    m: usize,
    levels: &[DVector<f64>],
    options: &SolverOptions,
) -> Result<(DVector<f64>, DVector<f64>, f64), SolverError> {
    let rhs = match options.memory_window {
        Some(window) if window < m => {
            let zero = DVector::zeros(system.len());
            let truncated: Vec<DVector<f64>> = (0..m)
                .map(|k| {
                    if k + window >= m {
                        levels[k].clone()
                    } else {
                        zero.clone()
                    }
                })
                .collect();
            build_rhs(system, m, &truncated, problem)?
        }
        _ => build_rhs(system, m, levels, problem)?,
    };
    let (coefficients, residual) = factored.solve(&rhs)?;
    let values = &system.evaluation * &coefficients;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite.into());
    }
    let rmse = residual / (rhs.len() as f64).sqrt();
    Ok((coefficients, values, rmse))
}
