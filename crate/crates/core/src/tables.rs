//! The `(α, β, N_p)` grids of the two published convergence tables, their
//! reference values, and the per-cell run that regenerates them.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::kernels::RadialKernel;
use crate::nodes::{chebyshev_nodes, unit_square_nodes, NodeError, NodeSet};
use crate::params::{FractionalParams, MarketCoefficients, ParamsError};
use crate::problems::{example1, example2, ProblemSpec};
use crate::solver::{run, SolverError, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    /// One-dimensional problem on Chebyshev nodes.
    One,
    /// Two-dimensional problem on Halton and perimeter nodes.
    Two,
}

impl TableId {
    pub fn number(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::One),
            2 => Some(Self::Two),
            _ => None,
        }
    }

    pub fn rows(self) -> &'static [ReferenceRow; 12] {
        match self {
            Self::One => &TABLE1,
            Self::Two => &TABLE2,
        }
    }

    pub fn problem(self, market: MarketCoefficients) -> ProblemSpec {
        match self {
            Self::One => example1(market),
            Self::Two => example2(market),
        }
    }

    pub fn nodes(self, np: usize) -> Result<NodeSet, NodeError> {
        match self {
            Self::One => chebyshev_nodes(np, 0.0, 1.0),
            Self::Two => unit_square_nodes(np),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "table{}", self.number())
    }
}

/// A published row: the configuration and the reported `cond(G)`, `cond(G̃)` and final RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub alpha: f64,
    pub beta: f64,
    pub np: usize,
    pub cond_g: f64,
    pub cond_gtilde: f64,
    pub rmse: f64,
}

const fn row(
    alpha: f64,
    beta: f64,
    np: usize,
    cond_g: f64,
    cond_gtilde: f64,
    rmse: f64,
) -> ReferenceRow {
    ReferenceRow {
        alpha,
        beta,
        np,
        cond_g,
        cond_gtilde,
        rmse,
    }
}

pub const TABLE1: [ReferenceRow; 12] = [
    row(1.0, 1.0, 36, 3.19985E+07, 9.03438E+00, 6.07019E-07),
    row(1.0, 1.0, 64, 1.89809E+08, 2.03053E+01, 4.26112E-06),
    row(1.0, 1.0, 100, 7.41018E+08, 3.52912E+01, 1.00781E-04),
    row(0.7, 1.0, 36, 5.42967E+06, 5.34347E+00, 9.65987E-08),
    row(0.7, 1.0, 64, 3.21286E+07, 1.37232E+01, 6.32924E-07),
    row(0.7, 1.0, 100, 1.25345E+08, 2.48729E+01, 4.73620E-06),
    row(1.0, 0.75, 36, 1.42516E+08, 1.04670E+01, 6.59344E-06),
    row(1.0, 0.75, 64, 9.92520E+08, 2.46329E+01, 1.04166E-04),
    row(1.0, 0.75, 100, 4.35794E+09, 4.49581E+01, 7.71606E-04),
    row(0.65, 0.8, 36, 1.24173E+07, 5.31271E+00, 5.86635E-07),
    row(0.65, 0.8, 64, 8.34941E+07, 1.17088E+01, 6.29195E-06),
    row(0.65, 0.8, 100, 3.58730E+08, 2.53325E+01, 1.20229E-05),
];

pub const TABLE2: [ReferenceRow; 12] = [
    row(1.0, 1.0, 256, 3.70947E+07, 2.68764E+00, 2.99897E-08),
    row(1.0, 1.0, 324, 6.33937E+07, 2.66676E+00, 1.47561E-08),
    row(1.0, 1.0, 400, 1.13978E+08, 2.27838E+00, 5.94686E-08),
    row(0.7, 1.0, 256, 1.44181E+07, 1.79504E+00, 8.35786E-09),
    row(0.7, 1.0, 324, 2.48632E+07, 1.71344E+00, 8.35289E-09),
    row(0.7, 1.0, 400, 4.54835E+07, 1.54992E+00, 1.40151E-08),
    row(1.0, 0.75, 256, 5.21246E+07, 3.12264E+00, 1.40965E-07),
    row(1.0, 0.75, 324, 8.12623E+07, 3.75596E+00, 1.97783E-07),
    row(1.0, 0.75, 400, 1.41019E+08, 3.16718E+00, 3.12793E-07),
    row(0.65, 0.8, 256, 1.42528E+07, 2.13174E+00, 9.01938E-09),
    row(0.65, 0.8, 324, 2.42863E+07, 2.06023E+00, 1.28433E-08),
    row(0.65, 0.8, 400, 4.37752E+07, 1.80894E+00, 4.51864E-08),
];

/// Time step and step count used by both tables.
pub const TABLE_DT: f64 = 1.0 / 25.0;
pub const TABLE_STEPS: usize = 25;

/// Regenerated values of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub cond_g: f64,
    pub cond_gtilde: f64,
    /// RMSE at the final step.
    pub rmse: f64,
    /// RMSE at the first step.
    pub rmse_first: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CellError {
    #[error(transparent)]
    Nodes(#[from] NodeError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Runs one cell with the published market data, `dt = 1/25` and 25 steps.
pub fn run_cell(
    table: TableId,
    reference: &ReferenceRow,
    options: &SolverOptions,
) -> Result<CellMetrics, CellError> {
    let market = MarketCoefficients::default();
    let params = FractionalParams::new(reference.alpha, reference.beta, market, TABLE_DT, 0.0)?;
    let nodes = table.nodes(reference.np)?;
    let problem = table.problem(market);
    let history = run(
        &problem,
        &nodes,
        &RadialKernel::default(),
        &params,
        TABLE_STEPS,
        options,
    )?;
    let first = history.records.first().map_or(f64::NAN, |r| r.rmse);
    let last = history.last().map_or(f64::NAN, |r| r.rmse);
    Ok(CellMetrics {
        cond_g: history.report.cond_before,
        cond_gtilde: history.report.cond_after,
        rmse: last,
        rmse_first: first,
    })
}

/// `|log10(a / b)|`, the number of decades between two positive values.
pub fn decades_apart(a: f64, b: f64) -> f64 {
    (a / b).log10().abs()
}
