//! The numerical calls the front-end makes, behind a trait so tests can
//! substitute a recorder. The front-end itself only validates, formats and writes.

use fracrbf::kernels::RadialKernel;
use fracrbf::nodes::{chebyshev_nodes, unit_square_nodes, NodeError, NodeSet};
use fracrbf::params::FractionalParams;
use fracrbf::problems::{ProblemSpec, SpaceTimeFn};
use fracrbf::series::{plot_data, PlotData, SeriesError};
use fracrbf::solver::{
    analytic_error, run, ErrorStats, SolutionHistory, SolverError, SolverOptions,
};
use fracrbf::tables::{run_cell, CellError, CellMetrics, ReferenceRow, TableId};

pub trait Backend: Sync {
    /// Chebyshev-Lobatto nodes in 1D, perimeter plus Halton nodes in 2D.
    fn nodes(&self, dim: usize, np: usize) -> Result<NodeSet, NodeError>;

    fn solve(
        &self,
        problem: &ProblemSpec,
        nodes: &NodeSet,
        kernel: &RadialKernel,
        params: &FractionalParams,
        steps: usize,
        options: &SolverOptions,
    ) -> Result<SolutionHistory, SolverError>;

    fn errors(&self, history: &SolutionHistory, analytic: &SpaceTimeFn) -> Vec<ErrorStats>;

    fn plot(
        &self,
        history: &SolutionHistory,
        analytic: Option<&SpaceTimeFn>,
        steps: &[usize],
        samples: usize,
    ) -> Result<PlotData, SeriesError>;

    fn table_cell(
        &self,
        table: TableId,
        row: &ReferenceRow,
        options: &SolverOptions,
    ) -> Result<CellMetrics, CellError>;
}

/// Delegates every call to the `fracrbf` library.
#[derive(Debug, Clone, Copy, Default)]
pub struct Library;

impl Backend for Library {
    fn nodes(&self, dim: usize, np: usize) -> Result<NodeSet, NodeError> {
        match dim {
            1 => chebyshev_nodes(np, 0.0, 1.0),
            2 => unit_square_nodes(np),
            d => Err(NodeError::Dimension(d)),
        }
    }

    fn solve(
        &self,
        problem: &ProblemSpec,
        nodes: &NodeSet,
        kernel: &RadialKernel,
        params: &FractionalParams,
        steps: usize,
        options: &SolverOptions,
    ) -> Result<SolutionHistory, SolverError> {
        run(problem, nodes, kernel, params, steps, options)
    }

    fn errors(&self, history: &SolutionHistory, analytic: &SpaceTimeFn) -> Vec<ErrorStats> {
        analytic_error(history, |x, t| analytic(x, t))
    }

    fn plot(
        &self,
        history: &SolutionHistory,
        analytic: Option<&SpaceTimeFn>,
        steps: &[usize],
        samples: usize,
    ) -> Result<PlotData, SeriesError> {
        plot_data(history, analytic, steps, samples)
    }

    fn table_cell(
        &self,
        table: TableId,
        row: &ReferenceRow,
        options: &SolverOptions,
    ) -> Result<CellMetrics, CellError> {
        run_cell(table, row, options)
    }
}
