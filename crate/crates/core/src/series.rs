//! Plot-ready series from a completed run: RMSE against time, and solution
//! slices along the domain diagonal (`y = x` on the unit square).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::kernels::KernelError;
use crate::problems::SpaceTimeFn;
use crate::solver::{evaluate_interpolant, SolutionHistory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("step {step} is outside the completed range 0..={last}")]
    Step { step: usize, last: usize },
    #[error("a slice needs at least 2 samples, got {0}")]
    Samples(usize),
    #[error("evaluation matrix is singular; cannot interpolate the initial data")]
    Singular,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// One point of a slice. `s` runs over `[0, 1]` along the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlicePoint {
    pub s: f64,
    pub x: Vec<f64>,
    pub u: f64,
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSlice {
    pub step: usize,
    pub time: f64,
    pub points: Vec<SlicePoint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PlotData {
    /// `(t_m, RMSE_m)` for `m = 1..=M`.
    pub rmse: Vec<(f64, f64)>,
    pub slices: Vec<SolutionSlice>,
}

/// The point at parameter `s` on the diagonal from `lower` to `upper`.
pub fn diagonal_point(history: &SolutionHistory, s: f64) -> Vec<f64> {
    let domain = history.nodes.domain();
    domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(lo, hi)| lo + s * (hi - lo))
        .collect()
}

fn coefficients(history: &SolutionHistory, step: usize) -> Result<DVector<f64>, SeriesError> {
    if let Some(rec) = step.checked_sub(1).and_then(|k| history.records.get(k)) {
        return Ok(rec.coefficients.clone());
    }
    // Step 0 has no solve; interpolate the sampled initial data instead.
    let nodes = &history.nodes;
    let n = nodes.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = history.kernel.eval(nodes.point(i), nodes.point(j))?;
        }
    }
    a.lu().solve(&history.initial).ok_or(SeriesError::Singular)
}

/// RMSE series plus slices at `steps`, each sampled at `samples` evenly spaced
/// points. An empty history gives empty output.
pub fn plot_data(
    history: &SolutionHistory,
    analytic: Option<&SpaceTimeFn>,
    steps: &[usize],
    samples: usize,
) -> Result<PlotData, SeriesError> {
    if history.is_empty() {
        return Ok(PlotData::default());
    }
    if samples < 2 {
        return Err(SeriesError::Samples(samples));
    }
    let last = history.len();
    let rmse = history.records.iter().map(|r| (r.time, r.rmse)).collect();
    let mut slices = Vec::with_capacity(steps.len());
    for &step in steps {
        if step > last {
            return Err(SeriesError::Step { step, last });
        }
        let lambda = coefficients(history, step)?;
        let time = history.params.time(step);
        let points = (0..samples)
            .map(|k| {
                let s = k as f64 / (samples - 1) as f64;
                let x = diagonal_point(history, s);
                let u = evaluate_interpolant(&history.kernel, &history.nodes, &lambda, &x)?;
                let exact = analytic.map(|f| f(&x, time));
                Ok(SlicePoint { s, x, u, exact })
            })
            .collect::<Result<_, SeriesError>>()?;
        slices.push(SolutionSlice { step, time, points });
    }
    Ok(PlotData { rmse, slices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RadialKernel;
    use crate::nodes::{chebyshev_nodes, unit_square_nodes};
    use crate::params::{FractionalParams, MarketCoefficients};
    use crate::problems::{example1, example2};
    use crate::solver::{run, SolverOptions};

    fn history(two_d: bool, steps: usize) -> (SolutionHistory, Option<SpaceTimeFn>) {
        let market = MarketCoefficients::default();
        let params = FractionalParams::new(1.0, 1.0, market, 0.1, 0.0).unwrap();
        let (problem, nodes) = if two_d {
            (example2(market), unit_square_nodes(36).unwrap())
        } else {
            (example1(market), chebyshev_nodes(12, 0.0, 1.0).unwrap())
        };
        let h = run(
            &problem,
            &nodes,
            &RadialKernel::default(),
            &params,
            steps,
            &SolverOptions::default(),
        )
        .unwrap();
        (h, problem.analytic)
    }

    #[test]
    fn rmse_series_has_one_entry_per_step() {
        let (h, _) = history(false, 4);
        let data = plot_data(&h, None, &[], 5).unwrap();
        assert_eq!(data.rmse.len(), 4);
        assert!(data.slices.is_empty());
        for (k, (t, e)) in data.rmse.iter().enumerate() {
            assert_eq!(*t, h.records[k].time);
            assert_eq!(*e, h.records[k].rmse);
        }
    }

    #[test]
    fn empty_history_gives_empty_series() {
        let (mut h, a) = history(false, 1);
        h.records.clear();
        assert_eq!(
            plot_data(&h, a.as_ref(), &[0, 3], 0).unwrap(),
            PlotData::default()
        );
    }

    #[test]
    fn diagonal_slice_of_analytic_matches_direct_evaluation() {
        let (h, a) = history(true, 2);
        let data = plot_data(&h, a.as_ref(), &[0, 2], 11).unwrap();
        let f = a.unwrap();
        let slice = &data.slices[0];
        assert_eq!(slice.time, 0.0);
        for p in &slice.points {
            assert_eq!(p.x, vec![p.s, p.s]);
            let q = 2.0 * p.s * p.s;
            let direct = 0.25 * (1.0 - q) * (2.0 - q) * (2.0 * q).sin().powi(2);
            assert!((p.exact.unwrap() - direct).abs() <= 1e-14);
            assert_eq!(p.exact.unwrap(), f(&p.x, 0.0));
        }
    }

    #[test]
    fn slices_reproduce_nodal_values_at_nodes() {
        // Chebyshev-Lobatto includes both endpoints, which are also the slice ends.
        let (h, _) = history(false, 3);
        let data = plot_data(&h, None, &[0, 3], 2).unwrap();
        for slice in &data.slices {
            let nodal = h.nodal(slice.step).unwrap();
            let ends = [nodal[0], nodal[h.nodes.len() - 1]];
            let (lo, hi) = if h.nodes.point(0)[0] == 0.0 {
                (ends[0], ends[1])
            } else {
                (ends[1], ends[0])
            };
            assert!((slice.points[0].u - lo).abs() < 1e-9);
            assert!((slice.points[1].u - hi).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let (h, _) = history(false, 2);
        assert_eq!(
            plot_data(&h, None, &[3], 5),
            Err(SeriesError::Step { step: 3, last: 2 })
        );
        assert_eq!(plot_data(&h, None, &[1], 1), Err(SeriesError::Samples(1)));
    }
}
