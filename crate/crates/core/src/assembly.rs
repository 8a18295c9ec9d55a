//! Collocation matrices `G = δ_α A - L_{β,r} A` (interior rows), `G = A` (boundary
//! rows), and the per-step right-hand side carrying the L1 memory term.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fractional::{
    recip_gamma, FractionalError, FractionalOrder, Profile, QuadratureConfig, WeaklySingularRule,
    WeightSequence,
};
use crate::kernels::{classical_operator, norm, KernelError, RadialKernel};
use crate::nodes::NodeSet;
use crate::params::{FractionalParams, MarketCoefficients};
use crate::problems::ProblemSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("entry ({i}, {j}): {source}")]
    Kernel {
        i: usize,
        j: usize,
        source: KernelError,
    },
    #[error("entry ({i}, {j}): {source}")]
    Operator {
        i: usize,
        j: usize,
        source: FractionalError,
    },
    #[error("entry ({i}, {j}) is not finite: {value}")]
    NonFinite { i: usize, j: usize, value: f64 },
    #[error("polyharmonic degree 1 has no second derivative at its center")]
    UnsupportedKernel,
    #[error("node set is {nodes}-dimensional but the problem is {problem}-dimensional")]
    Dimension { nodes: usize, problem: usize },
    #[error("step {step} needs {step} history vectors, got {got}")]
    History { step: usize, got: usize },
    #[error("history vector {index} has length {len}, expected {expected}")]
    HistoryLength {
        index: usize,
        len: usize,
        expected: usize,
    },
    #[error("right-hand side entry {index} is not finite at step {step}")]
    NonFiniteRhs { index: usize, step: usize },
}

/// Which fractional derivative `L_{β,r}` applies along rays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialDerivative {
    /// Riemann-Liouville, the operator of both examples.
    #[default]
    #[serde(rename = "rl")]
    RiemannLiouville,
    /// Caputo: the RL form without the `g(0)`, `g'(0)` origin terms. For studies.
    Caputo,
}

impl std::fmt::Display for SpatialDerivative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::RiemannLiouville => "rl",
            Self::Caputo => "caputo",
        })
    }
}

impl std::str::FromStr for SpatialDerivative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rl" => Ok(Self::RiemannLiouville),
            "caputo" => Ok(Self::Caputo),
            other => Err(format!(
                "unknown spatial derivative `{other}`; expected rl or caputo"
            )),
        }
    }
}

/// `L_{β,r}` restricted to ray profiles, with its quadrature rule prepared once.
///
/// For `β < 1` both derivatives come from one pass over `[g', g'']` with weight `(r-t)^{-β}`:
/// `D^β g = (∫ g' + g(0) r^{-β}) / Γ(1-β)` and
/// `D^{β+1} g = ∫ g'' / Γ(1-β) + g(0) r^{-β-1} / Γ(-β) + g'(0) r^{-β} / Γ(1-β)`.
/// The Caputo variant keeps only the integrals.
#[derive(Debug, Clone)]
pub struct SpatialOperator {
    beta: FractionalOrder,
    market: MarketCoefficients,
    rule: Option<WeaklySingularRule>,
    derivative: SpatialDerivative,
}

/// `(D^β g)(r)` and `(D^{β+1} g)(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayDerivatives {
    pub first: f64,
    pub second: f64,
    pub value: f64,
}

impl SpatialOperator {
    pub fn new(
        beta: FractionalOrder,
        market: MarketCoefficients,
        quadrature: &QuadratureConfig,
    ) -> Result<Self, FractionalError> {
        if beta.value() > 1.0 {
            return Err(FractionalError::OrderTooLarge {
                order: beta.value(),
                max: 1.0,
            });
        }
        let rule = if beta.is_integer() {
            None
        } else {
            Some(WeaklySingularRule::new(-beta.value(), quadrature)?)
        };
        Ok(Self {
            beta,
            market,
            rule,
            derivative: SpatialDerivative::default(),
        })
    }

    pub fn with_derivative(mut self, derivative: SpatialDerivative) -> Self {
        self.derivative = derivative;
        self
    }

    pub fn beta(&self) -> FractionalOrder {
        self.beta
    }

    pub fn derivative(&self) -> SpatialDerivative {
        self.derivative
    }

    /// Derivatives of orders `β` and `β+1` of the ray profile of `Φ(·, center)`
    /// through `x`, at `r = ‖x‖`.
    pub fn derivatives(
        &self,
        kernel: &RadialKernel,
        center: &[f64],
        x: &[f64],
    ) -> Result<RayDerivatives, SpatialError> {
        let profile = kernel.ray_profile(center, x)?;
        let r = norm(x);
        let [g, g1, g2] = profile.jet(r);
        let Some(rule) = &self.rule else {
            return Ok(RayDerivatives {
                first: g1,
                second: g2,
                value: g,
            });
        };
        let [i1, i2] = rule
            .integrate(r, &profile.singularities(), |t| {
                let j = profile.jet(t);
                [j[1], j[2]]
            })
            .map_err(FractionalError::from)?;
        let b = self.beta.value();
        let c = recip_gamma(1.0 - b);
        if self.derivative == SpatialDerivative::Caputo {
            return Ok(RayDerivatives {
                first: i1 * c,
                second: i2 * c,
                value: g,
            });
        }
        let [g0, g0p, _] = profile.jet(0.0);
        let first = (i1 + g0 * r.powf(-b)) * c;
        let second = i2 * c + g0 * r.powf(-b - 1.0) * recip_gamma(-b) + g0p * r.powf(-b) * c;
        Ok(RayDerivatives {
            first,
            second,
            value: g,
        })
    }

    /// `½σ̃² D^{β+1} g + (r̃ - ½σ̃²) D^β g - r̃ g` at `r = ‖x‖`.
    pub fn entry(
        &self,
        kernel: &RadialKernel,
        center: &[f64],
        x: &[f64],
    ) -> Result<f64, SpatialError> {
        let d = self.derivatives(kernel, center, x)?;
        Ok(
            self.market.diffusion() * d.second + self.market.drift() * d.first
                - self.market.rate * d.value,
        )
    }
}

/// Failure of a single operator entry, before row and column context is attached.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Operator(#[from] FractionalError),
}

impl SpatialError {
    fn at(self, i: usize, j: usize) -> AssemblyError {
        match self {
            Self::Kernel(source) => AssemblyError::Kernel { i, j, source },
            Self::Operator(source) => AssemblyError::Operator { i, j, source },
        }
    }
}

/// One-off `L_{β,r} Φ(·, center)` at `x`.
pub fn spatial_operator_entry(
    kernel: &RadialKernel,
    center: &[f64],
    x: &[f64],
    beta: FractionalOrder,
    market: MarketCoefficients,
    quadrature: &QuadratureConfig,
) -> Result<f64, SpatialError> {
    SpatialOperator::new(beta, market, quadrature)?.entry(kernel, center, x)
}

/// Operator matrix `G`, evaluation matrix `A`, and the data they were built from.
#[derive(Debug, Clone, Serialize)]
pub struct CollocationSystem {
    #[serde(skip)]
    pub operator: DMatrix<f64>,
    #[serde(skip)]
    pub evaluation: DMatrix<f64>,
    pub nodes: NodeSet,
    pub kernel: RadialKernel,
    pub params: FractionalParams,
}

impl CollocationSystem {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn delta_alpha(&self) -> f64 {
        self.params.delta_alpha()
    }
}

/// Rejects kernels the operator cannot be applied to.
pub fn check_kernel(kernel: &RadialKernel) -> Result<(), AssemblyError> {
    if *kernel == (RadialKernel::Polyharmonic { degree: 1 }) {
        Err(AssemblyError::UnsupportedKernel)
    } else {
        Ok(())
    }
}

fn assemble<F>(nodes: &NodeSet, entry: F) -> Result<DMatrix<f64>, AssemblyError>
where
    F: Fn(usize, usize) -> Result<f64, AssemblyError> + Sync,
{
    let n = nodes.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| entry(i, j)).collect::<Result<Vec<f64>, _>>())
        .collect::<Result<_, _>>()?;
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if let Some((idx, &value)) = m.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(AssemblyError::NonFinite {
            i: idx % n,
            j: idx / n,
            value,
        });
    }
    Ok(m)
}

fn evaluation_matrix(
    nodes: &NodeSet,
    kernel: &RadialKernel,
) -> Result<DMatrix<f64>, AssemblyError> {
    assemble(nodes, |i, j| {
        kernel
            .eval(nodes.point(i), nodes.point(j))
            .map_err(|source| AssemblyError::Kernel { i, j, source })
    })
}

/// Assembles `G` and `A` with the RL operator; interior rows in parallel.
pub fn build_system(
    nodes: &NodeSet,
    kernel: &RadialKernel,
    params: &FractionalParams,
    quadrature: &QuadratureConfig,
) -> Result<CollocationSystem, AssemblyError> {
    build_system_with(
        nodes,
        kernel,
        params,
        quadrature,
        SpatialDerivative::RiemannLiouville,
    )
}

/// [`build_system`] with a chosen spatial derivative.
pub fn build_system_with(
    nodes: &NodeSet,
    kernel: &RadialKernel,
    params: &FractionalParams,
    quadrature: &QuadratureConfig,
    derivative: SpatialDerivative,
) -> Result<CollocationSystem, AssemblyError> {
    check_kernel(kernel)?;
    let op = SpatialOperator::new(params.beta, params.market, quadrature)
        .map_err(|e| SpatialError::from(e).at(0, 0))?
        .with_derivative(derivative);
    let delta = params.delta_alpha();
    let evaluation = evaluation_matrix(nodes, kernel)?;
    let operator = assemble(nodes, |i, j| {
        if nodes.is_boundary(i) {
            return Ok(evaluation[(i, j)]);
        }
        let l = op
            .entry(kernel, nodes.point(j), nodes.point(i))
            .map_err(|e| e.at(i, j))?;
        Ok(delta * evaluation[(i, j)] - l)
    })?;
    Ok(CollocationSystem {
        operator,
        evaluation,
        nodes: nodes.clone(),
        kernel: *kernel,
        params: *params,
    })
}

/// `G` with interior rows built from `classical_operator`, ignoring `β`.
pub fn build_classical_operator(
    nodes: &NodeSet,
    kernel: &RadialKernel,
    params: &FractionalParams,
) -> Result<DMatrix<f64>, AssemblyError> {
    check_kernel(kernel)?;
    let delta = params.delta_alpha();
    assemble(nodes, |i, j| {
        let (x, c) = (nodes.point(i), nodes.point(j));
        let phi = kernel
            .eval(x, c)
            .map_err(|source| AssemblyError::Kernel { i, j, source })?;
        if nodes.is_boundary(i) {
            return Ok(phi);
        }
        let l = classical_operator(kernel, c, x, &params.market)
            .map_err(|source| AssemblyError::Kernel { i, j, source })?;
        Ok(delta * phi - l)
    })
}

/// Right-hand side `U^m` for step `m >= 1` from the nodal history `u^0 .. u^{m-1}`.
///
/// Interior: `u_I(x_i, t_m) + δ_α [c_{m-1} u^0_i + Σ_{k=1}^{m-1} (c_{k-1} - c_k) u^{m-k}_i]`.
/// Boundary: `u_B(x_i, t_m)`.
pub fn build_rhs(
    system: &CollocationSystem,
    step: usize,
    history: &[DVector<f64>],
    problem: &ProblemSpec,
) -> Result<DVector<f64>, AssemblyError> {
    if step == 0 || history.len() != step {
        return Err(AssemblyError::History {
            step,
            got: history.len(),
        });
    }
    let nodes = &system.nodes;
    if problem.dim() != nodes.dim() {
        return Err(AssemblyError::Dimension {
            nodes: nodes.dim(),
            problem: problem.dim(),
        });
    }
    let n = nodes.len();
    if let Some((index, h)) = history.iter().enumerate().find(|(_, h)| h.len() != n) {
        return Err(AssemblyError::HistoryLength {
            index,
            len: h.len(),
            expected: n,
        });
    }
    let params = &system.params;
    let t = params.time(step);
    let delta = params.delta_alpha();
    let weights = WeightSequence::new(params.alpha, step);
    let c = weights.weights();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = nodes.point(i);
            if nodes.is_boundary(i) {
                return problem.boundary(x, t);
            }
            let memory: f64 = (1..step)
                .map(|k| weights.memory_coefficient(k) * history[step - k][i])
                .sum();
            problem.source(x, t) + delta * (c[step - 1] * history[0][i] + memory)
        })
        .collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(AssemblyError::NonFiniteRhs { index, step });
    }
    Ok(DVector::from_vec(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::{chebyshev_nodes, unit_square_nodes};

    const PHS3: RadialKernel = RadialKernel::Polyharmonic { degree: 3 };

    fn order(v: f64) -> FractionalOrder {
        FractionalOrder::new(v).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs()
    }

    fn spatial(beta: f64) -> SpatialOperator {
        SpatialOperator::new(
            order(beta),
            MarketCoefficients::default(),
            &QuadratureConfig::default(),
        )
        .unwrap()
    }

    // Reference values: mpmath at 30 digits, adaptive quadrature of the RL
    // integrals after the substitution t = r - r·w^{1/(1-β)}, which removes the
    // endpoint singularity, with breakpoints at the kink.
    #[test]
    fn one_dimensional_kinked_profile() {
        let d = spatial(0.5).derivatives(&PHS3, &[0.5], &[0.8]).unwrap();
        assert!(close(d.first, 0.0812330200728126208, 1e-11), "{}", d.first);
        assert!(close(d.second, 0.759075054057948925, 1e-11), "{}", d.second);
        let e = spatial(0.5).entry(&PHS3, &[0.5], &[0.8]).unwrap();
        assert!(close(e, 0.0238942145656761405, 1e-10), "{e}");
    }

    #[test]
    fn two_dimensional_ray_off_center() {
        let d = spatial(0.75)
            .derivatives(&PHS3, &[0.3, 0.6], &[0.5, 0.4])
            .unwrap();
        assert!(close(d.first, -0.0229988559219478379, 1e-10), "{}", d.first);
        assert!(close(d.second, 0.602400845087029443, 1e-11), "{}", d.second);
        let e = spatial(0.75)
            .entry(&PHS3, &[0.3, 0.6], &[0.5, 0.4])
            .unwrap();
        assert!(close(e, 0.0172624270105346721, 1e-10), "{e}");
    }

    #[test]
    fn two_dimensional_ray_near_center() {
        let d = spatial(0.3)
            .derivatives(&PHS3, &[0.2, 0.1001], &[0.6, 0.3])
            .unwrap();
        assert!(close(d.first, 0.163497614485329096, 1e-10), "{}", d.first);
        assert!(close(d.second, 0.989369473709691513, 1e-10), "{}", d.second);
        let e = spatial(0.3)
            .entry(&PHS3, &[0.2, 0.1001], &[0.6, 0.3])
            .unwrap();
        assert!(close(e, 0.0295125816083537671, 1e-10), "{e}");
    }

    #[test]
    fn multiquadric_profile() {
        let mq = RadialKernel::multiquadric(2.0, 1.0).unwrap();
        let d = spatial(0.6).derivatives(&mq, &[0.4], &[0.9]).unwrap();
        assert!(close(d.first, 1.40180325336513475, 1e-11), "{}", d.first);
        assert!(close(d.second, 1.59870877021360638, 1e-11), "{}", d.second);
        let e = spatial(0.6).entry(&mq, &[0.4], &[0.9]).unwrap();
        assert!(close(e, 0.00553278195111672358, 1e-9), "{e}");
    }

    #[test]
    fn integer_order_is_classical() {
        let m = MarketCoefficients::default();
        for (c, x) in [(vec![0.2], vec![0.7]), (vec![0.3, 0.6], vec![0.5, 0.4])] {
            let e = spatial(1.0).entry(&PHS3, &c, &x).unwrap();
            let classical = classical_operator(&PHS3, &c, &x, &m).unwrap();
            assert!(close(e, classical, 1e-12));
        }
    }

    #[test]
    fn approaches_classical_as_beta_tends_to_one() {
        let m = MarketCoefficients::default();
        let classical = classical_operator(&PHS3, &[0.3, 0.6], &[0.5, 0.4], &m).unwrap();
        let e = spatial(1.0 - 1e-6)
            .entry(&PHS3, &[0.3, 0.6], &[0.5, 0.4])
            .unwrap();
        assert!((e - classical).abs() < 1e-4, "{e} vs {classical}");
    }

    #[test]
    fn caputo_drops_origin_terms() {
        let b = 0.7;
        let (c, x) = ([0.6], [0.35]);
        let rl = spatial(b).derivatives(&PHS3, &c, &x).unwrap();
        let cap = spatial(b)
            .with_derivative(SpatialDerivative::Caputo)
            .derivatives(&PHS3, &c, &x)
            .unwrap();
        let (g0, g0p, r) = (0.6f64.powi(3), -3.0 * 0.36, 0.35f64);
        let first = g0 * r.powf(-b) * recip_gamma(1.0 - b);
        let second =
            g0 * r.powf(-b - 1.0) * recip_gamma(-b) + g0p * r.powf(-b) * recip_gamma(1.0 - b);
        assert!(close(rl.first - cap.first, first, 1e-12));
        assert!(close(rl.second - cap.second, second, 1e-12));
        assert_eq!(rl.value, cap.value);
    }

    #[test]
    fn caputo_and_rl_agree_on_flat_origin() {
        // Centered at 0 the profile is t³, so g(0) = g'(0) = 0.
        let b = 0.45;
        let x = [0.8];
        let rl = spatial(b).derivatives(&PHS3, &[0.0], &x).unwrap();
        let cap = spatial(b)
            .with_derivative(SpatialDerivative::Caputo)
            .derivatives(&PHS3, &[0.0], &x)
            .unwrap();
        let exact = 6.0 * recip_gamma(4.0 - b) * 0.8f64.powf(3.0 - b);
        assert!(close(rl.first, exact, 1e-10));
        assert!(close(cap.first, exact, 1e-10));
        assert!(close(rl.second, cap.second, 1e-10));
    }

    #[test]
    fn spatial_derivative_names() {
        for d in [
            SpatialDerivative::RiemannLiouville,
            SpatialDerivative::Caputo,
        ] {
            assert_eq!(d.to_string().parse::<SpatialDerivative>().unwrap(), d);
        }
        assert!("grunwald".parse::<SpatialDerivative>().is_err());
    }

    #[test]
    fn null_market_gives_zero() {
        let op = SpatialOperator::new(
            order(0.4),
            MarketCoefficients::new(0.0, 0.0),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert_eq!(op.entry(&PHS3, &[0.3, 0.2], &[0.7, 0.9]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_origin_and_large_orders() {
        assert!(matches!(
            spatial(0.5).entry(&PHS3, &[0.3], &[0.0]),
            Err(SpatialError::Kernel(KernelError::Origin))
        ));
        assert!(SpatialOperator::new(
            order(1.5),
            MarketCoefficients::default(),
            &QuadratureConfig::default()
        )
        .is_err());
    }

    fn params(alpha: f64, beta: f64) -> FractionalParams {
        FractionalParams::new(alpha, beta, MarketCoefficients::default(), 0.04, 0.0).unwrap()
    }

    #[test]
    fn boundary_rows_match_evaluation() {
        let nodes = unit_square_nodes(36).unwrap();
        let sys = build_system(
            &nodes,
            &PHS3,
            &params(0.7, 0.8),
            &QuadratureConfig::default(),
        )
        .unwrap();
        let n = nodes.len();
        for i in (0..n).filter(|&i| nodes.is_boundary(i)) {
            for j in 0..n {
                assert_eq!(sys.operator[(i, j)], sys.evaluation[(i, j)]);
            }
        }
        let a = &sys.evaluation;
        assert!((a - a.transpose()).amax() <= 1e-12 * a.amax());
    }

    #[test]
    fn boundary_only_set_gives_evaluation_matrix() {
        let nodes = chebyshev_nodes(2, 0.0, 1.0).unwrap();
        let sys = build_system(
            &nodes,
            &PHS3,
            &params(0.5, 0.5),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert_eq!(sys.operator, sys.evaluation);
    }

    #[test]
    fn unit_beta_matches_classical_assembly() {
        let nodes = chebyshev_nodes(36, 0.0, 1.0).unwrap();
        let p = params(1.0, 1.0);
        let sys = build_system(&nodes, &PHS3, &p, &QuadratureConfig::default()).unwrap();
        let classical = build_classical_operator(&nodes, &PHS3, &p).unwrap();
        assert!((&sys.operator - classical).amax() <= 1e-8);
    }

    #[test]
    fn degree_one_rejected() {
        let nodes = chebyshev_nodes(4, 0.0, 1.0).unwrap();
        let k = RadialKernel::Polyharmonic { degree: 1 };
        assert_eq!(
            build_system(&nodes, &k, &params(1.0, 1.0), &QuadratureConfig::default()).unwrap_err(),
            AssemblyError::UnsupportedKernel
        );
    }

    fn ramp_problem() -> ProblemSpec {
        use std::sync::Arc;
        ProblemSpec {
            name: "ramp".into(),
            domain: crate::nodes::DomainBox::unit(1),
            time: (0.0, 1.0),
            source: Arc::new(|x, t| x[0] + 10.0 * t),
            boundary: Arc::new(|x, t| 100.0 + x[0] + t),
            initial: Arc::new(|_| 0.0),
            analytic: None,
        }
    }

    fn history(n: usize, steps: usize) -> Vec<DVector<f64>> {
        (0..steps)
            .map(|k| DVector::from_fn(n, |i, _| (k * 7 + i) as f64 * 0.1 + 1.0))
            .collect()
    }

    #[test]
    fn first_step_rhs() {
        let nodes = chebyshev_nodes(6, 0.0, 1.0).unwrap();
        let sys = build_system(
            &nodes,
            &PHS3,
            &params(0.6, 1.0),
            &QuadratureConfig::default(),
        )
        .unwrap();
        let prob = ramp_problem();
        let h = history(6, 1);
        let u = build_rhs(&sys, 1, &h, &prob).unwrap();
        let delta = sys.delta_alpha();
        for i in 0..6 {
            let x = nodes.point(i);
            let expected = if nodes.is_boundary(i) {
                100.0 + x[0] + 0.04
            } else {
                x[0] + 0.4 + delta * h[0][i]
            };
            assert!((u[i] - expected).abs() <= 1e-13 * expected.abs());
        }
    }

    #[test]
    fn unit_alpha_rhs_is_backward_euler() {
        let nodes = chebyshev_nodes(6, 0.0, 1.0).unwrap();
        let sys = build_system(
            &nodes,
            &PHS3,
            &params(1.0, 1.0),
            &QuadratureConfig::default(),
        )
        .unwrap();
        let h = history(6, 3);
        let u = build_rhs(&sys, 3, &h, &ramp_problem()).unwrap();
        for i in (0..6).filter(|&i| !nodes.is_boundary(i)) {
            let expected = nodes.point(i)[0] + 10.0 * 0.12 + 25.0 * h[2][i];
            assert!((u[i] - expected).abs() <= 1e-12 * expected.abs());
        }
    }

    #[test]
    fn fractional_rhs_matches_direct_formula() {
        let nodes = chebyshev_nodes(5, 0.0, 1.0).unwrap();
        let p = params(0.35, 1.0);
        let sys = build_system(&nodes, &PHS3, &p, &QuadratureConfig::default()).unwrap();
        let m = 4;
        let h = history(5, m);
        let u = build_rhs(&sys, m, &h, &ramp_problem()).unwrap();
        let c = |k: usize| ((k + 1) as f64).powf(0.65) - (k as f64).powf(0.65);
        let i = 2;
        let mut bracket = c(m - 1) * h[0][i];
        for k in 1..m {
            let coefficient = c(k - 1) - c(k);
            assert!(coefficient > 0.0);
            bracket += coefficient * h[m - k][i];
        }
        let expected = nodes.point(i)[0] + 10.0 * p.time(m) + p.delta_alpha() * bracket;
        assert!((u[i] - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn zero_data_gives_boundary_only() {
        let nodes = chebyshev_nodes(5, 0.0, 1.0).unwrap();
        let sys = build_system(
            &nodes,
            &PHS3,
            &params(0.5, 1.0),
            &QuadratureConfig::default(),
        )
        .unwrap();
        let mut prob = ProblemSpec::zero(1);
        prob.boundary = std::sync::Arc::new(|_, _| 3.0);
        let h = vec![DVector::zeros(5); 2];
        let u = build_rhs(&sys, 2, &h, &prob).unwrap();
        for i in 0..5 {
            assert_eq!(u[i], if nodes.is_boundary(i) { 3.0 } else { 0.0 });
        }
    }

    #[test]
    fn rhs_rejects_bad_history() {
        let nodes = chebyshev_nodes(5, 0.0, 1.0).unwrap();
        let sys = build_system(
            &nodes,
            &PHS3,
            &params(0.5, 1.0),
            &QuadratureConfig::default(),
        )
        .unwrap();
        let prob = ProblemSpec::zero(1);
        assert!(matches!(
            build_rhs(&sys, 2, &history(5, 1), &prob),
            Err(AssemblyError::History { step: 2, got: 1 })
        ));
        assert!(matches!(
            build_rhs(&sys, 1, &history(4, 1), &prob),
            Err(AssemblyError::HistoryLength { .. })
        ));
        assert!(matches!(
            build_rhs(&sys, 1, &history(5, 1), &ProblemSpec::zero(2)),
            Err(AssemblyError::Dimension { .. })
        ));
    }
}
