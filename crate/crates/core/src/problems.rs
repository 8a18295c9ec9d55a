//! The Black-Scholes change of variables and the two manufactured test problems.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

use crate::nodes::DomainBox;
use crate::params::MarketCoefficients;

/// `f(x, t)`.
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// `f(x)`.
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("asset price must be positive and finite, got {0}")]
    AssetPrice(f64),
    #[error("unknown problem `{0}`; expected example1, example2 or custom")]
    Unknown(String),
}

/// Source, boundary, initial and (optionally) exact data on a box domain.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: DomainBox,
    /// `[t0, t_end]`.
    pub time: (f64, f64),
    pub source: SpaceTimeFn,
    pub boundary: SpaceTimeFn,
    pub initial: SpaceFn,
    /// Exact solution, valid for `α = β = 1`.
    pub analytic: Option<SpaceTimeFn>,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn source(&self, x: &[f64], t: f64) -> f64 {
        (self.source)(x, t)
    }

    pub fn boundary(&self, x: &[f64], t: f64) -> f64 {
        (self.boundary)(x, t)
    }

    pub fn initial(&self, x: &[f64]) -> f64 {
        (self.initial)(x)
    }

    pub fn analytic(&self, x: &[f64], t: f64) -> Option<f64> {
        self.analytic.as_ref().map(|u| u(x, t))
    }

    /// `u_I = u_B = u_0 = 0` on the unit box of dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        Self {
            name: "zero".into(),
            domain: DomainBox::unit(dim),
            time: (0.0, 1.0),
            source: Arc::new(|_, _| 0.0),
            boundary: Arc::new(|_, _| 0.0),
            initial: Arc::new(|_| 0.0),
            analytic: Some(Arc::new(|_, _| 0.0)),
        }
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("time", &self.time)
            .field("analytic", &self.analytic.is_some())
            .finish_non_exhaustive()
    }
}

/// Selector for the built-in problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Example1,
    Example2,
    Custom,
}

impl ProblemId {
    /// `None` for `Custom`, which has no built-in data.
    pub fn build(self, market: MarketCoefficients) -> Option<ProblemSpec> {
        match self {
            Self::Example1 => Some(example1(market)),
            Self::Example2 => Some(example2(market)),
            Self::Custom => None,
        }
    }

    pub fn dim(self) -> Option<usize> {
        match self {
            Self::Example1 => Some(1),
            Self::Example2 => Some(2),
            Self::Custom => None,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Example1 => "example1",
            Self::Example2 => "example2",
            Self::Custom => "custom",
        })
    }
}

impl FromStr for ProblemId {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "example1" => Ok(Self::Example1),
            "example2" => Ok(Self::Example2),
            "custom" => Ok(Self::Custom),
            other => Err(ProblemError::Unknown(other.to_string())),
        }
    }
}

/// `(S, τ) ↦ (x, t) = (ln S, t_m - τ)`.
pub fn bs_log_transform(price: f64, tau: f64, maturity: f64) -> Result<(f64, f64), ProblemError> {
    if !(price.is_finite() && price > 0.0) {
        return Err(ProblemError::AssetPrice(price));
    }
    Ok((price.ln(), maturity - tau))
}

/// `(x, t) ↦ (S, τ) = (e^x, t_m - t)`.
pub fn bs_inverse_transform(x: f64, t: f64, maturity: f64) -> (f64, f64) {
    (x.exp(), maturity - t)
}

fn sin2(x: f64) -> f64 {
    let s = x.sin();
    s * s
}

/// One-dimensional problem on `[0,1]` with `u = (t+1)²(1-x)sin²x`.
pub fn example1(market: MarketCoefficients) -> ProblemSpec {
    let sigma2 = market.sigma * market.sigma;
    let rate = market.rate;
    let drift = market.drift();
    let source = move |p: &[f64], t: f64| {
        let x = p[0];
        let s = (t + 1.0) * (t + 1.0);
        sigma2 * ((2.0 * x).sin() - (1.0 - x) * (2.0 * x).cos()) * s
            + (2.0 * (t + 1.0) + rate * s) * (1.0 - x) * sin2(x)
            + drift * (sin2(x) - (1.0 - x) * (2.0 * x).sin()) * s
    };
    ProblemSpec {
        name: "example1".into(),
        domain: DomainBox::unit(1),
        time: (0.0, 1.0),
        source: Arc::new(source),
        boundary: Arc::new(|_, _| 0.0),
        initial: Arc::new(|p| (1.0 - p[0]) * sin2(p[0])),
        analytic: Some(Arc::new(|p, t| {
            (t + 1.0) * (t + 1.0) * (1.0 - p[0]) * sin2(p[0])
        })),
    }
}

fn example2_profile(x: f64, y: f64) -> f64 {
    let q = x * x + y * y;
    0.25 * (1.0 - q) * (2.0 - q) * sin2(2.0 * q)
}

/// Edge data on the perimeter of `[0,1]²`, as four closed-form restrictions.
fn example2_boundary(p: &[f64], t: f64) -> f64 {
    let (x, y) = (p[0], p[1]);
    let s = 0.25 * (t + 1.0) * (t + 1.0);
    if x == 0.0 {
        s * (1.0 - y * y) * (2.0 - y * y) * sin2(2.0 * y * y)
    } else if x == 1.0 {
        s * y * y * (y * y - 1.0) * sin2(2.0 * (1.0 + y * y))
    } else if y == 0.0 {
        s * (1.0 - x * x) * (2.0 - x * x) * sin2(2.0 * x * x)
    } else if y == 1.0 {
        s * x * x * (x * x - 1.0) * sin2(2.0 * (1.0 + x * x))
    } else {
        4.0 * s * example2_profile(x, y)
    }
}

/// Two-dimensional problem on `[0,1]²` with
/// `u = ¼(t+1)²(1-ρ²)(2-ρ²)sin²(2ρ²)`, `ρ = ‖(x, y)‖`.
pub fn example2(market: MarketCoefficients) -> ProblemSpec {
    let sigma2 = market.sigma * market.sigma;
    let rate = market.rate;
    let drift = market.drift();
    let source = move |p: &[f64], t: f64| {
        let (x, y) = (p[0], p[1]);
        let q = x * x + y * y;
        let rho = q.sqrt();
        let s = (t + 1.0) * (t + 1.0);
        sigma2 / 8.0
            * (3.0 - (3.0 + 58.0 * q - 96.0 * q * q + 32.0 * q * q * q) * (4.0 * q).cos())
            * s
            - sigma2 / 4.0 * (3.0 * q + (4.0 - 30.0 * q + 18.0 * q * q) * (4.0 * q).sin()) * s
            + (2.0 * (t + 1.0) + rate * s) * example2_profile(x, y)
            + 0.5 * drift * rho * (3.0 - 2.0 * q) * sin2(2.0 * q) * s
            - drift * rho * (2.0 - 3.0 * q + q * q) * (4.0 * q).sin() * s
    };
    ProblemSpec {
        name: "example2".into(),
        domain: DomainBox::unit(2),
        time: (0.0, 1.0),
        source: Arc::new(source),
        boundary: Arc::new(example2_boundary),
        initial: Arc::new(|p| example2_profile(p[0], p[1])),
        analytic: Some(Arc::new(|p, t| {
            (t + 1.0) * (t + 1.0) * example2_profile(p[0], p[1])
        })),
    }
}

/// Central difference of `f` at 0 with two Richardson levels, `O(h⁶)`.
fn richardson<F: Fn(f64) -> f64>(f: F, h: f64, second: bool) -> f64 {
    let d = |h: f64| {
        if second {
            (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
        } else {
            (f(h) - f(-h)) / (2.0 * h)
        }
    };
    let (d1, d2, d4) = (d(h), d(h / 2.0), d(h / 4.0));
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// `u_I - (∂_t u - L_{1,r} u)` for the exact solution at `(x, t)`, with the
/// derivatives taken by finite differences along the ray through `x`.
/// Near zero when the source is consistent with the exact solution.
/// `None` without an exact solution or at the origin.
pub fn manufactured_defect(
    problem: &ProblemSpec,
    market: MarketCoefficients,
    x: &[f64],
    t: f64,
) -> Option<f64> {
    let u = problem.analytic.as_ref()?;
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return None;
    }
    let along = |s: f64| -> f64 {
        let p: Vec<f64> = x.iter().map(|v| v / r * (r + s)).collect();
        u(&p, t)
    };
    let h = 4e-3;
    let ur = richardson(along, h, false);
    let urr = richardson(along, h, true);
    let ut = richardson(|s| u(x, t + s), h, false);
    let l = market.diffusion() * urr + market.drift() * ur - market.rate * u(x, t);
    Some(problem.source(x, t) - (ut - l))
}
