//! Radial kernels and their restriction to rays from the origin.
//!
//! The spatial operator acts along `r = ‖x‖`. At a collocation point `x_i` the
//! basis function `Φ(·, x_j)` is restricted to the ray `t ↦ t·x_i/‖x_i‖`, giving a
//! univariate profile `g(t) = φ(‖t d̂ - x_j‖)` whose fractional derivatives are
//! taken at `t = ‖x_i‖`. Writing `t*` for the foot of the perpendicular from the
//! center onto the ray's line and `h` for its length, `‖t d̂ - x_j‖² = (t - t*)² + h²`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::fractional::{NearSingularity, Profile};
use crate::params::MarketCoefficients;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("polyharmonic degree must be an odd positive integer, got {0}")]
    Degree(u32),
    #[error("multiquadric shape parameter must be positive and finite, got {0}")]
    Shape(f64),
    #[error("multiquadric exponent must lie in [-1, 1] without 0, got {0}")]
    Exponent(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("ray through the origin is undefined")]
    Origin,
    #[error("cannot parse kernel `{0}`; expected `polyharmonic:<odd degree>` or `multiquadric:<shape>:<exponent>`")]
    Parse(String),
}

/// Radial profile `φ(s)` of a basis function `Φ(x, c) = φ(‖x - c‖₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RadialKernel {
    /// `s^degree` with odd degree.
    Polyharmonic { degree: u32 },
    /// `(1 + (ε s)²)^{μ/2}`.
    Multiquadric { shape: f64, exponent: f64 },
}

impl Default for RadialKernel {
    fn default() -> Self {
        Self::Polyharmonic { degree: 3 }
    }
}

impl RadialKernel {
    pub fn polyharmonic(degree: u32) -> Result<Self, KernelError> {
        if degree % 2 == 1 {
            Ok(Self::Polyharmonic { degree })
        } else {
            Err(KernelError::Degree(degree))
        }
    }

    pub fn multiquadric(shape: f64, exponent: f64) -> Result<Self, KernelError> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(KernelError::Shape(shape));
        }
        if !(-1.0..=1.0).contains(&exponent) || exponent == 0.0 {
            return Err(KernelError::Exponent(exponent));
        }
        Ok(Self::Multiquadric { shape, exponent })
    }

    /// `φ(s)`.
    pub fn radial(&self, s: f64) -> f64 {
        match *self {
            Self::Polyharmonic { degree } => s.powi(degree as i32),
            Self::Multiquadric { shape, exponent } => {
                let es = shape * s;
                (1.0 + es * es).powf(0.5 * exponent)
            }
        }
    }

    /// `Φ(x, center)`.
    pub fn eval(&self, x: &[f64], center: &[f64]) -> Result<f64, KernelError> {
        if x.len() != center.len() {
            return Err(KernelError::Dimension(x.len(), center.len()));
        }
        Ok(self.radial(distance(x, center)))
    }

    /// Restriction of `Φ(·, center)` to the ray from the origin through `through`.
    pub fn ray_profile(&self, center: &[f64], through: &[f64]) -> Result<RayProfile, KernelError> {
        if center.len() != through.len() {
            return Err(KernelError::Dimension(center.len(), through.len()));
        }
        let norm = norm(through);
        if norm == 0.0 || !norm.is_finite() {
            return Err(KernelError::Origin);
        }
        let direction: Vec<f64> = through.iter().map(|v| v / norm).collect();
        let foot: f64 = direction.iter().zip(center).map(|(d, c)| d * c).sum();
        let offset = center
            .iter()
            .zip(&direction)
            .map(|(c, d)| (c - foot * d).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(RayProfile {
            kernel: *self,
            direction,
            foot,
            offset,
        })
    }

    /// `g(u)`, `g'(u)`, `g''(u)` for `s² = u² + h²`, `u = t - t*`.
    fn profile_jet(&self, u: f64, h: f64) -> [f64; 3] {
        let s = u.hypot(h);
        match *self {
            Self::Polyharmonic { degree } => {
                let k = degree as i32;
                let kf = k as f64;
                // g' = k s^{k-2} u,  g'' = k s^{k-2} + k(k-2) s^{k-4} u²
                let g = s.powi(k);
                if s == 0.0 {
                    let g2 = if k == 1 { f64::INFINITY } else { 0.0 };
                    return [g, 0.0, g2];
                }
                let sk2 = s.powi(k - 2);
                let g1 = kf * sk2 * u;
                let g2 = kf * sk2 + kf * (kf - 2.0) * sk2 * (u / s) * (u / s);
                [g, g1, g2]
            }
            Self::Multiquadric { shape, exponent } => {
                let e2 = shape * shape;
                let w = 1.0 + e2 * s * s;
                let g = w.powf(0.5 * exponent);
                let base = exponent * e2 * w.powf(0.5 * exponent - 1.0);
                let g1 = base * u;
                let g2 = base
                    + exponent * (exponent - 2.0) * e2 * e2 * u * u * w.powf(0.5 * exponent - 2.0);
                [g, g1, g2]
            }
        }
    }

    /// Complex singularities `t* ± i·reach` of the ray profile.
    fn reach(&self, h: f64) -> f64 {
        match *self {
            Self::Polyharmonic { .. } => h,
            Self::Multiquadric { shape, .. } => (h * h + 1.0 / (shape * shape)).sqrt(),
        }
    }
}

impl fmt::Display for RadialKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polyharmonic { degree } => write!(f, "polyharmonic:{degree}"),
            Self::Multiquadric { shape, exponent } => write!(f, "multiquadric:{shape}:{exponent}"),
        }
    }
}

impl FromStr for RadialKernel {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = || KernelError::Parse(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["polyharmonic"] => Ok(Self::default()),
            ["polyharmonic", d] => Self::polyharmonic(d.parse().map_err(|_| parse_err())?),
            ["multiquadric", e, m] => Self::multiquadric(
                e.parse().map_err(|_| parse_err())?,
                m.parse().map_err(|_| parse_err())?,
            ),
            _ => Err(parse_err()),
        }
    }
}

/// `g(t) = φ(‖t d̂ - c‖)` with analytic first and second derivatives in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RayProfile {
    kernel: RadialKernel,
    direction: Vec<f64>,
    foot: f64,
    offset: f64,
}

impl RayProfile {
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// Ray parameter of the point closest to the center.
    pub fn foot(&self) -> f64 {
        self.foot
    }

    /// Distance from the center to the ray's line.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `[g(t), g'(t), g''(t)]`.
    pub fn jet(&self, t: f64) -> [f64; 3] {
        self.kernel.profile_jet(t - self.foot, self.offset)
    }
}

impl Profile for RayProfile {
    fn value(&self, t: f64) -> f64 {
        self.jet(t)[0]
    }

    fn derivative(&self, t: f64, order: u32) -> f64 {
        self.jet(t)[order as usize]
    }

    fn singularities(&self) -> Vec<NearSingularity> {
        vec![NearSingularity {
            location: self.foot,
            offset: self.kernel.reach(self.offset),
        }]
    }
}

/// Integer-order operator `½σ̃² g'' + (r̃ - ½σ̃²) g' - r̃ g` at `r = ‖x‖`, where
/// `g` is the ray profile of `Φ(·, center)` through `x`.
pub fn classical_operator(
    kernel: &RadialKernel,
    center: &[f64],
    x: &[f64],
    market: &MarketCoefficients,
) -> Result<f64, KernelError> {
    let profile = kernel.ray_profile(center, x)?;
    let [g, g1, g2] = profile.jet(norm(x));
    Ok(market.diffusion() * g2 + market.drift() * g1 - market.rate * g)
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}
