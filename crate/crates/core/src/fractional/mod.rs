//! Riemann-Liouville and Caputo operators.
//!
//! The time direction uses the Caputo derivative discretized with the L1 scheme
//! ([`discrete_caputo`], [`caputo_weight`]). The spatial direction uses the
//! Riemann-Liouville derivative with lower limit 0, evaluated as a Caputo
//! integral of the profile's `n`-th derivative plus the boundary correction
//! terms at the origin ([`rl_fractional_derivative`]).

mod gamma;
mod operators;
mod quadrature;
mod weights;

pub use gamma::{gamma, recip_gamma};
pub use operators::{
    caputo_derivative, rl_fractional_derivative, rl_fractional_integral, rl_power_derivative,
    Monomial, PowerTerm, Profile, RlDerivative, RlIntegral,
};
pub use quadrature::{
    GaussJacobi, NearSingularity, QuadratureConfig, QuadratureError, WeaklySingularRule,
};
pub use weights::{caputo_weight, discrete_caputo, WeightSequence};

use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FractionalError {
    #[error("fractional order {0} outside (0, 2]")]
    InvalidOrder(f64),
    #[error("order {order} exceeds the maximum {max} supported here")]
    OrderTooLarge { order: f64, max: f64 },
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("gamma pole at argument {argument}")]
    GammaPole { argument: f64 },
    #[error("power exponent {0} must exceed -1")]
    InvalidExponent(f64),
    #[error("evaluation point must be positive and finite, got {0}")]
    InvalidAbscissa(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// A fractional order in `(0, 2]` together with `n = ceil(order)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(value: f64) -> Result<Self, FractionalError> {
        if value.is_finite() && value > 0.0 && value <= 2.0 {
            Ok(Self(value))
        } else {
            Err(FractionalError::InvalidOrder(value))
        }
    }

    /// Same as [`new`](Self::new) but additionally rejects orders above 1.
    pub fn at_most_one(value: f64) -> Result<Self, FractionalError> {
        let order = Self::new(value)?;
        if value > 1.0 {
            return Err(FractionalError::OrderTooLarge {
                order: value,
                max: 1.0,
            });
        }
        Ok(order)
    }

    pub const ONE: Self = Self(1.0);

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `n = ceil(order)`, either 1 or 2.
    #[inline]
    pub fn ceil(self) -> u32 {
        if self.0 <= 1.0 {
            1
        } else {
            2
        }
    }

    #[inline]
    pub fn is_integer(self) -> bool {
        self.0 == 1.0 || self.0 == 2.0
    }

    /// `n - order`, the exponent appearing in the L1 weights.
    #[inline]
    pub fn gap(self) -> f64 {
        self.ceil() as f64 - self.0
    }

    /// `order + 1`, used for the second-order term of the spatial operator.
    pub fn shifted(self) -> Result<Self, FractionalError> {
        Self::new(self.0 + 1.0)
    }
}

impl fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = FractionalError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}
