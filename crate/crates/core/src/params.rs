use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fractional::{gamma, FractionalError, FractionalOrder};

/// Volatility `σ̃` and rate `r̃` of the transformed Black-Scholes operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketCoefficients {
    pub sigma: f64,
    pub rate: f64,
}

impl MarketCoefficients {
    pub fn new(sigma: f64, rate: f64) -> Self {
        Self { sigma, rate }
    }

    /// `½σ̃²`, the diffusion coefficient.
    pub fn diffusion(&self) -> f64 {
        0.5 * self.sigma * self.sigma
    }

    /// `r̃ - ½σ̃²`, the drift coefficient.
    pub fn drift(&self) -> f64 {
        self.rate - self.diffusion()
    }
}

impl Default for MarketCoefficients {
    fn default() -> Self {
        Self {
            sigma: 0.25,
            rate: 0.05,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error(transparent)]
    Order(#[from] FractionalError),
    #[error("volatility must be non-negative and finite, got {0}")]
    Volatility(f64),
    #[error("rate must be finite, got {0}")]
    Rate(f64),
    #[error("time step must be positive and finite, got {0}")]
    TimeStep(f64),
    #[error("initial time must be finite, got {0}")]
    InitialTime(f64),
}

/// Full parameterization of the discrete operator `δ_α - L_{β,r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionalParams {
    pub alpha: FractionalOrder,
    pub beta: FractionalOrder,
    pub market: MarketCoefficients,
    pub dt: f64,
    pub t0: f64,
}

impl FractionalParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        market: MarketCoefficients,
        dt: f64,
        t0: f64,
    ) -> Result<Self, ParamsError> {
        let alpha = FractionalOrder::at_most_one(alpha)?;
        let beta = FractionalOrder::at_most_one(beta)?;
        // σ̃ = 0 is admitted so the null operator can be exercised.
        if !(market.sigma.is_finite() && market.sigma >= 0.0) {
            return Err(ParamsError::Volatility(market.sigma));
        }
        if !market.rate.is_finite() {
            return Err(ParamsError::Rate(market.rate));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ParamsError::TimeStep(dt));
        }
        if !t0.is_finite() {
            return Err(ParamsError::InitialTime(t0));
        }
        Ok(Self {
            alpha,
            beta,
            market,
            dt,
            t0,
        })
    }

    /// `δ_α = dt^{-α} / Γ(2-α)`.
    pub fn delta_alpha(&self) -> f64 {
        let a = self.alpha.value();
        1.0 / (self.dt.powf(a) * gamma(2.0 - a))
    }

    pub fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt
    }
}
