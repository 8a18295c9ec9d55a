use super::{
    gamma, recip_gamma, FractionalError, FractionalOrder, NearSingularity, QuadratureConfig,
    WeaklySingularRule,
};

/// A univariate function on `[0, R]` with analytic derivatives up to order two.
pub trait Profile {
    fn value(&self, t: f64) -> f64;

    /// Derivative of order 0, 1 or 2.
    fn derivative(&self, t: f64, order: u32) -> f64;

    /// Points where the profile is not analytic, for quadrature panelling.
    fn singularities(&self) -> Vec<NearSingularity> {
        Vec::new()
    }
}

/// `t^μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial(pub f64);

impl Profile for Monomial {
    fn value(&self, t: f64) -> f64 {
        t.powf(self.0)
    }

    fn derivative(&self, t: f64, order: u32) -> f64 {
        let mu = self.0;
        let coefficient: f64 = (0..order).map(|j| mu - j as f64).product();
        if coefficient == 0.0 {
            0.0
        } else {
            coefficient * t.powf(mu - order as f64)
        }
    }

    fn singularities(&self) -> Vec<NearSingularity> {
        if self.0 == self.0.floor() && self.0 >= 0.0 {
            Vec::new()
        } else {
            vec![NearSingularity {
                location: 0.0,
                offset: 0.0,
            }]
        }
    }
}

/// `coefficient · x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Closed-form `₀D_x^α x^μ = Γ(μ+1)/Γ(μ-α+1) · x^{μ-α}`.
pub fn rl_power_derivative(mu: f64, alpha: f64) -> Result<PowerTerm, FractionalError> {
    if !(mu.is_finite() && mu > -1.0) {
        return Err(FractionalError::InvalidExponent(mu));
    }
    let argument = mu - alpha + 1.0;
    if argument <= 0.0 && argument == argument.floor() {
        return Err(FractionalError::GammaPole { argument });
    }
    Ok(PowerTerm {
        coefficient: gamma(mu + 1.0) / gamma(argument),
        exponent: mu - alpha,
    })
}

fn check_abscissa(r: f64) -> Result<(), FractionalError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(FractionalError::InvalidAbscissa(r))
    }
}

/// Left Riemann-Liouville integral of a fixed order with its quadrature rule
/// prepared once: `(1/Γ(α)) ∫_0^r (r-t)^{α-1} f(t) dt`.
#[derive(Debug, Clone)]
pub struct RlIntegral {
    order: f64,
    rule: WeaklySingularRule,
}

impl RlIntegral {
    pub fn new(alpha: f64, config: &QuadratureConfig) -> Result<Self, FractionalError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(FractionalError::InvalidOrder(alpha));
        }
        Ok(Self {
            order: alpha,
            rule: WeaklySingularRule::new(alpha - 1.0, config)?,
        })
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn eval<F>(
        &self,
        f: F,
        r: f64,
        singularities: &[NearSingularity],
    ) -> Result<f64, FractionalError>
    where
        F: Fn(f64) -> f64,
    {
        check_abscissa(r)?;
        let [v] = self.rule.integrate(r, singularities, |t| [f(t)])?;
        Ok(v / gamma(self.order))
    }
}

/// One-off [`RlIntegral`].
pub fn rl_fractional_integral<F>(
    f: F,
    alpha: f64,
    r: f64,
    singularities: &[NearSingularity],
    config: &QuadratureConfig,
) -> Result<f64, FractionalError>
where
    F: Fn(f64) -> f64,
{
    RlIntegral::new(alpha, config)?.eval(f, r, singularities)
}

/// Riemann-Liouville derivative of a fixed order with its quadrature rule prepared once.
///
/// Non-integer orders are evaluated as the Caputo integral of `f^{(n)}` plus the
/// origin terms `Σ_{k<n} f^{(k)}(0) r^{k-β} / Γ(k-β+1)`. Integer orders return the
/// classical derivative.
#[derive(Debug, Clone)]
pub struct RlDerivative {
    order: FractionalOrder,
    rule: Option<WeaklySingularRule>,
}

impl RlDerivative {
    pub fn new(order: FractionalOrder, config: &QuadratureConfig) -> Result<Self, FractionalError> {
        let rule = if order.is_integer() {
            None
        } else {
            Some(WeaklySingularRule::new(order.gap() - 1.0, config)?)
        };
        Ok(Self { order, rule })
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    /// The Caputo part only: `(1/Γ(n-β)) ∫_0^r (r-t)^{n-β-1} f^{(n)}(t) dt`.
    pub fn caputo<P: Profile + ?Sized>(&self, profile: &P, r: f64) -> Result<f64, FractionalError> {
        check_abscissa(r)?;
        let n = self.order.ceil();
        let Some(rule) = &self.rule else {
            return Ok(profile.derivative(r, n));
        };
        let [v] = rule.integrate(r, &profile.singularities(), |t| [profile.derivative(t, n)])?;
        Ok(v * recip_gamma(self.order.gap()))
    }

    pub fn eval<P: Profile + ?Sized>(&self, profile: &P, r: f64) -> Result<f64, FractionalError> {
        let caputo = self.caputo(profile, r)?;
        if self.rule.is_none() {
            return Ok(caputo);
        }
        let beta = self.order.value();
        let correction: f64 = (0..self.order.ceil())
            .map(|k| {
                let k = k as f64;
                profile.derivative(0.0, k as u32) * r.powf(k - beta) * recip_gamma(k - beta + 1.0)
            })
            .sum();
        Ok(caputo + correction)
    }
}

/// `₀D_r^β f(r)` for `0 < β <= 2`.
pub fn rl_fractional_derivative<P: Profile + ?Sized>(
    profile: &P,
    beta: FractionalOrder,
    r: f64,
    config: &QuadratureConfig,
) -> Result<f64, FractionalError> {
    RlDerivative::new(beta, config)?.eval(profile, r)
}

/// Caputo derivative `ᶜ₀D_r^β f(r)` for `0 < β <= 2`.
pub fn caputo_derivative<P: Profile + ?Sized>(
    profile: &P,
    beta: FractionalOrder,
    r: f64,
    config: &QuadratureConfig,
) -> Result<f64, FractionalError> {
    RlDerivative::new(beta, config)?.caputo(profile, r)
}
