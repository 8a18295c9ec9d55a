use super::{gamma, FractionalError, FractionalOrder};

/// L1 weight `c_{α,k} = (k+1)^{n-α} - k^{n-α}` with `0^0 := 0`, so `c_{α,0} = 1`
/// for every order and the integer case degenerates to `1, 0, 0, ...`.
pub fn caputo_weight(alpha: FractionalOrder, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let p = alpha.gap();
    if p == 0.0 {
        return 0.0;
    }
    // k^p * ((1 + 1/k)^p - 1), free of cancellation for large k.
    let kf = k as f64;
    kf.powf(p) * (p * (1.0 / kf).ln_1p()).exp_m1()
}

/// The first `m` L1 weights of one order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    alpha: FractionalOrder,
    weights: Vec<f64>,
}

impl WeightSequence {
    pub fn new(alpha: FractionalOrder, m: usize) -> Self {
        Self {
            alpha,
            weights: (0..m).map(|k| caputo_weight(alpha, k)).collect(),
        }
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Memory coefficient `c_{k-1} - c_k` multiplying `u^{m-k}`, for `1 <= k < len`.
    pub fn memory_coefficient(&self, k: usize) -> f64 {
        self.weights[k - 1] - self.weights[k]
    }

    /// Telescoped sum; equals `m^{n-α}`.
    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// L1 approximation of the Caputo derivative of order `0 < α <= 1` at `t_m`,
/// from equispaced samples `f(t_0), ..., f(t_m)`.
pub fn discrete_caputo(
    samples: &[f64],
    alpha: FractionalOrder,
    dt: f64,
) -> Result<f64, FractionalError> {
    if alpha.value() > 1.0 {
        return Err(FractionalError::OrderTooLarge {
            order: alpha.value(),
            max: 1.0,
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FractionalError::InvalidStep(dt));
    }
    if samples.len() < 2 {
        return Err(FractionalError::TooFewSamples(samples.len()));
    }
    if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
        return Err(FractionalError::NonFiniteSample { index });
    }

    let m = samples.len() - 1;
    let weights = WeightSequence::new(alpha, m);
    let memory: f64 = (1..m)
        .map(|k| weights.memory_coefficient(k) * samples[m - k])
        .sum();
    let bracket = samples[m] - weights.weights()[m - 1] * samples[0] - memory;
    Ok(bracket / (dt.powf(alpha.value()) * gamma(2.0 - alpha.value())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(v: f64) -> FractionalOrder {
        FractionalOrder::new(v).unwrap()
    }

    #[test]
    fn weight_examples() {
        assert_eq!(caputo_weight(order(0.5), 0), 1.0);
        assert!((caputo_weight(order(0.5), 1) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(caputo_weight(order(1.0), 1), 0.0);
        assert_eq!(caputo_weight(order(1.0), 0), 1.0);
        // mpmath, 40 digits
        let expected = 0.011901649150305266195;
        let rel = (caputo_weight(order(0.7), 100) - expected).abs() / expected;
        assert!(rel < 1e-14, "rel {rel:e}");
    }

    #[test]
    fn second_order_range_uses_gap_to_two() {
        // n = 2, n - α = 0.5
        let c = caputo_weight(order(1.5), 3);
        assert!((c - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        assert_eq!(caputo_weight(order(2.0), 4), 0.0);
    }

    #[test]
    fn telescoping_sum_brute_force() {
        for alpha in [0.1, 0.35, 0.5, 0.9] {
            let a = order(alpha);
            for m in [1usize, 2, 7, 100, 1000] {
                let naive: f64 = (0..m)
                    .map(|k| ((k + 1) as f64).powf(1.0 - alpha) - (k as f64).powf(1.0 - alpha))
                    .sum();
                let seq = WeightSequence::new(a, m);
                let target = (m as f64).powf(1.0 - alpha);
                assert!((seq.sum() - target).abs() <= 1e-12 * target);
                assert!((naive - target).abs() <= 1e-12 * target);
            }
        }
    }

    #[test]
    fn decreasing_to_zero() {
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.9, 1.2, 1.8] {
            let a = order(alpha);
            let p = a.gap();
            let mut prev = caputo_weight(a, 0);
            assert_eq!(prev, 1.0);
            for k in 1..=10_000 {
                let c = caputo_weight(a, k);
                assert!(c > 0.0 && c < prev, "alpha {alpha} k {k}");
                // mean value theorem: c_k <= p k^{p-1}
                assert!(c <= p * (k as f64).powf(p - 1.0) * (1.0 + 1e-12));
                prev = c;
            }
            if p <= 0.5 {
                assert!(caputo_weight(a, 10_000) < 1e-2);
            }
        }
    }

    #[test]
    fn constant_has_zero_derivative() {
        for alpha in [0.2, 0.5, 1.0] {
            for m in [1, 2, 9] {
                let samples = vec![3.5; m + 1];
                let d = discrete_caputo(&samples, order(alpha), 0.1).unwrap();
                assert!(d.abs() < 1e-12, "{d}");
            }
        }
    }

    #[test]
    fn exact_on_linear_functions() {
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for (m, dt) in [(1usize, 0.5), (4, 0.1), (25, 0.04), (300, 1e-3)] {
                let samples: Vec<f64> = (0..=m).map(|k| k as f64 * dt).collect();
                let tm = m as f64 * dt;
                let exact = tm.powf(1.0 - alpha) / gamma(2.0 - alpha);
                let d = discrete_caputo(&samples, order(alpha), dt).unwrap();
                assert!((d - exact).abs() <= 1e-10 * exact, "alpha {alpha} m {m}");
            }
        }
    }

    #[test]
    fn integer_order_is_backward_difference() {
        let samples = [0.3, -1.2, 2.5, 4.25, 4.0];
        let dt = 0.04;
        for m in 1..samples.len() {
            let d = discrete_caputo(&samples[..=m], order(1.0), dt).unwrap();
            assert_eq!(d, (samples[m] - samples[m - 1]) / dt);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            discrete_caputo(&[1.0], order(0.5), 0.1),
            Err(FractionalError::TooFewSamples(1))
        );
        assert_eq!(
            discrete_caputo(&[1.0, f64::NAN], order(0.5), 0.1),
            Err(FractionalError::NonFiniteSample { index: 1 })
        );
        assert!(discrete_caputo(&[1.0, 2.0], order(0.5), 0.0).is_err());
        assert!(discrete_caputo(&[1.0, 2.0], order(1.5), 0.1).is_err());
    }

    #[test]
    fn quadratic_converges_at_two_minus_alpha() {
        let alpha = 0.5;
        let exact = |t: f64| 2.0 / gamma(2.5) * t.powf(1.5);
        let errs: Vec<f64> = [20usize, 40, 80]
            .iter()
            .map(|&m| {
                let dt = 1.0 / m as f64;
                let s: Vec<f64> = (0..=m).map(|k| (k as f64 * dt).powi(2)).collect();
                (discrete_caputo(&s, order(alpha), dt).unwrap() - exact(1.0)).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 1.5).abs() < 0.15, "rate {rate}");
        }
    }
}
