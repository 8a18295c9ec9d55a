//! Quadrature for Abel-type integrals `∫_0^r (r-t)^e f(t) dt` with `e > -1`.
//!
//! The panel touching `r` absorbs the endpoint singularity with a Gauss-Jacobi
//! rule. The remaining panels use Gauss-Legendre. Panels are bisected until every
//! declared near-singularity of `f` (a complex-conjugate pair `t* ± i h`) lies at
//! least one panel width away, which keeps the rules in their geometric
//! convergence regime for profiles such as `((t - t*)^2 + h^2)^{3/2}`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid rule: {nodes} nodes with exponents ({a}, {b})")]
    InvalidRule { nodes: usize, a: f64, b: f64 },
    #[error("integration interval [0, {0}] is empty or not finite")]
    InvalidInterval(f64),
    #[error(
        "panel refinement exhausted near t = {at}; value {value:e}, error estimate {estimate:e}"
    )]
    NotConverged { at: f64, value: f64, estimate: f64 },
    #[error("integrand is not finite on [{a}, {b}]")]
    NonFinite { a: f64, b: f64 },
}

/// Gauss-Jacobi rule for `∫_{-1}^{1} (1-x)^a (1+x)^b f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    a: f64,
    b: f64,
}

impl GaussJacobi {
    /// Golub-Welsch eigenvalues, polished with Newton steps on the three-term
    /// recurrence; weights from the Christoffel function at the polished nodes.
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self, QuadratureError> {
        if n < 2 || !(a.is_finite() && a > -1.0) || !(b.is_finite() && b > -1.0) {
            return Err(QuadratureError::InvalidRule { nodes: n, a, b });
        }
        let (diag, off) = recurrence(n, a, b);
        let mu0 = 2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0);

        let mut jacobi = DMatrix::zeros(n, n);
        for k in 0..n {
            jacobi[(k, k)] = diag[k];
            if k + 1 < n {
                jacobi[(k, k + 1)] = off[k + 1];
                jacobi[(k + 1, k)] = off[k + 1];
            }
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        nodes.sort_by(f64::total_cmp);

        let mut weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (q, dq) = leading_polynomial(*x, &diag, &off, mu0);
                let step = q / dq;
                if step.is_finite() && step.abs() < 1e-6 {
                    *x -= step;
                }
            }
            weights.push(1.0 / christoffel_sum(*x, &diag, &off, mu0));
        }
        Ok(Self {
            nodes,
            weights,
            a,
            b,
        })
    }

    pub fn legendre(n: usize) -> Result<Self, QuadratureError> {
        Self::new(n, 0.0, 0.0)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Monic Jacobi recurrence: diagonal `α_k` and off-diagonal `sqrt(β_k)` (index 0 unused).
fn recurrence(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut diag = Vec::with_capacity(n);
    let mut off = vec![0.0; n + 1];
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        diag.push(if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        });
    }
    for (k, o) in off.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let num = 4.0 * kf * (kf + a) * (kf + b) * (kf + a + b);
        let den = s * s * (s + 1.0) * (s - 1.0);
        *o = (num / den).sqrt();
    }
    (diag, off)
}

/// Unnormalized degree-n orthogonal polynomial and its derivative at `x`.
fn leading_polynomial(x: f64, diag: &[f64], off: &[f64], mu0: f64) -> (f64, f64) {
    let n = diag.len();
    let (mut p_prev, mut p) = (0.0, 1.0 / mu0.sqrt());
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..n {
        let next = (x - diag[k]) * p - off[k] * p_prev;
        let dnext = p + (x - diag[k]) * d - off[k] * d_prev;
        if k + 1 == n {
            return (next, dnext);
        }
        let scale = off[k + 1];
        p_prev = p;
        d_prev = d;
        p = next / scale;
        d = dnext / scale;
    }
    unreachable!("rule has at least two nodes")
}

fn christoffel_sum(x: f64, diag: &[f64], off: &[f64], mu0: f64) -> f64 {
    let n = diag.len();
    let (mut p_prev, mut p) = (0.0, 1.0 / mu0.sqrt());
    let mut sum = p * p;
    for k in 0..n - 1 {
        let next = ((x - diag[k]) * p - off[k] * p_prev) / off[k + 1];
        p_prev = p;
        p = next;
        sum += p * p;
    }
    sum
}

/// Location of a complex-conjugate singularity pair `location ± i·offset` of an
/// integrand, or a kink when `offset` is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearSingularity {
    pub location: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Gauss-Jacobi nodes on the panel adjacent to the singular endpoint.
    pub jacobi_nodes: usize,
    /// Gauss-Legendre nodes on every other panel.
    pub legendre_nodes: usize,
    /// Maximum bisection depth per panel.
    pub max_depth: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            jacobi_nodes: 64,
            legendre_nodes: 20,
            max_depth: 60,
        }
    }
}

/// `∫_0^r (r-t)^exponent f(t) dt` for a fixed exponent, reusable across calls.
#[derive(Debug, Clone)]
pub struct WeaklySingularRule {
    exponent: f64,
    endpoint: GaussJacobi,
    interior: GaussJacobi,
    max_depth: usize,
}

impl WeaklySingularRule {
    pub fn new(exponent: f64, config: &QuadratureConfig) -> Result<Self, QuadratureError> {
        Ok(Self {
            exponent,
            endpoint: GaussJacobi::new(config.jacobi_nodes, exponent, 0.0)?,
            interior: GaussJacobi::legendre(config.legendre_nodes)?,
            max_depth: config.max_depth,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Integrates a vector-valued integrand against `(r-t)^exponent` on `[0, r]`.
    pub fn integrate<const K: usize, F>(
        &self,
        r: f64,
        singularities: &[NearSingularity],
        f: F,
    ) -> Result<[f64; K], QuadratureError>
    where
        F: Fn(f64) -> [f64; K],
    {
        if !(r.is_finite() && r > 0.0) {
            return Err(QuadratureError::InvalidInterval(r));
        }
        let tiny = 1e-14 * r.max(1.0);
        let mut cuts: Vec<f64> = singularities
            .iter()
            .map(|s| s.location)
            .filter(|&t| t > tiny && t < r - tiny)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() <= tiny);
        let active: Vec<NearSingularity> = singularities
            .iter()
            .copied()
            .filter(|s| s.offset > tiny || (s.location > tiny && s.location < r - tiny))
            .collect();

        let panels = Panels {
            rule: self,
            r,
            tiny,
            singularities: &active,
            f: &f,
        };
        let mut acc = [0.0; K];
        let mut left = 0.0;
        for cut in cuts {
            panels.interior(left, cut, 0, &mut acc)?;
            left = cut;
        }
        panels.endpoint(left, 0, &mut acc)?;
        Ok(acc)
    }
}

struct Panels<'a, const K: usize, F> {
    rule: &'a WeaklySingularRule,
    r: f64,
    tiny: f64,
    singularities: &'a [NearSingularity],
    f: &'a F,
}

impl<const K: usize, F> Panels<'_, K, F>
where
    F: Fn(f64) -> [f64; K],
{
    /// Distance from the nearest declared singularity to `[a, b]`. Exact kinks
    /// sitting on a panel edge do not count: the integrand is smooth on each side.
    fn clearance(&self, a: f64, b: f64) -> f64 {
        self.singularities
            .iter()
            .map(|s| {
                let dx = if s.location < a {
                    a - s.location
                } else if s.location > b {
                    s.location - b
                } else {
                    0.0
                };
                if s.offset <= self.tiny && dx <= self.tiny {
                    f64::INFINITY
                } else {
                    dx.hypot(s.offset)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn weight_is_smooth(&self) -> bool {
        let e = self.rule.exponent;
        e >= 0.0 && e == e.floor()
    }

    fn legendre(&self, a: f64, b: f64) -> [f64; K] {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut out = [0.0; K];
        for (x, w) in self.rule.interior.pairs() {
            let t = mid + half * x;
            let scale = w * half * (self.r - t).powf(self.rule.exponent);
            let v = (self.f)(t);
            for k in 0..K {
                out[k] += scale * v[k];
            }
        }
        out
    }

    fn jacobi(&self, a: f64) -> [f64; K] {
        let half = 0.5 * (self.r - a);
        let mid = 0.5 * (self.r + a);
        let scale = half.powf(self.rule.exponent + 1.0);
        let mut out = [0.0; K];
        for (x, w) in self.rule.endpoint.pairs() {
            let v = (self.f)(mid + half * x);
            for k in 0..K {
                out[k] += scale * w * v[k];
            }
        }
        out
    }

    fn accept(
        &self,
        a: f64,
        b: f64,
        value: [f64; K],
        acc: &mut [f64; K],
    ) -> Result<(), QuadratureError> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(QuadratureError::NonFinite { a, b });
        }
        for k in 0..K {
            acc[k] += value[k];
        }
        Ok(())
    }

    fn interior(
        &self,
        a: f64,
        b: f64,
        depth: usize,
        acc: &mut [f64; K],
    ) -> Result<(), QuadratureError> {
        let width = b - a;
        if width <= 0.0 {
            return Ok(());
        }
        let mut clearance = self.clearance(a, b);
        if !self.weight_is_smooth() {
            clearance = clearance.min(self.r - b);
        }
        if clearance >= width {
            return self.accept(a, b, self.legendre(a, b), acc);
        }
        let mid = 0.5 * (a + b);
        if depth >= self.rule.max_depth {
            let whole = self.legendre(a, b);
            let split = sum(self.legendre(a, mid), self.legendre(mid, b));
            return Err(not_converged(mid, whole, split));
        }
        self.interior(a, mid, depth + 1, acc)?;
        self.interior(mid, b, depth + 1, acc)
    }

    fn endpoint(&self, a: f64, depth: usize, acc: &mut [f64; K]) -> Result<(), QuadratureError> {
        let width = self.r - a;
        if self.clearance(a, self.r) >= width {
            return self.accept(a, self.r, self.jacobi(a), acc);
        }
        let mid = 0.5 * (a + self.r);
        if depth >= self.rule.max_depth {
            let whole = self.jacobi(a);
            let split = sum(self.legendre(a, mid), self.jacobi(mid));
            return Err(not_converged(mid, whole, split));
        }
        self.interior(a, mid, depth + 1, acc)?;
        self.endpoint(mid, depth + 1, acc)
    }
}

fn sum<const K: usize>(x: [f64; K], y: [f64; K]) -> [f64; K] {
    let mut out = x;
    for k in 0..K {
        out[k] += y[k];
    }
    out
}

fn not_converged<const K: usize>(at: f64, whole: [f64; K], split: [f64; K]) -> QuadratureError {
    let (k, estimate) =
        (0..K)
            .map(|k| (k, (whole[k] - split[k]).abs()))
            .fold(
                (0, 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    QuadratureError::NotConverged {
        at,
        value: split[k],
        estimate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫_{-1}^{1} (1-x)^a x^k dx, mpmath at 50 digits.
    const JACOBI_MOMENTS: &[(f64, i32, f64)] = &[
        (-0.75, 0, 4.7568284600108842669),
        (-0.75, 3, 2.463793202364611851),
        (-0.75, 7, 2.1037319412442373503),
        (-0.75, 10, 2.0638595876512465373),
        (-0.75, 12, 1.9703405731244444598),
        (-0.75, 16, 1.8311997702280742557),
        (-0.75, 20, 1.7300841431019249746),
        (-0.5, 0, 2.8284271247461900976),
        (-0.5, 3, 0.72730983207759173938),
        (-0.5, 7, 0.54546667627195367694),
        (-0.5, 10, 0.60622712061247182407),
        (-0.5, 12, 0.55175563923241553567),
        (-0.5, 16, 0.47525187940250104584),
        (-0.5, 20, 0.4231576174465240682),
        (-0.25, 0, 2.2423904406765721147),
        (-0.25, 3, 0.22715123944515925318),
        (-0.25, 7, 0.15394151917307918722),
        (-0.25, 10, 0.28188603647580271592),
        (-0.25, 12, 0.24556367864616838535),
        (-0.25, 16, 0.1969936575030173104),
        (-0.25, 20, 0.1657497028843251606),
        (0.0, 0, 2.0),
        (0.0, 3, 0.0),
        (0.0, 7, 0.0),
        (0.0, 10, 0.18181818181818181818),
        (0.0, 12, 0.15384615384615384615),
        (0.0, 16, 0.11764705882352941176),
        (0.0, 20, 0.095238095238095238095),
        (0.3, 0, 1.89406832822294813),
        (0.3, 3, -0.15651874501998624587),
        (0.3, 7, -0.092514123354564803663),
        (0.3, 10, 0.14953951759634867334),
        (0.3, 12, 0.12517820753545433493),
        (0.3, 16, 0.094116805397874704253),
        (0.3, 20, 0.0752083149392315404),
        (1.0, 0, 2.0),
        (1.0, 3, -0.4),
        (1.0, 7, -0.22222222222222222222),
        (1.0, 10, 0.18181818181818181818),
        (1.0, 12, 0.15384615384615384615),
        (1.0, 16, 0.11764705882352941176),
        (1.0, 20, 0.095238095238095238095),
    ];

    fn jacobi_moment(a: f64, k: i32) -> f64 {
        JACOBI_MOMENTS
            .iter()
            .find(|m| m.0 == a && m.1 == k)
            .map(|m| m.2)
            .expect("tabulated moment")
    }

    #[test]
    fn exact_on_polynomials() {
        for &(a, k, exact) in JACOBI_MOMENTS {
            let rule = GaussJacobi::new(12, a, 0.0).unwrap();
            let q: f64 = rule.pairs().map(|(x, w)| w * x.powi(k)).sum();
            assert!(
                (q - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                "a={a} k={k} q={q} exact={exact}"
            );
        }
    }

    #[test]
    fn sixty_four_nodes_are_sorted_and_weights_positive() {
        let rule = GaussJacobi::new(64, -0.5, 0.0).unwrap();
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        let total: f64 = rule.weights().iter().sum();
        assert!((total - jacobi_moment(-0.5, 0)).abs() < 1e-13);
    }

    #[test]
    fn legendre_odd_rule_has_zero_node() {
        let rule = GaussJacobi::legendre(5).unwrap();
        assert!(rule.nodes()[2].abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(GaussJacobi::new(1, 0.0, 0.0).is_err());
        assert!(GaussJacobi::new(8, -1.0, 0.0).is_err());
        assert!(GaussJacobi::new(8, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn abel_integral_of_kinked_profile() {
        // ∫_0^0.8 (0.8 - t)^{-1/2} |t - 0.5| dt in closed form.
        let rule = WeaklySingularRule::new(-0.5, &QuadratureConfig::default()).unwrap();
        let sing = [NearSingularity {
            location: 0.5,
            offset: 0.0,
        }];
        let [v] = rule.integrate(0.8, &sing, |t| [(t - 0.5).abs()]).unwrap();
        // split at 0.5: with u = 0.8 - t
        let prim = |u: f64, c: f64| c * 2.0 * u.sqrt() - (2.0 / 3.0) * u.powf(1.5);
        // t > 0.5: |t-0.5| = 0.3 - u, u in [0, 0.3]
        let right = prim(0.3, 0.3) - prim(0.0, 0.3);
        // t < 0.5: |t-0.5| = u - 0.3, u in [0.3, 0.8]
        let left = -(prim(0.8, 0.3) - prim(0.3, 0.3));
        assert!(
            (v - (left + right)).abs() < 1e-14,
            "{v} vs {}",
            left + right
        );
    }

    #[test]
    fn near_singular_profile_is_refined() {
        // ∫_0^1 (1-t)^{-0.3} sqrt((t-0.4)^2 + h^2) dt, reference from a dense composite rule.
        let h = 1e-4;
        let rule = WeaklySingularRule::new(-0.3, &QuadratureConfig::default()).unwrap();
        let sing = [NearSingularity {
            location: 0.4,
            offset: h,
        }];
        let f = |t: f64| [((t - 0.4).powi(2) + h * h).sqrt()];
        let [v] = rule.integrate(1.0, &sing, f).unwrap();
        // Unrefined single Jacobi panel is visibly worse.
        let [coarse] = rule.integrate(1.0, &[], f).unwrap();
        let reference = reference_abel(-0.3, 1.0, 0.4, h);
        assert!((v - reference).abs() < 1e-11, "{v} vs {reference}");
        assert!((coarse - reference).abs() > 1e-7);
    }

    /// Independent oracle: substitute w = (r - t)^{1+e} to remove the endpoint
    /// singularity, then composite Simpson with heavy subdivision on each side of t*.
    fn reference_abel(e: f64, r: f64, c: f64, h: f64) -> f64 {
        let g = |t: f64| ((t - c).powi(2) + h * h).sqrt();
        let p = 1.0 + e;
        let integrand = |w: f64| g(r - w.powf(1.0 / p)) / p;
        let wc = (r - c).powf(p);
        simpson(&integrand, 0.0, wc, 400_000) + simpson(&integrand, wc, r.powf(p), 400_000)
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn smooth_weight_skips_endpoint_refinement() {
        let rule = WeaklySingularRule::new(0.0, &QuadratureConfig::default()).unwrap();
        let [v] = rule.integrate(2.0, &[], |t| [t * t]).unwrap();
        assert!((v - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_interval() {
        let rule = WeaklySingularRule::new(-0.5, &QuadratureConfig::default()).unwrap();
        assert!(matches!(
            rule.integrate(0.0, &[], |t| [t]),
            Err(QuadratureError::InvalidInterval(_))
        ));
    }

    #[test]
    fn depth_limit_reports_estimate() {
        let config = QuadratureConfig {
            max_depth: 2,
            ..Default::default()
        };
        let rule = WeaklySingularRule::new(-0.5, &config).unwrap();
        let h = 1e-6;
        let sing = [NearSingularity {
            location: 0.5,
            offset: h,
        }];
        let err = rule
            .integrate(1.0, &sing, |t| [((t - 0.5).powi(2) + h * h).sqrt()])
            .unwrap_err();
        match err {
            QuadratureError::NotConverged {
                estimate, value, ..
            } => {
                assert!(estimate > 0.0 && value.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
