/// Gamma function. Exact on the positive integers up to 21, Lanczos elsewhere.
pub fn gamma(x: f64) -> f64 {
    if let Some(n) = small_positive_integer(x) {
        return factorial(n - 1);
    }
    statrs::function::gamma::gamma(x)
}

/// `1 / Gamma(x)`, which is entire: zero at the poles `x = 0, -1, -2, ...`.
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    1.0 / gamma(x)
}

fn small_positive_integer(x: f64) -> Option<u32> {
    ((1.0..=21.0).contains(&x) && x == x.floor()).then_some(x as u32)
}

fn factorial(n: u32) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}
