use std::f64::consts::PI;

/// Partial product `∏_{k=2}^{terms} cos(π/2k)`.
pub fn nu_constant(terms: usize) -> f64 {
    (2..=terms.max(1)).map(|k| (PI / (2.0 * k as f64)).cos()).product()
}

/// Partial products for `terms = 2, 3, …, max_terms`.
pub fn nu_partial_products(max_terms: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_terms.saturating_sub(1));
    let mut p = 1.0;
    for k in 2..=max_terms {
        p *= (PI / (2.0 * k as f64)).cos();
        out.push(p);
    }
    out
}

/// The infinite product, with the tail `∏_{k>n} cos(π/2k) ≈ exp(-π²/8n)` folded in.
pub fn nu_limit() -> f64 {
    let n = 100_000;
    nu_constant(n) * (-(PI * PI) / (8.0 * n as f64)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_factor() {
        assert!((nu_constant(2) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn decreasing_and_above_two_fifths() {
        let p = nu_partial_products(10_000);
        assert!(p.windows(2).all(|w| w[1] < w[0]));
        assert!(p.iter().all(|&x| x > 0.4));
    }

    #[test]
    fn limit_value() {
        let n = 10_000_000;
        let tail = (-(PI * PI) / (8.0 * n as f64)).exp();
        assert!((nu_limit() - nu_constant(n) * tail).abs() < 1e-10);
        assert!((nu_limit() - 0.42978).abs() < 1e-5);
    }
}
