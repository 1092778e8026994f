//! Gamma-function family used by the conjugate and variational formulas.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// Trigamma function ψ₁(x) for x > 0.
///
/// Recurrence ψ₁(x) = ψ₁(x+1) + 1/x² up to x ≥ 12, then the asymptotic
/// series in 1/x (Bernoulli numbers through B₁₀).
pub fn trigamma(mut x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x²) + 1/(6x³) − 1/(30x⁵) + 1/(42x⁷) − 1/(30x⁹) + 5/(66x¹¹)
    let series = inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0
                + inv2 * (-1.0 / 30.0 + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0 + inv2 * 5.0 / 66.0))));
    acc + series
}

/// Log density of Gam(shape, rate) at `x`.
pub fn ln_gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// KL(Gam(a, b) ‖ Gam(a0, b0)) with shape/rate parametrisation.
pub fn gamma_kl(a: f64, b: f64, a0: f64, b0: f64) -> f64 {
    a0 * (b / b0).ln() - ln_gamma(a) + ln_gamma(a0) + (a - a0) * digamma(a) - (b - b0) * a / b
}

/// Numerically stable log Σ exp.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}
