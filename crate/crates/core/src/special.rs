//! Special functions used by the estimators, backed by `statrs`.

use statrs::distribution::{ContinuousCDF, Normal};

/// Digamma function `psi(x) = d/dx ln Gamma(x)`.
pub fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Standard normal quantile `Phi^-1(p)`.
pub fn normal_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Upper-tail z-score: the value `z` with `P(Z > z) = tail`.
pub fn upper_z(tail: f64) -> f64 {
    normal_quantile(1.0 - tail)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from an arbitrary-precision evaluation (mpmath, 30 digits).
    const DIGAMMA_TABLE: &[(f64, f64)] = &[
        (0.5, -1.963510026021423479),
        (1.0, -0.577215664901532861),
        (1.5, 0.036489973978576521),
        (2.0, 0.422784335098467139),
        (3.7, 1.167153539361511441),
        (6.0, 1.706117668431800473),
        (10.0, 2.251752589066721108),
        (49.0, 3.881581510162586075),
        (100.0, 4.600161852738087400),
        (1000.0, 6.907255195648812052),
    ];

    #[test]
    fn digamma_matches_table() {
        for &(x, expected) in DIGAMMA_TABLE {
            let got = digamma(x);
            assert!((got - expected).abs() < 1e-10, "psi({x}) = {got}, want {expected}");
        }
    }

    #[test]
    fn digamma_recurrence_holds() {
        for i in 1..200 {
            let x = i as f64 * 0.173;
            let lhs = digamma(x + 1.0);
            let rhs = digamma(x) + 1.0 / x;
            assert!((lhs - rhs).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn normal_quantiles() {
        assert!((upper_z(0.025) - 1.959963984540054).abs() < 1e-9);
        assert!((upper_z(0.25) - 0.6744897501960817).abs() < 1e-9);
        assert!(normal_quantile(0.5).abs() < 1e-12);
    }

    #[test]
    fn beta_function() {
        // B(4, 4) = 1/140
        assert!((ln_beta(4.0, 4.0) + 140f64.ln()).abs() < 1e-12);
    }
}
