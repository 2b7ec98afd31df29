/// Logistic CDF `1 / (1 + e^{-x})`, evaluated without overflow for large `|x|`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_about_zero() {
        for x in [0.0, 0.3, 1.0, 5.0, 40.0] {
            assert!((logistic(x) + logistic(-x) - 1.0).abs() < 1e-15);
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(logistic(0.0), 0.5);
        assert_eq!(normal_cdf(0.0), 0.5);
    }

    #[test]
    fn reference_values() {
        // 1 / (1 + e^-1) and Phi(1) to 12 digits.
        assert!((logistic(1.0) - 0.731_058_578_630_005).abs() < 1e-12);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_543).abs() < 1e-12);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_095).abs() < 1e-14);
    }

    #[test]
    fn extreme_arguments_stay_finite() {
        assert_eq!(logistic(1000.0), 1.0);
        assert_eq!(logistic(-1000.0), 0.0);
        assert!(logistic(-700.0) > 0.0);
    }
}
