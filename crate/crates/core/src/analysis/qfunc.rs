use libm::erfc;

/// Standard Gaussian tail `Q(x) = P(Z > x) = erfc(x / √2) / 2`.
pub fn q_function(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_cdf(x: f64) -> f64 {
    q_function(-x)
}
