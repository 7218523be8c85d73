//! Standard normal distribution function.

use std::f64::consts::FRAC_1_SQRT_2;

/// Φ(x), the standard normal CDF.
///
/// Evaluated as `erfc(-x / √2) / 2`. Going through `erfc` keeps the lower tail
/// accurate in relative terms and the upper tail accurate to well below 1e-15
/// in absolute terms.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), computed without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}
