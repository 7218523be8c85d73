//! Reference computations shared by the integration tests.
#![allow(dead_code)]

/// Pr{X >= h} for X ~ B(m, q), by direct summation of the pmf.
pub fn exact_upper_tail(m: u64, q: f64, h: f64) -> f64 {
    let mut total = 0.0;
    let mut coeff = 1.0f64; // C(m, j)
    for j in 0..=m {
        if j > 0 {
            coeff = coeff * (m - j + 1) as f64 / j as f64;
        }
        if j as f64 >= h {
            total += coeff * q.powi(j as i32) * (1.0 - q).powi((m - j) as i32);
        }
    }
    total
}

/// Φ(x) = 1/2 + φ(x)·Σ x^(2j+1) / (1·3·…·(2j+1)), summed with Neumaier
/// compensation until the terms stop contributing. Every term has the sign
/// of x, so there is no cancellation inside the sum.
pub fn phi_series(x: f64) -> f64 {
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut term = x;
    let mut j = 0u32;
    loop {
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        j += 1;
        term *= x * x / f64::from(2 * j + 1);
        if term.abs() < 1e-18 * sum.abs() || j > 2000 {
            break;
        }
    }
    0.5 + density * (sum + comp)
}

