//! Estimators used by the Monte Carlo campaigns.

use serde::Serialize;

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// A binomial proportion with its normal-approximation 99% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let estimate = successes as f64 / trials as f64;
        let std_err = (estimate * (1.0 - estimate) / trials as f64).sqrt();
        Proportion {
            successes,
            trials,
            estimate,
            std_err,
            ci_low: (estimate - Z99 * std_err).max(0.0),
            ci_high: (estimate + Z99 * std_err).min(1.0),
        }
    }
}

/// Sample mean with its standard error, accumulated from exact sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub count: u64,
    pub mean: f64,
    pub std_err: f64,
}

impl MeanEstimate {
    /// From the sum and sum of squares of integer observations.
    pub fn from_sums(count: u64, sum: u128, sum_sq: u128) -> Self {
        assert!(count > 0);
        let n = count as f64;
        let mean = sum as f64 / n;
        let var = if count > 1 {
            // n·Σx² − (Σx)² is exact in integers.
            let num = (count as u128 * sum_sq).saturating_sub(sum * sum) as f64;
            num / (n * (n - 1.0))
        } else {
            0.0
        };
        MeanEstimate {
            count,
            mean,
            std_err: (var / n).sqrt(),
        }
    }

    pub fn from_values(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MeanEstimate {
            count: values.len() as u64,
            mean,
            std_err: (var / n).sqrt(),
        }
    }

    /// Distance from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_err == 0.0 {
            if self.mean == target { 0.0 } else { f64::INFINITY }
        } else {
            (self.mean - target).abs() / self.std_err
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> LinearFit {
    assert!(x.len() == y.len() && x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}
