//! Small-node, empty-node and difference counts under uniform routing.

use serde::Serialize;

use super::{binomial_cdf, run_tally, CampaignConfig, Tally, MIN_PROPORTION_TRIALS};
use crate::bounds::{
    eq4_expected_small_nodes, mcdiarmid_bound, occupancy_deviation_bound, occupancy_expected_empty,
    p_deviation_bound, Occupancy,
};
use crate::error::{Error, Result};
use crate::generators::balls_in_bins;
use crate::rng::{tag, trial_rng};
use crate::stats::{MeanEstimate, Proportion};

pub const DEFAULT_LAMBDA_GRID: [f64; 9] = [1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 20.0, 30.0, 50.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationRow {
    pub lambda: f64,
    /// `Pr{|Q − EQ| >= λ}`
    pub small: Proportion,
    pub small_bound: f64,
    /// `Pr{|R − ER| >= λ}`, R the empty-node count.
    pub empty: Proportion,
    pub empty_bound: f64,
    /// `Pr{|P − EP| >= λ}` with `P = Q − R`.
    pub difference: Proportion,
    pub difference_bound: f64,
}

impl DeviationRow {
    /// Each bound is at or above the 99% upper confidence limit.
    pub fn dominated(&self) -> bool {
        self.small.ci_high <= self.small_bound
            && self.empty.ci_high <= self.empty_bound
            && self.difference.ci_high <= self.difference_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyReport {
    pub k: u64,
    pub n: u64,
    pub c: f64,
    pub trials: u64,
    pub seed: u64,
    /// Small-node cut-off `c·n/k`.
    pub threshold: f64,
    pub empty: MeanEstimate,
    pub empty_expected: Occupancy,
    /// `exact − approx` for the expected empty count.
    pub empty_approx_gap: f64,
    pub small: MeanEstimate,
    /// Normal approximation to `EQ`.
    pub small_normal: f64,
    /// `EQ` from the binomial distribution function.
    pub small_exact: f64,
    pub difference: MeanEstimate,
    /// `EQ − ER` with the normal approximation and `k·e^(−n/k)`.
    pub difference_approx: f64,
    pub difference_exact: f64,
    pub deviations: Vec<DeviationRow>,
}

impl OccupancyReport {
    pub fn all_dominated(&self) -> bool {
        self.deviations.iter().all(DeviationRow::dominated)
    }
}

pub fn occupancy_campaign(
    k: u64,
    n: u64,
    c: f64,
    lambdas: &[f64],
    config: CampaignConfig,
) -> Result<OccupancyReport> {
    const OP: &str = "occupancy_campaign";
    if k < 2 {
        return Err(Error::domain(OP, format!("k must be at least 2, got {k}")));
    }
    if config.trials == 0 {
        return Err(Error::domain(OP, "trials must be at least 1"));
    }
    // Deviation probabilities are proportions.
    if !lambdas.is_empty() && config.trials < MIN_PROPORTION_TRIALS {
        return Err(Error::domain(
            OP,
            format!("need at least {MIN_PROPORTION_TRIALS} trials for deviation estimates, got {}", config.trials),
        ));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::domain(OP, format!("lambda must be non-negative, got {l}")));
    }
    let small_normal = eq4_expected_small_nodes(n, k, c)?;
    let expected = occupancy_expected_empty(n, k)?;
    let kf = k as f64;
    let threshold = c * n as f64 / kf;
    let small_exact = kf * binomial_cdf(n, 1.0 / kf, threshold);
    let mu = expected.exact;
    let difference_exact = small_exact - mu;

    let bounds: Vec<(f64, f64, f64)> = lambdas
        .iter()
        .map(|&l| {
            Ok((
                mcdiarmid_bound(n, l)?,
                occupancy_deviation_bound(k, mu, l)?,
                p_deviation_bound(n, k, mu, l)?,
            ))
        })
        .collect::<Result<_>>()?;

    // Slots: sums and squares for R, Q, P + k·n (kept non-negative), then
    // three exceedance counters per λ.
    let width = 6 + 3 * lambdas.len();
    let offset = (k * n.max(1)) as i128;
    let t = tag("occupancy");
    let tally = run_tally(config.trials, config.workers, width, |i| {
        let b = balls_in_bins(n, k as usize, threshold, &mut trial_rng(config.seed, t, i))?;
        let (r, q) = (b.empty as f64, b.small as f64);
        let pd = q - r;
        let shifted = (b.small as i128 - b.empty as i128 + offset) as u128;
        let mut v = Vec::with_capacity(width);
        v.extend([
            b.empty as u128,
            (b.empty as u128).pow(2),
            b.small as u128,
            (b.small as u128).pow(2),
            shifted,
            shifted * shifted,
        ]);
        for &l in lambdas {
            v.push(((q - small_exact).abs() >= l) as u128);
            v.push(((r - mu).abs() >= l) as u128);
            v.push(((pd - difference_exact).abs() >= l) as u128);
        }
        Ok(Tally(v))
    })?;

    let s = &tally.0;
    let trials = config.trials;
    let empty = MeanEstimate::from_sums(trials, s[0], s[1]);
    let small = MeanEstimate::from_sums(trials, s[2], s[3]);
    let shifted = MeanEstimate::from_sums(trials, s[4], s[5]);
    let difference = MeanEstimate {
        mean: shifted.mean - offset as f64,
        ..shifted
    };
    let deviations = lambdas
        .iter()
        .zip(&bounds)
        .enumerate()
        .map(|(j, (&lambda, &(bq, br, bp)))| DeviationRow {
            lambda,
            small: Proportion::new(s[6 + 3 * j] as u64, trials),
            small_bound: bq,
            empty: Proportion::new(s[7 + 3 * j] as u64, trials),
            empty_bound: br,
            difference: Proportion::new(s[8 + 3 * j] as u64, trials),
            difference_bound: bp,
        })
        .collect();

    Ok(OccupancyReport {
        k,
        n,
        c,
        trials,
        seed: config.seed,
        threshold,
        empty,
        empty_expected: expected,
        empty_approx_gap: expected.exact - expected.approx,
        small,
        small_normal,
        small_exact,
        difference,
        difference_approx: small_normal - kf * (-(n as f64) / kf).exp(),
        difference_exact,
        deviations,
    })
}
