//! Monte Carlo campaigns comparing simulation with the closed-form bounds.
//!
//! A campaign is a sequence of independent trials. Trial `i` draws only from
//! [`trial_rng`]`(seed, tag, i)` and results are combined with commutative
//! integer sums or collected in trial order, so reports do not depend on the
//! number of worker threads.

mod occupancy;
mod oracle_check;
mod prune_prob;
mod size_growth;
mod surface;

pub use occupancy::{occupancy_campaign, DeviationRow, OccupancyReport, DEFAULT_LAMBDA_GRID};
pub use oracle_check::{
    oracle_agreement_campaign, oracle_agreement_campaign_with, random_instance, rep_pruner, Disagreement,
    IterativeWitness, OracleCheckConfig, OracleReport, PrunerFn,
};
pub use prune_prob::{pruning_probability_campaign, PruneProbMode, PruneProbReport};
pub use size_growth::{
    size_growth_campaign, GrowthRow, PrunedGrowthRow, SizeGrowthReport, DEFAULT_ALPHA,
};
pub use surface::{
    default_grids, figure3_surface, marching_squares, open_closed_grid, Contour, Surface, SurfaceClaims, DEFAULT_C_GRID_STEPS,
    DEFAULT_P_GRID_STEPS,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
pub use crate::rng::trial_rng;

/// Shared campaign settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CampaignConfig {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 lets the pool pick. Never affects results.
    #[serde(skip)]
    pub workers: usize,
}

impl CampaignConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        CampaignConfig { trials, seed, workers: 0 }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        CampaignConfig { workers, ..self }
    }
}

/// Minimum trial count for proportion campaigns.
pub const MIN_PROPORTION_TRIALS: u64 = 1000;

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ContractViolation(format!("cannot start worker pool: {e}")))
}

/// Runs `trial(i)` for every `i < count` and returns the results in trial
/// order.
pub(crate) fn run_ordered<T, F>(count: u64, workers: usize, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    pool(workers)?.install(|| (0..count).into_par_iter().map(&trial).collect())
}

/// Element-wise integer accumulator used for order-independent reductions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Tally(pub Vec<u128>);

impl Tally {
    pub fn zeros(len: usize) -> Self {
        Tally(vec![0; len])
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        if self.0.is_empty() {
            return other;
        }
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
        self
    }
}

/// Sums per-trial tallies of width `len`.
pub(crate) fn run_tally<F>(count: u64, workers: usize, len: usize, trial: F) -> Result<Tally>
where
    F: Fn(u64) -> Result<Tally> + Sync,
{
    pool(workers)?.install(|| {
        (0..count)
            .into_par_iter()
            .map(&trial)
            .try_reduce(|| Tally::zeros(len), |a, b| Ok(a.merge(b)))
    })
}

/// `Pr{X <= x}` for `X ~ B(n, q)`, summed in log space term by term.
pub fn binomial_cdf(n: u64, q: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let top = x.floor().min(n as f64) as u64;
    if q <= 0.0 {
        return 1.0;
    }
    if q >= 1.0 {
        return if top == n { 1.0 } else { 0.0 };
    }
    let (lq, lr) = (q.ln(), (1.0 - q).ln());
    let mut log_coeff = 0.0f64; // ln C(n, j)
    let mut sum = 0.0;
    for j in 0..=top {
        if j > 0 {
            log_coeff += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        sum += (log_coeff + j as f64 * lq + (n - j) as f64 * lr).exp();
    }
    sum.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_cdf_small_cases() {
        assert!((binomial_cdf(2, 0.5, 0.0) - 0.25).abs() < 1e-15);
        assert!((binomial_cdf(2, 0.5, 1.0) - 0.75).abs() < 1e-15);
        assert_eq!(binomial_cdf(2, 0.5, 2.0), 1.0);
        assert_eq!(binomial_cdf(2, 0.5, -1.0), 0.0);
        assert!((binomial_cdf(10, 0.3, 3.5) - 0.649_610_718_4).abs() < 1e-9);
    }

    #[test]
    fn ordered_runs_do_not_depend_on_workers() {
        let f = |i: u64| Ok(i * i);
        assert_eq!(run_ordered(100, 1, f).unwrap(), run_ordered(100, 4, f).unwrap());
        let g = |i: u64| Ok(Tally(vec![i as u128, 1]));
        assert_eq!(run_tally(100, 3, 2, g).unwrap().0, vec![4950, 100]);
    }
}
