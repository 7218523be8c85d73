//! Growth of minimal consistent trees fitted to pure noise.

use serde::Serialize;

use super::{run_tally, CampaignConfig, Tally};
use crate::error::{Error, Result};
use crate::generators::{minimal_consistent_threshold_tree, theorem6_sample};
use crate::prune::rep_prune;
use crate::rng::{tag, trial_rng};
use crate::stats::{linear_regression, LinearFit, MeanEstimate};

/// Share of the sample used for growing in the pruned-growth variant.
pub const DEFAULT_ALPHA: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRow {
    pub t: usize,
    pub mean_leaves: f64,
    pub std_err: f64,
    /// `2(t − 1)p(1 − p) + 1`
    pub predicted: f64,
    /// |mean − predicted| in standard errors.
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrunedGrowthRow {
    pub t: usize,
    pub grow_size: usize,
    pub prune_size: usize,
    pub mean_grown_leaves: f64,
    pub mean_pruned_leaves: f64,
    pub pruned_std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeGrowthReport {
    pub p: f64,
    pub reps: u64,
    pub seed: u64,
    pub rows: Vec<GrowthRow>,
    /// Mean leaves regressed on `t`; needs at least two distinct sizes.
    pub fit: Option<LinearFit>,
    pub predicted_slope: f64,
    pub pruned: Vec<PrunedGrowthRow>,
}

pub fn predicted_leaves(t: usize, p: f64) -> f64 {
    2.0 * (t as f64 - 1.0) * p * (1.0 - p) + 1.0
}

/// For each sample size `t`, `config.trials` samples are drawn and the mean
/// leaf count of their minimal consistent trees is compared with the
/// expectation. With `alpha` set, the pruned-growth variant grows on
/// `⌊αt⌋` examples and prunes with the remaining ones.
pub fn size_growth_campaign(
    p: f64,
    t_list: &[usize],
    config: CampaignConfig,
    alpha: Option<f64>,
) -> Result<SizeGrowthReport> {
    const OP: &str = "size_growth_campaign";
    if t_list.is_empty() {
        return Err(Error::domain(OP, "t_list must not be empty"));
    }
    if t_list.contains(&0) {
        return Err(Error::domain(OP, "every t must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(OP, format!("p must lie in [0, 1], got {p}")));
    }
    if config.trials == 0 {
        return Err(Error::domain(OP, "reps must be at least 1"));
    }
    if let Some(a) = alpha {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::domain(OP, format!("alpha must lie in (0, 1), got {a}")));
        }
        if let Some(&t) = t_list.iter().find(|&&t| split_sizes(t, a).is_none()) {
            return Err(Error::domain(OP, format!("t = {t} leaves an empty growing or pruning set")));
        }
    }
    let reps = config.trials;

    let mut rows = Vec::with_capacity(t_list.len());
    for (row, &t) in t_list.iter().enumerate() {
        let campaign = tag("size-growth") ^ row as u64;
        let tally = run_tally(reps, config.workers, 2, |i| {
            let sample = theorem6_sample(t, p, &mut trial_rng(config.seed, campaign, i))?;
            let leaves = minimal_consistent_threshold_tree(&sample)?.leaf_count() as u128;
            Ok(Tally(vec![leaves, leaves * leaves]))
        })?;
        let est = MeanEstimate::from_sums(reps, tally.0[0], tally.0[1]);
        let predicted = predicted_leaves(t, p);
        rows.push(GrowthRow {
            t,
            mean_leaves: est.mean,
            std_err: est.std_err,
            predicted,
            z: est.z_score(predicted),
        });
    }

    let mut distinct: Vec<usize> = t_list.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let fit = (distinct.len() >= 2).then(|| {
        let x: Vec<f64> = rows.iter().map(|r| r.t as f64).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.mean_leaves).collect();
        linear_regression(&x, &y)
    });

    let mut pruned = Vec::new();
    if let Some(a) = alpha {
        for (row, &t) in t_list.iter().enumerate() {
            let (grow, prune) = split_sizes(t, a).expect("checked above");
            let campaign = tag("size-growth/pruned") ^ row as u64;
            let tally = run_tally(reps, config.workers, 3, |i| {
                let rng = &mut trial_rng(config.seed, campaign, i);
                let tree = minimal_consistent_threshold_tree(&theorem6_sample(grow, p, rng)?)?;
                let grown = tree.leaf_count() as u128;
                let pruning_set = theorem6_sample(prune, p, rng)?;
                let left = rep_prune(&tree.classified(&pruning_set)?)?.tree.leaf_count() as u128;
                Ok(Tally(vec![grown, left, left * left]))
            })?;
            let est = MeanEstimate::from_sums(reps, tally.0[1], tally.0[2]);
            pruned.push(PrunedGrowthRow {
                t,
                grow_size: grow,
                prune_size: prune,
                mean_grown_leaves: tally.0[0] as f64 / reps as f64,
                mean_pruned_leaves: est.mean,
                pruned_std_err: est.std_err,
            });
        }
    }

    Ok(SizeGrowthReport {
        p,
        reps,
        seed: config.seed,
        rows,
        fit,
        predicted_slope: 2.0 * p * (1.0 - p),
        pruned,
    })
}

fn split_sizes(t: usize, alpha: f64) -> Option<(usize, usize)> {
    let grow = (alpha * t as f64).floor() as usize;
    (grow >= 1 && grow < t).then_some((grow, t - grow))
}
