//! Probability that REP reduces a noise-fitted tree to a single leaf.

use rand::Rng;
use serde::Serialize;

use super::{run_tally, CampaignConfig, Tally, MIN_PROPORTION_TRIALS};
use crate::bounds::eq2_pruning_upper_bound;
use crate::error::{Error, Result};
use crate::generators::{noise_pruning_set, safe_node_tree, NoiseModel, Routing};
use crate::prune::rep_prune;
use crate::rng::{tag, trial_rng, TrialRng};
use crate::stats::Proportion;
use crate::structure::safe_node_ids;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneProbMode {
    /// Sample safe-node counts directly and test whether every safe node has
    /// a (weak) positive majority.
    EventLevel,
    /// Build a tree with `k` safe nodes, run the sweep and count single-leaf
    /// results.
    FullRep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneProbReport {
    pub mode: PruneProbMode,
    pub k: u64,
    pub n: u64,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    /// Allocations drawn, including those rejected for an empty safe node.
    pub attempts: u64,
    pub rejection_rate: f64,
    /// Probability that a uniform allocation leaves no safe node empty.
    pub acceptance_probability: f64,
    /// Event-level: every safe node has `pos_i >= neg_i`. Full-rep: the
    /// pruned tree is a single leaf.
    pub pruned: Proportion,
    /// Every safe node has `neg_i >= pos_i`.
    pub negative_branch: Proportion,
    /// Event-level only: either branch of the collapse condition holds.
    pub either_branch: Proportion,
    pub bound: f64,
    /// Bound minus the point estimate.
    pub gap: f64,
    /// The 99% upper confidence limit lies at or below the bound.
    pub dominated: bool,
    /// Full-rep only: mean leaf count of the generated trees.
    pub mean_leaves: Option<f64>,
}

/// Largest number of internal nodes placed under each safe node's
/// non-leaf side in full-rep trees.
const MAX_EXTRA_INTERNAL: usize = 2;
/// Per-trial cap on rejected allocations.
const MAX_ATTEMPTS_PER_TRIAL: u64 = 10_000;

/// Exact probability that `n` uniform balls leave none of `k` bins empty,
/// by dynamic programming over the number of occupied bins.
pub(crate) fn all_occupied_probability(n: u64, k: u64) -> f64 {
    if n < k {
        return 0.0;
    }
    let k_us = k as usize;
    let kf = k as f64;
    let mut dist = vec![0.0f64; k_us + 1];
    dist[0] = 1.0;
    for _ in 0..n {
        for j in (1..=k_us).rev() {
            dist[j] = dist[j] * (j as f64 / kf) + dist[j - 1] * ((k_us - j + 1) as f64 / kf);
        }
        dist[0] = 0.0;
    }
    dist[k_us]
}

pub fn pruning_probability_campaign(
    k: u64,
    n: u64,
    p: f64,
    mode: PruneProbMode,
    config: CampaignConfig,
) -> Result<PruneProbReport> {
    const OP: &str = "pruning_probability_campaign";
    if k == 0 || n < k {
        return Err(Error::domain(OP, format!("need n >= k >= 1, got n = {n}, k = {k}")));
    }
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::domain(OP, format!("p must lie in (0.5, 1], got {p}")));
    }
    if config.trials < MIN_PROPORTION_TRIALS {
        return Err(Error::domain(
            OP,
            format!("need at least {MIN_PROPORTION_TRIALS} trials, got {}", config.trials),
        ));
    }
    let bound = eq2_pruning_upper_bound(n, k, p)?;
    let acceptance = if n.saturating_mul(k) <= 100_000_000 {
        all_occupied_probability(n, k)
    } else {
        1.0
    };
    if acceptance < 0.01 {
        return Err(Error::Refused(format!(
            "only {:.3e} of allocations leave every safe node non-empty; \
             conditioning on n_i > 0 would reject more than 99% of trials",
            acceptance
        )));
    }

    // Tally slots: attempts, pruned, negative, either, leaves.
    let tally = match mode {
        PruneProbMode::EventLevel => {
            let t = tag("prune-prob/event");
            run_tally(config.trials, config.workers, 5, |i| {
                event_trial(k, n, p, &mut trial_rng(config.seed, t, i))
            })?
        }
        PruneProbMode::FullRep => {
            let t = tag("prune-prob/full-rep");
            run_tally(config.trials, config.workers, 5, |i| {
                full_rep_trial(k, n, p, &mut trial_rng(config.seed, t, i))
            })?
        }
    };
    let [attempts, pruned, negative, either, leaves] = <[u128; 5]>::try_from(tally.0).expect("width 5");
    let trials = config.trials;
    let pruned = Proportion::new(pruned as u64, trials);
    Ok(PruneProbReport {
        mode,
        k,
        n,
        p,
        trials,
        seed: config.seed,
        attempts: attempts as u64,
        rejection_rate: 1.0 - trials as f64 / attempts as f64,
        acceptance_probability: acceptance,
        negative_branch: Proportion::new(negative as u64, trials),
        either_branch: Proportion::new(either as u64, trials),
        bound,
        gap: bound - pruned.estimate,
        dominated: pruned.ci_high <= bound,
        mean_leaves: (mode == PruneProbMode::FullRep)
            .then(|| leaves as f64 / trials as f64),
        pruned,
    })
}

fn refuse_trial() -> Error {
    Error::Refused(format!(
        "a trial drew {MAX_ATTEMPTS_PER_TRIAL} allocations without filling every safe node"
    ))
}

fn event_trial(k: u64, n: u64, p: f64, rng: &mut TrialRng) -> Result<Tally> {
    let mut counts = vec![0u64; k as usize];
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        if attempts > MAX_ATTEMPTS_PER_TRIAL {
            return Err(refuse_trial());
        }
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            counts[rng.gen_range(0..k as usize)] += 1;
        }
        if counts.iter().all(|&c| c > 0) {
            break;
        }
    }
    let mut all_pos = true;
    let mut all_neg = true;
    for &n_i in &counts {
        let pos = (0..n_i).filter(|_| rng.gen_bool(p)).count() as u64;
        all_pos &= 2 * pos >= n_i;
        all_neg &= 2 * pos <= n_i;
    }
    Ok(Tally(vec![
        attempts as u128,
        all_pos as u128,
        all_neg as u128,
        (all_pos || all_neg) as u128,
        0,
    ]))
}

fn full_rep_trial(k: u64, n: u64, p: f64, rng: &mut TrialRng) -> Result<Tally> {
    let tree = safe_node_tree(k as usize, MAX_EXTRA_INTERNAL, rng)?;
    let safe = safe_node_ids(&tree);
    let model = NoiseModel::new(p, Routing::Direct)?;
    let mut attempts = 0u64;
    let counted = loop {
        attempts += 1;
        if attempts > MAX_ATTEMPTS_PER_TRIAL {
            return Err(refuse_trial());
        }
        let data = noise_pruning_set(&tree, &model, n as usize, rng)?;
        let counted = tree.clone().classified(&data)?;
        if safe.iter().all(|&id| counted.node(id).total > 0) {
            break counted;
        }
    };
    let single = rep_prune(&counted)?.tree.is_single_leaf();
    let all_neg = safe
        .iter()
        .all(|&id| counted.node(id).neg() >= counted.node(id).pos);
    Ok(Tally(vec![
        attempts as u128,
        single as u128,
        (single && all_neg) as u128,
        single as u128,
        tree.leaf_count() as u128,
    ]))
}
