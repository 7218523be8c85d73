//! Random agreement checks between the bottom-up sweep and the exhaustive
//! oracle, plus a search for instances where greedy iterative pruning falls
//! short of the optimum.

use rand::Rng;
use serde::Serialize;
use serde_json::Value;

use super::{run_ordered, CampaignConfig};
use crate::error::{Error, Result};
use crate::generators::{leaf_biased_set, random_tree, TreeShape};
use crate::oracle::{optimal_pruning, DEFAULT_LEAF_CAP};
use crate::prune::{iterative_prune, rep_prune};
use crate::rng::{tag, trial_rng};
use crate::tree::{DecisionTree, Labeling};
use crate::tree_json;

/// A pruner under test: maps a counted tree to its pruned tree.
pub type PrunerFn = dyn Fn(&DecisionTree) -> Result<DecisionTree> + Sync;

/// The bottom-up sweep with pruning-majority labels.
pub fn rep_pruner(tree: &DecisionTree) -> Result<DecisionTree> {
    Ok(rep_prune(tree)?.tree)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleCheckConfig {
    pub instances: u64,
    /// Largest leaf count of a generated tree.
    pub max_leaves: usize,
    /// Largest pruning-set size.
    pub max_examples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
}

impl OracleCheckConfig {
    pub fn new(instances: u64, seed: u64) -> Self {
        OracleCheckConfig {
            instances,
            max_leaves: 10,
            max_examples: 50,
            seed,
            workers: 0,
        }
    }

    pub fn from_campaign(c: CampaignConfig) -> Self {
        OracleCheckConfig {
            workers: c.workers,
            ..Self::new(c.trials, c.seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Disagreement {
    pub instance: u64,
    /// The counted input tree.
    pub tree: Value,
    pub pruner_error: u64,
    pub pruner_size: usize,
    pub oracle_error: u64,
    pub oracle_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterativeWitness {
    pub instance: u64,
    pub tree: Value,
    pub iterative_error: u64,
    pub iterative_size: usize,
    pub oracle_error: u64,
    pub oracle_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub instances: u64,
    pub seed: u64,
    pub max_leaves: usize,
    pub single_leaf_instances: u64,
    pub agreements: u64,
    pub disagreements: u64,
    /// The lowest-indexed disagreement.
    pub first_disagreement: Option<Disagreement>,
    /// Instances where iterative pruning is strictly less accurate than the
    /// optimum.
    pub iterative_suboptimal: u64,
    pub first_iterative_witness: Option<IterativeWitness>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.disagreements == 0
    }
}

pub fn oracle_agreement_campaign(config: OracleCheckConfig) -> Result<OracleReport> {
    oracle_agreement_campaign_with(config, &rep_pruner)
}

struct InstanceResult {
    single_leaf: bool,
    disagreement: Option<Disagreement>,
    witness: Option<IterativeWitness>,
}

/// A random counted instance: tree shape, leaf count and pruning-set size are
/// all drawn per instance, and labels agree with the reached leaf with a
/// random fidelity in `[0.5, 1]`.
pub fn random_instance<R: Rng>(max_leaves: usize, max_examples: usize, rng: &mut R) -> Result<DecisionTree> {
    let shape = [TreeShape::Uniform, TreeShape::RandomBst, TreeShape::Balanced][rng.gen_range(0..3)];
    let tree = random_tree(rng.gen_range(0..max_leaves), shape, rng);
    let n = rng.gen_range(0..=max_examples);
    let fidelity = rng.gen_range(0.5..=1.0);
    let data = leaf_biased_set(&tree, n, fidelity, rng)?;
    tree.classified(&data)
}

pub fn oracle_agreement_campaign_with(
    config: OracleCheckConfig,
    pruner: &PrunerFn,
) -> Result<OracleReport> {
    if config.max_leaves == 0 || config.max_leaves > DEFAULT_LEAF_CAP {
        return Err(Error::domain(
            "oracle_agreement_campaign",
            format!("leaf cap must lie in 1..={DEFAULT_LEAF_CAP}, got {}", config.max_leaves),
        ));
    }
    let t = tag("oracle-check");
    let results = run_ordered(config.instances, config.workers, |i| {
        let rng = &mut trial_rng(config.seed, t, i);
        let tree = random_instance(config.max_leaves, config.max_examples, rng)?;
        let oracle = optimal_pruning(&tree, Labeling::PruningMajority, DEFAULT_LEAF_CAP)?;
        let pruned = pruner(&tree)?;
        let got = (pruned.subtree_error(0), pruned.len());
        let disagreement = (got != (oracle.best_error, oracle.best_size)).then(|| Disagreement {
            instance: i,
            tree: tree_json::to_value(&tree),
            pruner_error: got.0,
            pruner_size: got.1,
            oracle_error: oracle.best_error,
            oracle_size: oracle.best_size,
        });
        let iterative = iterative_prune(&tree)?;
        let witness = (iterative.error > oracle.best_error).then(|| IterativeWitness {
            instance: i,
            tree: tree_json::to_value(&tree),
            iterative_error: iterative.error,
            iterative_size: iterative.tree.len(),
            oracle_error: oracle.best_error,
            oracle_size: oracle.best_size,
        });
        Ok(InstanceResult {
            single_leaf: tree.is_single_leaf(),
            disagreement,
            witness,
        })
    })?;

    let disagreements = results.iter().filter(|r| r.disagreement.is_some()).count() as u64;
    let iterative_suboptimal = results.iter().filter(|r| r.witness.is_some()).count() as u64;
    let single_leaf_instances = results.iter().filter(|r| r.single_leaf).count() as u64;
    let first_disagreement = results.iter().find_map(|r| r.disagreement.clone());
    let first_iterative_witness = results.iter().find_map(|r| r.witness.clone());
    Ok(OracleReport {
        instances: config.instances,
        seed: config.seed,
        max_leaves: config.max_leaves,
        single_leaf_instances,
        agreements: config.instances - disagreements,
        disagreements,
        first_disagreement,
        iterative_suboptimal,
        first_iterative_witness,
    })
}
