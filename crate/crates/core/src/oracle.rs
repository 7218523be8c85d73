//! Exhaustive optimal pruning for small trees.
//!
//! Every pruning is materialised with [`DecisionTree::apply_pruning`] and its
//! error counted leaf by leaf, with no sharing of partial results between
//! prunings. This is deliberately naive: it is the reference the bottom-up
//! sweep is checked against.

use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Labeling, NodeId, PruningSelection};

pub const DEFAULT_LEAF_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub best: PruningSelection,
    pub best_error: u64,
    pub best_size: usize,
    pub pruning_count: u128,
    /// How many prunings share the optimal (error, size) pair.
    pub minimizers: usize,
}

/// Number of prunings of the subtree at `id`:
/// one for a leaf, `1 + left * right` for an internal node.
pub fn pruning_count(tree: &DecisionTree, id: NodeId) -> u128 {
    match tree.children(id) {
        None => 1,
        Some((l, r)) => pruning_count(tree, l)
            .saturating_mul(pruning_count(tree, r))
            .saturating_add(1),
    }
}

fn check_cap(tree: &DecisionTree, cap: usize) -> Result<()> {
    let leaves = tree.leaf_count();
    if leaves > cap {
        return Err(Error::CapExceeded {
            leaves,
            cap,
            prunings: pruning_count(tree, 0),
        });
    }
    Ok(())
}

/// Every pruning of `tree`, each exactly once, as the set of collapsed nodes.
pub fn enumerate_prunings(
    tree: &DecisionTree,
    cap: usize,
) -> Result<impl Iterator<Item = PruningSelection>> {
    check_cap(tree, cap)?;
    Ok(selections_under(tree, 0).into_iter())
}

fn selections_under(tree: &DecisionTree, id: NodeId) -> Vec<PruningSelection> {
    let Some((l, r)) = tree.children(id) else {
        return vec![PruningSelection::new()];
    };
    let lefts = selections_under(tree, l);
    let rights = selections_under(tree, r);
    let mut out = Vec::with_capacity(1 + lefts.len() * rights.len());
    out.push([id].into_iter().collect());
    for a in &lefts {
        for b in &rights {
            let mut s = a.clone();
            s.extend(b.iter());
            out.push(s);
        }
    }
    out
}

/// Pruning-set error of the tree obtained by applying `selection`.
pub fn error_of(
    selection: &PruningSelection,
    tree: &DecisionTree,
    labeling: Labeling,
) -> Result<u64> {
    let pruned = tree.apply_pruning(selection, labeling)?;
    Ok(pruned.subtree_error(0))
}

/// The smallest of the minimum-error prunings. Among prunings with the same
/// (error, size) the lexicographically smallest selection is reported.
pub fn optimal_pruning(tree: &DecisionTree, labeling: Labeling, cap: usize) -> Result<OracleResult> {
    tree.require_counted("optimal_pruning")?;
    let mut best: Option<(u64, usize, PruningSelection)> = None;
    let mut minimizers = 0;
    let mut count: u128 = 0;
    for selection in enumerate_prunings(tree, cap)? {
        count += 1;
        let pruned = tree.apply_pruning(&selection, labeling)?;
        let key = (pruned.subtree_error(0), pruned.len());
        match &best {
            Some((e, s, sel)) if (key.0, key.1) == (*e, *s) => {
                minimizers += 1;
                if selection < *sel {
                    best = Some((key.0, key.1, selection));
                }
            }
            Some((e, s, _)) if (key.0, key.1) > (*e, *s) => {}
            _ => {
                minimizers = 1;
                best = Some((key.0, key.1, selection));
            }
        }
    }
    let (best_error, best_size, best) = best.expect("every tree has at least one pruning");
    Ok(OracleResult {
        best,
        best_error,
        best_size,
        pruning_count: count,
        minimizers,
    })
}
