//! Fringe and safe nodes, and the structural predicates built on them.
//!
//! The fringe is the set of internal nodes of the original tree with at least
//! one leaf child. A safe node is a fringe node with no fringe proper
//! ancestor; the safe nodes form an antichain that every root-to-leaf path
//! crosses exactly once, and every proper ancestor of a safe node has two
//! internal children.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prune::{trace_actions, Action, PruneTrace};
use crate::tree::{DecisionTree, NodeId, NodeKind};

pub fn fringe(tree: &DecisionTree) -> BTreeSet<NodeId> {
    (0..tree.len())
        .filter(|&id| match tree.children(id) {
            Some((l, r)) => tree.node(l).is_leaf() || tree.node(r).is_leaf(),
            None => false,
        })
        .collect()
}

/// Safe-node ids in preorder; empty for a single-leaf tree.
pub fn safe_node_ids(tree: &DecisionTree) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut stack = vec![0];
    while let Some(id) = stack.pop() {
        let Some((l, r)) = tree.children(id) else {
            continue;
        };
        if tree.node(l).is_leaf() || tree.node(r).is_leaf() {
            out.push(id);
        } else {
            stack.push(r);
            stack.push(l);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SafeNode {
    pub node: NodeId,
    pub n_i: u64,
    pub pos_i: u64,
}

impl SafeNode {
    pub fn neg_i(&self) -> u64 {
        self.n_i - self.pos_i
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SafeNodeReport {
    pub safe: Vec<SafeNode>,
    pub k: usize,
}

pub fn safe_nodes(tree: &DecisionTree) -> Result<SafeNodeReport> {
    tree.require_counted("safe_nodes")?;
    let safe: Vec<SafeNode> = safe_node_ids(tree)
        .into_iter()
        .map(|id| SafeNode {
            node: id,
            n_i: tree.node(id).total,
            pos_i: tree.node(id).pos,
        })
        .collect();
    Ok(SafeNodeReport {
        k: safe.len(),
        safe,
    })
}

/// Depth, relative to `node`, of the level just above the shallowest leaf
/// strictly below it.
pub fn depth_to_first_leaf(tree: &DecisionTree, node: NodeId) -> Result<usize> {
    if node >= tree.len() || tree.node(node).is_leaf() {
        return Err(Error::ContractViolation(format!(
            "depth_to_first_leaf: node {node} is not internal"
        )));
    }
    let mut queue = VecDeque::from([(node, 0usize)]);
    while let Some((id, depth)) = queue.pop_front() {
        match tree.children(id) {
            None => return Ok(depth - 1),
            Some((l, r)) => {
                queue.push_back((l, depth + 1));
                queue.push_back((r, depth + 1));
            }
        }
    }
    unreachable!("every subtree contains a leaf")
}

/// Descendants of `node` exactly `depth` levels below it.
pub fn descendants_at_depth(tree: &DecisionTree, node: NodeId, depth: usize) -> Vec<NodeId> {
    let mut level = vec![node];
    for _ in 0..depth {
        level = level
            .into_iter()
            .filter_map(|id| tree.children(id))
            .flat_map(|(l, r)| [l, r])
            .collect();
    }
    level
}

/// Depth-based retention check on a sweep trace: if any descendant of
/// `N` at depth `depth_to_first_leaf(N)` was kept by the sweep, `N` was kept.
pub fn corollary3_holds(trace: &PruneTrace, original: &DecisionTree) -> Result<bool> {
    let actions = trace_actions(trace, original)?;
    for id in original.internal_postorder() {
        let d = depth_to_first_leaf(original, id)?;
        let any_kept = descendants_at_depth(original, id, d)
            .into_iter()
            .any(|n| actions[n] == Some(Action::Keep));
        if any_kept && actions[id] != Some(Action::Keep) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CollapseReason {
    /// The original tree is already a single leaf.
    NoInternalNodes,
    /// Some safe-node subtree survived the sweep.
    SafeSubtreeRetained { node: NodeId },
    /// Safe nodes disagree: one has a strict positive and one a strict
    /// negative majority.
    MixedMajorities,
    /// Every safe node has at least as many positive as negative examples.
    AllPositive,
    /// Every safe node has at least as many negative as positive examples.
    AllNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Theorem4Verdict {
    pub collapses: bool,
    pub reason: CollapseReason,
}

/// Predicts whether the sweep reduced the tree to a single leaf: every
/// safe-node subtree must have collapsed and the safe nodes must agree on the
/// majority class (ties count for either side).
pub fn theorem4_predicate(
    original: &DecisionTree,
    pruned: &DecisionTree,
    report: &SafeNodeReport,
) -> Result<Theorem4Verdict> {
    let ids = safe_node_ids(original);
    let consistent = report.k == report.safe.len()
        && report.safe.len() == ids.len()
        && report.safe.iter().zip(&ids).all(|(s, &id)| {
            s.node == id && s.n_i == original.node(id).total && s.pos_i == original.node(id).pos
        });
    if !consistent {
        return Err(Error::ContractViolation(
            "safe-node report does not match the original tree".into(),
        ));
    }
    if original.is_single_leaf() {
        return Ok(Theorem4Verdict {
            collapses: true,
            reason: CollapseReason::NoInternalNodes,
        });
    }

    let image = correspondence(original, pruned)?;
    for s in &report.safe {
        if let Some(p) = image[s.node] {
            if !pruned.node(p).is_leaf() {
                return Ok(Theorem4Verdict {
                    collapses: false,
                    reason: CollapseReason::SafeSubtreeRetained { node: s.node },
                });
            }
        }
    }
    let reason = if report.safe.iter().all(|s| s.pos_i >= s.neg_i()) {
        CollapseReason::AllPositive
    } else if report.safe.iter().all(|s| s.neg_i() >= s.pos_i) {
        CollapseReason::AllNegative
    } else {
        CollapseReason::MixedMajorities
    };
    Ok(Theorem4Verdict {
        collapses: reason != CollapseReason::MixedMajorities,
        reason,
    })
}

/// Maps each node of `original` to its counterpart in `pruned`, or `None`
/// when it was removed under a collapsed ancestor. Fails unless `pruned` is a
/// pruning of `original`.
pub fn correspondence(original: &DecisionTree, pruned: &DecisionTree) -> Result<Vec<Option<NodeId>>> {
    let mismatch = |o: NodeId| {
        Error::ContractViolation(format!(
            "pruned tree is not a pruning of the original (at original node {o})"
        ))
    };
    let mut image = vec![None; original.len()];
    let mut stack = vec![(0usize, 0usize)];
    while let Some((o, p)) = stack.pop() {
        if p >= pruned.len() {
            return Err(mismatch(o));
        }
        image[o] = Some(p);
        match (&original.node(o).kind, &pruned.node(p).kind) {
            (
                NodeKind::Internal { test: t1, left: l1, right: r1 },
                NodeKind::Internal { test: t2, left: l2, right: r2 },
            ) => {
                if t1 != t2 {
                    return Err(mismatch(o));
                }
                stack.push((*r1, *r2));
                stack.push((*l1, *l2));
            }
            (_, NodeKind::Leaf { .. }) => {}
            (NodeKind::Leaf { .. }, NodeKind::Internal { .. }) => return Err(mismatch(o)),
        }
    }
    Ok(image)
}
