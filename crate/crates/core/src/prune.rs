//! Reduced error pruning.
//!
//! [`rep_prune`] is the single bottom-up sweep: internal nodes are visited in
//! postorder and a node is kept only when its (already pruned) subtree makes
//! strictly fewer errors on the pruning set than the majority leaf that would
//! replace it. Ties prune. [`rep_prune_train_labeled`] runs the same sweep with
//! replacement leaves labeled by the training majority, and
//! [`iterative_prune`] is the greedy collapse-the-best-node variant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Labeling, NodeId, PruningSelection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Keep,
    Prune,
}

/// One pruning decision of the bottom-up sweep. Node ids refer to the tree
/// that was pruned, not to the output tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub node: NodeId,
    /// Error of the pruned subtree when the sweep reached the node.
    pub r_t: u64,
    /// Error of the leaf that would replace the node.
    pub r_l: u64,
    pub action: Action,
    pub visit_order: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PruneTrace {
    pub records: Vec<TraceRecord>,
}

impl PruneTrace {
    pub fn action_of(&self, node: NodeId) -> Option<Action> {
        self.records.iter().find(|r| r.node == node).map(|r| r.action)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for r in &self.records {
            wtr.serialize(r)
                .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        }
        if self.records.is_empty() {
            wtr.write_record(["node", "r_t", "r_l", "action", "visit_order"])
                .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub tree: DecisionTree,
    pub trace: PruneTrace,
    /// Pruning-set error of the output tree.
    pub error: u64,
}

/// Bottom-up reduced error pruning with pruning-majority leaf labels.
pub fn rep_prune(tree: &DecisionTree) -> Result<PruneOutcome> {
    sweep(tree, Labeling::PruningMajority, "rep_prune")
}

/// The same sweep, labeling replacement leaves with the training majority.
pub fn rep_prune_train_labeled(tree: &DecisionTree) -> Result<PruneOutcome> {
    if let Some(id) = (0..tree.len())
        .find(|&id| !tree.node(id).is_leaf() && tree.node(id).train_label.is_none())
    {
        return Err(Error::ContractViolation(format!(
            "rep_prune_train_labeled: internal node {id} has no train_label"
        )));
    }
    sweep(tree, Labeling::TrainingMajority, "rep_prune_train_labeled")
}

fn sweep(tree: &DecisionTree, labeling: Labeling, op: &str) -> Result<PruneOutcome> {
    tree.require_counted(op)?;
    let mut err = vec![0u64; tree.len()];
    let mut collapsed = vec![false; tree.len()];
    let mut records = Vec::with_capacity(tree.internal_count());

    for id in tree.postorder() {
        let node = tree.node(id);
        let Some((left, right)) = node.children() else {
            err[id] = node.error_as(node.label().expect("leaf"));
            continue;
        };
        let r_t = err[left] + err[right];
        let r_l = match labeling {
            Labeling::PruningMajority => node.leaf_error(),
            Labeling::TrainingMajority => node.error_as(node.train_label.expect("checked")),
        };
        let action = if r_t < r_l { Action::Keep } else { Action::Prune };
        collapsed[id] = action == Action::Prune;
        err[id] = r_t.min(r_l);
        records.push(TraceRecord {
            node: id,
            r_t,
            r_l,
            action,
            visit_order: records.len(),
        });
    }

    let selection = outermost(tree, &collapsed);
    let pruned = tree.apply_pruning(&selection, labeling)?;
    Ok(PruneOutcome {
        tree: pruned,
        trace: PruneTrace { records },
        error: err[0],
    })
}

/// Marked nodes that have no marked proper ancestor.
fn outermost(tree: &DecisionTree, marked: &[bool]) -> PruningSelection {
    let mut selection = PruningSelection::new();
    let mut id = 0;
    while id < tree.len() {
        if marked[id] {
            selection.insert(id);
            id = tree.subtree_end(id);
        } else {
            id += 1;
        }
    }
    selection
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterativeStep {
    pub node: NodeId,
    pub error_before: u64,
    pub error_after: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterativeOutcome {
    pub tree: DecisionTree,
    pub steps: Vec<IterativeStep>,
    pub error: u64,
}

/// Greedy iterative pruning: repeatedly collapse the node whose replacement
/// by a pruning-majority leaf lowers the error most (ties to the smallest
/// id), until every remaining collapse would raise the error.
pub fn iterative_prune(tree: &DecisionTree) -> Result<IterativeOutcome> {
    tree.require_counted("iterative_prune")?;
    let order = tree.postorder();
    let mut collapsed = vec![false; tree.len()];
    let mut err = vec![0u64; tree.len()];
    let mut steps = Vec::new();

    loop {
        for &id in &order {
            let node = tree.node(id);
            err[id] = match node.children() {
                _ if collapsed[id] => node.leaf_error(),
                None => node.error_as(node.label().expect("leaf")),
                Some((l, r)) => err[l] + err[r],
            };
        }
        let mut best: Option<(i64, NodeId)> = None;
        let mut id = 0;
        while id < tree.len() {
            let node = tree.node(id);
            if collapsed[id] {
                id = tree.subtree_end(id);
                continue;
            }
            if !node.is_leaf() {
                let delta = node.leaf_error() as i64 - err[id] as i64;
                if best.is_none_or(|(d, _)| delta < d) {
                    best = Some((delta, id));
                }
            }
            id += 1;
        }
        match best {
            Some((delta, id)) if delta <= 0 => {
                let before = err[0];
                collapsed[id] = true;
                steps.push(IterativeStep {
                    node: id,
                    error_before: before,
                    error_after: (before as i64 + delta) as u64,
                });
            }
            _ => break,
        }
    }

    let selection = outermost(tree, &collapsed);
    let pruned = tree.apply_pruning(&selection, Labeling::PruningMajority)?;
    Ok(IterativeOutcome {
        tree: pruned,
        steps,
        error: err[0],
    })
}

/// Checks a sweep trace against the retention property: a node whose original
/// children are both internal must be kept whenever one of those children was
/// kept (i.e. it still roots a non-trivial subtree when the sweep reaches it).
pub fn trace_assert_theorem2(trace: &PruneTrace, original: &DecisionTree) -> Result<bool> {
    let actions = trace_actions(trace, original)?;
    for record in &trace.records {
        let (l, r) = original.children(record.node).expect("validated internal");
        if original.node(l).is_leaf() || original.node(r).is_leaf() {
            continue;
        }
        let nontrivial = actions[l] == Some(Action::Keep) || actions[r] == Some(Action::Keep);
        if nontrivial && record.action != Action::Keep {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-node actions of a trace, after checking the trace visits exactly the
/// internal nodes of `original` in postorder.
pub(crate) fn trace_actions(
    trace: &PruneTrace,
    original: &DecisionTree,
) -> Result<Vec<Option<Action>>> {
    let expected = original.internal_postorder();
    if expected.len() != trace.records.len() {
        return Err(Error::ContractViolation(format!(
            "trace has {} records, tree has {} internal nodes",
            trace.records.len(),
            expected.len()
        )));
    }
    let mut actions = vec![None; original.len()];
    for (i, (record, &id)) in trace.records.iter().zip(&expected).enumerate() {
        if record.node != id || record.visit_order != i {
            return Err(Error::ContractViolation(format!(
                "trace record {i} names node {} (visit {}), expected node {id}",
                record.node, record.visit_order
            )));
        }
        actions[id] = Some(record.action);
    }
    Ok(actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Example};
    use crate::tree::{NodeKind, Origin, SplitTest};

    fn ex(attrs: &[f64], label: u8) -> Example {
        Example::new(attrs.to_vec(), label).unwrap()
    }

    fn stump(attr: usize, thr: f64, l: u8, r: u8) -> DecisionTree {
        DecisionTree::split(SplitTest::new(attr, thr), DecisionTree::leaf(l), DecisionTree::leaf(r))
    }

    #[test]
    fn single_leaf_is_unchanged() {
        let data = Dataset::from_examples(0, vec![ex(&[], 1), ex(&[], 0), ex(&[], 1)]).unwrap();
        let t = DecisionTree::leaf(0).classified(&data).unwrap();
        let out = rep_prune(&t).unwrap();
        assert_eq!(out.tree, t);
        assert_eq!(out.error, 2);
        assert!(out.trace.records.is_empty());
    }

    #[test]
    fn requires_counters() {
        let t = stump(0, 0.5, 0, 1);
        assert!(matches!(rep_prune(&t), Err(Error::ContractViolation(_))));
        assert!(matches!(iterative_prune(&t), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn empty_subtree_is_pruned_to_negative_leaf() {
        // Nothing reaches the right subtree.
        let t = DecisionTree::split(
            SplitTest::new(0, 0.5),
            DecisionTree::leaf(1),
            stump(1, 0.5, 1, 1),
        );
        let data = Dataset::from_examples(2, vec![ex(&[0.1, 0.1], 1), ex(&[0.2, 0.9], 1)]).unwrap();
        let t = t.classified(&data).unwrap();
        let out = rep_prune(&t).unwrap();
        let rec = out.trace.records.iter().find(|r| r.node == 2).unwrap();
        assert_eq!((rec.r_t, rec.r_l, rec.action), (0, 0, Action::Prune));
        // Root is then a tie (0 errors either way) and also collapses.
        assert!(out.tree.is_single_leaf());
        assert_eq!(out.tree.root().kind, NodeKind::Leaf { label: 1, origin: Origin::Pruned });

        // With the root forced to matter, the empty subtree alone collapses to 0.
        let data = Dataset::from_examples(2, vec![ex(&[0.1, 0.1], 1), ex(&[0.2, 0.9], 0)]).unwrap();
        let t = DecisionTree::split(
            SplitTest::new(0, 0.5),
            stump(1, 0.5, 1, 0),
            stump(1, 0.5, 1, 1),
        )
        .classified(&data)
        .unwrap();
        let out = rep_prune(&t).unwrap();
        assert_eq!(out.error, 0);
        assert_eq!(out.tree.len(), 5);
        assert_eq!(out.tree.node(4).kind, NodeKind::Leaf { label: 0, origin: Origin::Pruned });
    }

    #[test]
    fn equal_errors_prune() {
        // Subtree makes 1 error; majority leaf also makes 1.
        let data = Dataset::from_examples(1, vec![ex(&[0.1], 1), ex(&[0.9], 1), ex(&[0.9], 0)]).unwrap();
        let t = stump(0, 0.5, 1, 1).classified(&data).unwrap();
        let out = rep_prune(&t).unwrap();
        assert_eq!(out.trace.records[0].r_t, 1);
        assert_eq!(out.trace.records[0].r_l, 1);
        assert_eq!(out.trace.records[0].action, Action::Prune);
        assert!(out.tree.is_single_leaf());
    }

    #[test]
    fn train_variant_matches_when_labels_agree() {
        let data = Dataset::from_examples(
            2,
            vec![ex(&[0.1, 0.1], 1), ex(&[0.1, 0.9], 0), ex(&[0.9, 0.1], 1), ex(&[0.9, 0.9], 1), ex(&[0.8, 0.8], 1)],
        )
        .unwrap();
        let mut t = DecisionTree::split(
            SplitTest::new(0, 0.5),
            stump(1, 0.5, 0, 1),
            stump(1, 0.5, 0, 0),
        )
        .classified(&data)
        .unwrap();
        for id in 0..t.len() {
            let label = t.node(id).majority_label();
            t.node_mut(id).train_label = Some(label);
        }
        assert_eq!(rep_prune(&t).unwrap(), rep_prune_train_labeled(&t).unwrap());
    }

    #[test]
    fn train_variant_requires_labels() {
        let t = stump(0, 0.5, 0, 1).classified(&Dataset::new(1)).unwrap();
        assert!(matches!(rep_prune_train_labeled(&t), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn theorem2_trace_check_detects_forged_prune() {
        let data = Dataset::from_examples(
            2,
            vec![ex(&[0.1, 0.1], 1), ex(&[0.1, 0.9], 0), ex(&[0.9, 0.1], 0), ex(&[0.9, 0.9], 1)],
        )
        .unwrap();
        let t = DecisionTree::split(SplitTest::new(0, 0.5), stump(1, 0.5, 1, 0), stump(1, 0.5, 0, 1))
            .classified(&data)
            .unwrap();
        let out = rep_prune(&t).unwrap();
        assert!(out.trace.records.iter().all(|r| r.action == Action::Keep));
        assert!(trace_assert_theorem2(&out.trace, &t).unwrap());

        let mut forged = out.trace.clone();
        forged.records.last_mut().unwrap().action = Action::Prune;
        assert!(!trace_assert_theorem2(&forged, &t).unwrap());

        let mut broken = out.trace.clone();
        broken.records.swap(0, 1);
        assert!(matches!(trace_assert_theorem2(&broken, &t), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn iterative_fixed_point_and_leaf() {
        let t = DecisionTree::leaf(1).classified(&Dataset::new(0)).unwrap();
        let out = iterative_prune(&t).unwrap();
        assert_eq!(out.tree, t);
        assert!(out.steps.is_empty());

        let data = Dataset::from_examples(1, vec![ex(&[0.1], 0), ex(&[0.9], 1)]).unwrap();
        let t = stump(0, 0.5, 0, 1).classified(&data).unwrap();
        let out = iterative_prune(&t).unwrap();
        assert_eq!(out.tree, t);
        assert_eq!(out.error, 0);
    }

    #[test]
    fn trace_csv_has_header() {
        let data = Dataset::from_examples(1, vec![ex(&[0.1], 0)]).unwrap();
        let t = stump(0, 0.5, 0, 1).classified(&data).unwrap();
        let out = rep_prune(&t).unwrap();
        let mut buf = Vec::new();
        out.trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "node,r_t,r_l,action,visit_order\n0,0,0,prune,0\n");
    }
}
