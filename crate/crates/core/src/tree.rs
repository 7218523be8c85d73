//! Binary decision trees with per-node pruning counters.
//!
//! Nodes live in a flat vector in preorder, so a node's id is its preorder
//! index and the subtree rooted at `id` occupies the contiguous range
//! `id..subtree_end(id)`. An internal node's left child is always `id + 1`.
//! Every internal node has exactly two children.

use std::collections::BTreeSet;
use std::ops::Range;

use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};

pub type NodeId = usize;

/// `attr < threshold` goes left, everything else goes right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitTest {
    pub attr: usize,
    pub threshold: f64,
}

impl SplitTest {
    pub fn new(attr: usize, threshold: f64) -> Self {
        SplitTest { attr, threshold }
    }

    pub fn goes_left(&self, value: f64) -> bool {
        value < self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Original,
    Pruned,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf { label: u8, origin: Origin },
    Internal { test: SplitTest, left: NodeId, right: NodeId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    /// Pruning examples that reached this node.
    pub total: u64,
    /// Positive pruning examples that reached this node.
    pub pos: u64,
    /// Majority class of the training examples, when known.
    pub train_label: Option<u8>,
}

impl Node {
    pub fn leaf(label: u8) -> Self {
        assert!(label <= 1, "leaf label must be 0 or 1, got {label}");
        Node {
            kind: NodeKind::Leaf {
                label,
                origin: Origin::Original,
            },
            total: 0,
            pos: 0,
            train_label: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn neg(&self) -> u64 {
        self.total - self.pos
    }

    pub fn label(&self) -> Option<u8> {
        match self.kind {
            NodeKind::Leaf { label, .. } => Some(label),
            NodeKind::Internal { .. } => None,
        }
    }

    pub fn children(&self) -> Option<(NodeId, NodeId)> {
        match self.kind {
            NodeKind::Internal { left, right, .. } => Some((left, right)),
            NodeKind::Leaf { .. } => None,
        }
    }

    /// Error of the best majority leaf that could replace this node.
    pub fn leaf_error(&self) -> u64 {
        self.pos.min(self.neg())
    }

    /// Pruning-set majority; ties go to 0.
    pub fn majority_label(&self) -> u8 {
        u8::from(self.pos > self.neg())
    }

    /// Errors a leaf labeled `label` makes on the examples counted here.
    pub fn error_as(&self, label: u8) -> u64 {
        if label == 1 {
            self.neg()
        } else {
            self.pos
        }
    }
}

/// How leaves introduced by pruning are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    /// Majority of the pruning examples, ties labeled 0.
    PruningMajority,
    /// The stored training-majority label of the collapsed node.
    TrainingMajority,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    counted: bool,
}

impl DecisionTree {
    pub fn leaf(label: u8) -> Self {
        DecisionTree {
            nodes: vec![Node::leaf(label)],
            counted: false,
        }
    }

    pub fn split(test: SplitTest, left: DecisionTree, right: DecisionTree) -> Self {
        let left_len = left.nodes.len();
        let mut nodes = Vec::with_capacity(1 + left_len + right.nodes.len());
        nodes.push(Node {
            kind: NodeKind::Internal {
                test,
                left: 1,
                right: 1 + left_len,
            },
            total: 0,
            pos: 0,
            train_label: None,
        });
        nodes.extend(left.nodes.into_iter().map(|n| shifted(n, 1)));
        nodes.extend(right.nodes.into_iter().map(|n| shifted(n, 1 + left_len)));
        DecisionTree {
            nodes,
            counted: false,
        }
    }

    /// Sets the root's training-majority label.
    pub fn with_train_label(mut self, label: u8) -> Self {
        assert!(label <= 1);
        self.nodes[0].train_label = Some(label);
        self
    }

    /// Builds a tree from preorder nodes, checking every structural invariant.
    /// `counted` declares that the counters are the result of a classify pass.
    pub fn from_nodes(nodes: Vec<Node>, counted: bool) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::ContractViolation("a tree needs at least one node".into()));
        }
        let tree = DecisionTree { nodes, counted };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        let mut expected_end = vec![0usize; self.nodes.len()];
        // Walk in reverse preorder so children are finished before parents.
        for id in (0..self.nodes.len()).rev() {
            let node = &self.nodes[id];
            if node.pos > node.total {
                return Err(Error::ContractViolation(format!(
                    "node {id}: pos {} exceeds total {}",
                    node.pos, node.total
                )));
            }
            if let Some(l) = node.train_label {
                if l > 1 {
                    return Err(Error::ContractViolation(format!(
                        "node {id}: train_label {l} is not 0 or 1"
                    )));
                }
            }
            match node.kind {
                NodeKind::Leaf { label, .. } => {
                    if label > 1 {
                        return Err(Error::ContractViolation(format!(
                            "node {id}: label {label} is not 0 or 1"
                        )));
                    }
                    expected_end[id] = id + 1;
                }
                NodeKind::Internal { left, right, .. } => {
                    if left != id + 1 || right >= self.nodes.len() || right <= left {
                        return Err(Error::ContractViolation(format!(
                            "node {id}: children ({left}, {right}) break preorder layout"
                        )));
                    }
                    if expected_end[left] != right {
                        return Err(Error::ContractViolation(format!(
                            "node {id}: right child {right} does not follow left subtree"
                        )));
                    }
                    expected_end[id] = expected_end[right];
                    if self.counted {
                        let (l, r) = (&self.nodes[left], &self.nodes[right]);
                        if node.total != l.total + r.total || node.pos != l.pos + r.pos {
                            return Err(Error::ContractViolation(format!(
                                "node {id}: counters are not the sum of its children's"
                            )));
                        }
                    }
                }
            }
        }
        if expected_end[0] != self.nodes.len() {
            return Err(Error::ContractViolation(
                "nodes outside the root's subtree".into(),
            ));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    #[cfg(test)]
    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id]
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_single_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    /// True once a classify pass has filled the counters.
    pub fn is_counted(&self) -> bool {
        self.counted
    }

    pub fn children(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        self.nodes[id].children()
    }

    pub fn subtree_end(&self, mut id: NodeId) -> NodeId {
        while let Some((_, right)) = self.children(id) {
            id = right;
        }
        id + 1
    }

    pub fn subtree(&self, id: NodeId) -> Range<NodeId> {
        id..self.subtree_end(id)
    }

    /// True iff `ancestor` is a proper ancestor of `node`.
    pub fn is_proper_ancestor(&self, ancestor: NodeId, node: NodeId) -> bool {
        ancestor < node && node < self.subtree_end(ancestor)
    }

    pub fn parents(&self) -> Vec<Option<NodeId>> {
        let mut parents = vec![None; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            if let Some((l, r)) = node.children() {
                parents[l] = Some(id);
                parents[r] = Some(id);
            }
        }
        parents
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depths = vec![0; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            if let Some((l, r)) = node.children() {
                depths[l] = depths[id] + 1;
                depths[r] = depths[id] + 1;
            }
        }
        depths
    }

    /// All node ids in postorder.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, false)];
        while let Some((id, expanded)) = stack.pop() {
            match self.children(id) {
                Some((l, r)) if !expanded => {
                    stack.push((id, true));
                    stack.push((r, false));
                    stack.push((l, false));
                }
                _ => out.push(id),
            }
        }
        out
    }

    pub fn internal_postorder(&self) -> Vec<NodeId> {
        self.postorder()
            .into_iter()
            .filter(|&id| !self.nodes[id].is_leaf())
            .collect()
    }

    /// Id of the leaf the example reaches.
    pub fn route(&self, example: &Example) -> Result<NodeId> {
        let mut id = 0;
        while let NodeKind::Internal { test, left, right } = self.nodes[id].kind {
            let value = example.attributes.get(test.attr).ok_or_else(|| {
                Error::SchemaMismatch(format!(
                    "node {id} tests attribute {} but the example has {}",
                    test.attr,
                    example.attributes.len()
                ))
            })?;
            id = if test.goes_left(*value) { left } else { right };
        }
        Ok(id)
    }

    pub fn predict(&self, example: &Example) -> Result<u8> {
        let leaf = self.route(example)?;
        Ok(self.nodes[leaf].label().expect("route ends at a leaf"))
    }

    /// Misclassifications on `data`, counted by routing each example.
    pub fn misclassified(&self, data: &Dataset) -> Result<u64> {
        let mut errors = 0;
        for e in data {
            if self.predict(e)? != e.label {
                errors += 1;
            }
        }
        Ok(errors)
    }

    /// Drives every pruning example top-down, incrementing `total` (and `pos`
    /// for positives) on each node along its path.
    pub fn classify_pass(&mut self, pruning_set: &Dataset) -> Result<()> {
        if let Some(id) = self.nodes.iter().position(|n| n.total != 0 || n.pos != 0) {
            return Err(Error::ContractViolation(format!(
                "classify pass needs zeroed counters; node {id} has ({}, {})",
                self.nodes[id].total, self.nodes[id].pos
            )));
        }
        let max_attr = self
            .nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Internal { test, .. } => Some(test.attr),
                NodeKind::Leaf { .. } => None,
            })
            .max();
        if let Some(attr) = max_attr {
            if attr >= pruning_set.arity() {
                return Err(Error::SchemaMismatch(format!(
                    "tree tests attribute {attr} but the dataset has {} attributes",
                    pruning_set.arity()
                )));
            }
        }
        for e in pruning_set {
            let positive = u64::from(e.is_positive());
            let mut id = 0;
            loop {
                let node = &mut self.nodes[id];
                node.total += 1;
                node.pos += positive;
                match node.kind {
                    NodeKind::Internal { test, left, right } => {
                        id = if test.goes_left(e.attributes[test.attr]) {
                            left
                        } else {
                            right
                        };
                    }
                    NodeKind::Leaf { .. } => break,
                }
            }
        }
        self.counted = true;
        Ok(())
    }

    /// Convenience wrapper around [`classify_pass`](Self::classify_pass).
    pub fn classified(mut self, pruning_set: &Dataset) -> Result<Self> {
        self.classify_pass(pruning_set)?;
        Ok(self)
    }

    pub fn clear_counters(&mut self) {
        for n in &mut self.nodes {
            n.total = 0;
            n.pos = 0;
        }
        self.counted = false;
    }

    pub fn leaf_error(&self, id: NodeId) -> u64 {
        self.nodes[id].leaf_error()
    }

    /// Errors the current subtree at `id` makes on the counted examples.
    pub fn subtree_error(&self, id: NodeId) -> u64 {
        self.subtree(id)
            .filter_map(|i| {
                let n = &self.nodes[i];
                n.label().map(|label| n.error_as(label))
            })
            .sum()
    }

    pub fn require_counted(&self, op: &str) -> Result<()> {
        if self.counted {
            Ok(())
        } else {
            Err(Error::ContractViolation(format!(
                "{op} needs counters filled by a classify pass"
            )))
        }
    }

    /// Replaces every selected subtree by a leaf marked as pruned.
    pub fn apply_pruning(
        &self,
        selection: &PruningSelection,
        labeling: Labeling,
    ) -> Result<DecisionTree> {
        selection.validate(self)?;
        let mut out = Vec::with_capacity(self.nodes.len());
        self.emit_pruned(0, selection, labeling, &mut out)?;
        Ok(DecisionTree {
            nodes: out,
            counted: self.counted,
        })
    }

    fn emit_pruned(
        &self,
        id: NodeId,
        selection: &PruningSelection,
        labeling: Labeling,
        out: &mut Vec<Node>,
    ) -> Result<NodeId> {
        let node = &self.nodes[id];
        let new_id = out.len();
        if selection.contains(id) {
            let label = match labeling {
                Labeling::PruningMajority => node.majority_label(),
                Labeling::TrainingMajority => node.train_label.ok_or_else(|| {
                    Error::ContractViolation(format!("node {id} has no train_label"))
                })?,
            };
            out.push(Node {
                kind: NodeKind::Leaf {
                    label,
                    origin: Origin::Pruned,
                },
                ..node.clone()
            });
            return Ok(new_id);
        }
        out.push(node.clone());
        if let NodeKind::Internal { test, left, right } = node.kind {
            let new_left = self.emit_pruned(left, selection, labeling, out)?;
            let new_right = self.emit_pruned(right, selection, labeling, out)?;
            out[new_id].kind = NodeKind::Internal {
                test,
                left: new_left,
                right: new_right,
            };
        }
        Ok(new_id)
    }
}

fn shifted(mut node: Node, by: usize) -> Node {
    if let NodeKind::Internal { left, right, .. } = &mut node.kind {
        *left += by;
        *right += by;
    }
    node
}

/// Internal nodes to collapse into leaves. Valid selections are antichains.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PruningSelection(BTreeSet<NodeId>);

impl PruningSelection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: NodeId) -> bool {
        self.0.insert(id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn validate(&self, tree: &DecisionTree) -> Result<()> {
        for id in self.iter() {
            if id >= tree.len() {
                return Err(Error::InvalidSelection(format!("node {id} does not exist")));
            }
            if tree.node(id).is_leaf() {
                return Err(Error::InvalidSelection(format!("node {id} is a leaf")));
            }
        }
        // Sorted preorder ids: an ancestor always precedes its descendants.
        let mut open_end = 0;
        for id in self.iter() {
            if id < open_end {
                return Err(Error::InvalidSelection(format!(
                    "node {id} lies under another selected node"
                )));
            }
            open_end = tree.subtree_end(id);
        }
        Ok(())
    }
}

impl FromIterator<NodeId> for PruningSelection {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        PruningSelection(iter.into_iter().collect())
    }
}

impl Extend<NodeId> for PruningSelection {
    fn extend<I: IntoIterator<Item = NodeId>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(attrs: &[f64], label: u8) -> Example {
        Example::new(attrs.to_vec(), label).unwrap()
    }

    fn stump(threshold: f64) -> DecisionTree {
        DecisionTree::split(
            SplitTest::new(0, threshold),
            DecisionTree::leaf(0),
            DecisionTree::leaf(1),
        )
    }

    #[test]
    fn split_builds_preorder_layout() {
        let t = DecisionTree::split(SplitTest::new(0, 0.5), stump(0.25), DecisionTree::leaf(1));
        assert_eq!(t.len(), 5);
        assert_eq!(t.children(0), Some((1, 4)));
        assert_eq!(t.children(1), Some((2, 3)));
        assert_eq!(t.subtree(1), 1..4);
        assert_eq!(t.leaf_count(), 3);
        assert_eq!(t.len(), 2 * t.leaf_count() - 1);
        assert_eq!(t.postorder(), vec![2, 3, 1, 4, 0]);
        assert_eq!(t.internal_postorder(), vec![1, 0]);
        assert!(DecisionTree::from_nodes(t.nodes().to_vec(), false).is_ok());
    }

    #[test]
    fn route_examples() {
        let single = DecisionTree::leaf(1);
        assert_eq!(single.route(&ex(&[0.9], 0)).unwrap(), 0);

        let s = stump(0.5);
        assert_eq!(s.route(&ex(&[0.2], 0)).unwrap(), 1);
        assert_eq!(s.route(&ex(&[0.5], 0)).unwrap(), 2);

        // root: a0 < 0.5, left child: a0 < 0.25; 0.3 goes left then right.
        let t = DecisionTree::split(SplitTest::new(0, 0.5), stump(0.25), DecisionTree::leaf(1));
        assert_eq!(t.route(&ex(&[0.3], 0)).unwrap(), 3);

        let wide = DecisionTree::split(SplitTest::new(3, 0.5), DecisionTree::leaf(0), DecisionTree::leaf(1));
        assert!(matches!(wide.route(&ex(&[0.3], 0)), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn classify_pass_counts() {
        let mut t = DecisionTree::leaf(1);
        t.classify_pass(&Dataset::new(0)).unwrap();
        assert_eq!((t.root().total, t.root().pos), (0, 0));
        assert!(t.is_counted());

        let mut t = DecisionTree::leaf(1);
        let data = Dataset::from_examples(
            0,
            [1, 1, 1, 0, 0].iter().map(|&l| ex(&[], l)).collect(),
        )
        .unwrap();
        t.classify_pass(&data).unwrap();
        assert_eq!((t.root().total, t.root().pos), (5, 3));
        assert!(matches!(t.classify_pass(&data), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn leaf_and_subtree_errors() {
        let mut n = Node::leaf(1);
        (n.total, n.pos) = (10, 3);
        assert_eq!(n.leaf_error(), 3);
        (n.total, n.pos) = (0, 0);
        assert_eq!(n.leaf_error(), 0);
        (n.total, n.pos) = (8, 4);
        assert_eq!(n.leaf_error(), 4);
        assert_eq!(n.majority_label(), 0);

        let data = Dataset::from_examples(0, [1, 1, 1, 0, 0].iter().map(|&l| ex(&[], l)).collect()).unwrap();
        let t = DecisionTree::leaf(1).classified(&data).unwrap();
        assert_eq!(t.subtree_error(0), 2);

        let data = Dataset::from_examples(1, vec![ex(&[0.1], 0), ex(&[0.9], 1)]).unwrap();
        let t = stump(0.5).classified(&data).unwrap();
        assert_eq!(t.subtree_error(0), 0);
    }

    #[test]
    fn apply_pruning_labels_and_errors() {
        let t = stump(0.5);
        assert_eq!(t.apply_pruning(&PruningSelection::new(), Labeling::PruningMajority).unwrap(), t);

        let mut t = stump(0.5);
        (t.node_mut(0).total, t.node_mut(0).pos) = (10, 6);
        let p = t.apply_pruning(&[0].into_iter().collect(), Labeling::PruningMajority).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.root().kind, NodeKind::Leaf { label: 1, origin: Origin::Pruned });

        t.node_mut(0).pos = 5;
        let p = t.apply_pruning(&[0].into_iter().collect(), Labeling::PruningMajority).unwrap();
        assert_eq!(p.root().label(), Some(0));

        assert!(matches!(
            t.apply_pruning(&[1].into_iter().collect(), Labeling::PruningMajority),
            Err(Error::InvalidSelection(_))
        ));
        assert!(matches!(
            t.apply_pruning(&[0].into_iter().collect(), Labeling::TrainingMajority),
            Err(Error::ContractViolation(_))
        ));
        let t = t.with_train_label(1);
        let p = t.apply_pruning(&[0].into_iter().collect(), Labeling::TrainingMajority).unwrap();
        assert_eq!(p.root().label(), Some(1));
    }

    #[test]
    fn selection_must_be_antichain() {
        let t = DecisionTree::split(SplitTest::new(0, 0.5), stump(0.25), stump(0.75));
        let bad: PruningSelection = [0, 1].into_iter().collect();
        assert!(matches!(bad.validate(&t), Err(Error::InvalidSelection(_))));
        let good: PruningSelection = [1, 4].into_iter().collect();
        assert!(good.validate(&t).is_ok());
        let p = t.apply_pruning(&good, Labeling::PruningMajority).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.len(), 2 * p.leaf_count() - 1);
    }

    #[test]
    fn from_nodes_rejects_broken_layouts() {
        let t = stump(0.5);
        let mut nodes = t.nodes().to_vec();
        nodes.pop();
        assert!(DecisionTree::from_nodes(nodes, false).is_err());

        let mut nodes = t.nodes().to_vec();
        nodes[1].pos = 1;
        assert!(DecisionTree::from_nodes(nodes.clone(), false).is_err());
        nodes[1].total = 1;
        assert!(DecisionTree::from_nodes(nodes, true).is_err());
    }

    #[test]
    fn tie_labels_zero_but_error_matches_positive_label() {
        let mut n = Node::leaf(0);
        (n.total, n.pos) = (6, 3);
        assert_eq!(n.majority_label(), 0);
        assert_eq!(n.error_as(0), n.error_as(1));
        assert_eq!(n.error_as(n.majority_label()), n.leaf_error());
    }
}
