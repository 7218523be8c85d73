//! Seeded generators for trees, noise pruning sets, single-attribute samples,
//! balls-in-bins allocations and the fixed variant-divergence instance.
//!
//! Every generator draws from a caller-supplied [`Rng`]; the `gen_*` wrappers
//! take a plain seed and derive the generator with [`crate::rng`].

use std::collections::HashSet;

use rand::distributions::{Bernoulli, Distribution};
use rand::Rng;
use serde::Serialize;

use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};
use crate::rng;
use crate::structure::safe_node_ids;
use crate::tree::{DecisionTree, Node, NodeId, NodeKind, SplitTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Routing {
    /// Attributes uniform on `[0, 1)`; the tree's tests decide the leaf.
    AttributeUniform,
    /// Each example picks a safe node uniformly, then a fair coin at every
    /// node below it; attributes are synthesised to match the path.
    Direct,
}

/// Class labels are Bernoulli(`p`), independent of the attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    pub p: f64,
    pub routing: Routing,
}

impl NoiseModel {
    pub fn new(p: f64, routing: Routing) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("NoiseModel", format!("p must lie in [0, 1], got {p}")));
        }
        Ok(NoiseModel { p, routing })
    }
}

/// Attributes a tree reads: one past the largest tested index.
pub fn tree_arity(tree: &DecisionTree) -> usize {
    tree.nodes()
        .iter()
        .filter_map(|n| match n.kind {
            NodeKind::Internal { test, .. } => Some(test.attr + 1),
            NodeKind::Leaf { .. } => None,
        })
        .max()
        .unwrap_or(0)
}

pub fn noise_pruning_set<R: Rng>(
    tree: &DecisionTree,
    model: &NoiseModel,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::domain("gen_noise_pruning_set", "n must be at least 1"));
    }
    let model = NoiseModel::new(model.p, model.routing)?;
    let arity = tree_arity(tree);
    let labels = Bernoulli::new(model.p).expect("p validated");
    let safe = match model.routing {
        Routing::Direct => safe_node_ids(tree),
        Routing::AttributeUniform => Vec::new(),
    };
    let mut data = Dataset::with_capacity(arity, n);
    for _ in 0..n {
        let attributes = if safe.is_empty() {
            (0..arity).map(|_| rng.gen::<f64>()).collect()
        } else {
            let start = safe[rng.gen_range(0..safe.len())];
            synthesise_path(tree, start, arity, rng)?
        };
        let label = u8::from(labels.sample(rng));
        data.push(Example { attributes, label })?;
    }
    Ok(data)
}

/// Attributes for an example that reaches `start` and then follows fair
/// coins down to a leaf. Untested attributes are uniform on `[0, 1)`.
fn synthesise_path<R: Rng>(
    tree: &DecisionTree,
    start: NodeId,
    arity: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut bounds = vec![(0.0f64, 1.0f64); arity];
    let mut restrict = |test: SplitTest, left: bool| {
        let b = &mut bounds[test.attr];
        if left {
            b.1 = b.1.min(test.threshold);
        } else {
            b.0 = b.0.max(test.threshold);
        }
    };

    // Path from the root to `start` is forced.
    let mut id = 0;
    while id != start {
        let NodeKind::Internal { test, left, right } = tree.node(id).kind else {
            unreachable!("start lies below an internal node");
        };
        let go_left = start < right;
        restrict(test, go_left);
        id = if go_left { left } else { right };
    }
    while let NodeKind::Internal { test, left, right } = tree.node(id).kind {
        let go_left = rng.gen_bool(0.5);
        restrict(test, go_left);
        id = if go_left { left } else { right };
    }

    bounds
        .into_iter()
        .enumerate()
        .map(|(attr, (lo, hi))| {
            if lo < hi {
                Ok(rng.gen_range(lo..hi))
            } else {
                Err(Error::ContractViolation(format!(
                    "no value of attribute {attr} reaches leaf {id}"
                )))
            }
        })
        .collect()
}

pub fn gen_noise_pruning_set(
    tree: &DecisionTree,
    model: &NoiseModel,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    noise_pruning_set(tree, model, n, &mut rng::single_rng(seed, rng::tag("noise")))
}

/// Pruning set whose labels agree with the reached leaf with probability
/// `fidelity` and are flipped otherwise. Gives a mix of kept and pruned
/// subtrees, unlike pure noise.
pub fn leaf_biased_set<R: Rng>(
    tree: &DecisionTree,
    n: usize,
    fidelity: f64,
    rng: &mut R,
) -> Result<Dataset> {
    let arity = tree_arity(tree);
    let mut data = Dataset::with_capacity(arity, n);
    for _ in 0..n {
        let attributes: Vec<f64> = (0..arity).map(|_| rng.gen()).collect();
        let example = Example { attributes, label: 0 };
        let leaf_label = tree.predict(&example)?;
        let label = if rng.gen_bool(fidelity) { leaf_label } else { 1 - leaf_label };
        data.push(Example { label, ..example })?;
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeShape {
    /// Uniform over full binary trees with the given number of internal nodes.
    Uniform,
    /// Random binary-search-tree shape: shallower on average than uniform.
    RandomBst,
    /// As balanced as the node count allows.
    Balanced,
}

/// Preorder shape: `true` marks an internal node.
type Shape = Vec<bool>;

fn remy_shape<R: Rng>(internal: usize, rng: &mut R) -> Shape {
    // Pointer form: children[i] is Some((l, r)) for internal nodes.
    let mut children: Vec<Option<(usize, usize)>> = vec![None];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut root = 0;
    for _ in 0..internal {
        let x = rng.gen_range(0..children.len());
        let y = children.len();
        let z = y + 1;
        let pair = if rng.gen_bool(0.5) { (x, z) } else { (z, x) };
        children.push(Some(pair));
        children.push(None);
        parent.push(parent[x]);
        parent.push(Some(y));
        match parent[x] {
            None => root = y,
            Some(p) => {
                let (l, r) = children[p].as_mut().expect("parent is internal");
                if *l == x {
                    *l = y;
                } else {
                    *r = y;
                }
            }
        }
        parent[x] = Some(y);
    }
    let mut shape = Vec::with_capacity(children.len());
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        match children[id] {
            Some((l, r)) => {
                shape.push(true);
                stack.push(r);
                stack.push(l);
            }
            None => shape.push(false),
        }
    }
    shape
}

fn split_shape<R: Rng>(internal: usize, balanced: bool, rng: &mut R, out: &mut Shape) {
    if internal == 0 {
        out.push(false);
        return;
    }
    out.push(true);
    let rest = internal - 1;
    let left = if balanced {
        rest / 2 + usize::from(rest % 2 == 1 && rng.gen_bool(0.5))
    } else {
        rng.gen_range(0..=rest)
    };
    split_shape(left, balanced, rng, out);
    split_shape(rest - left, balanced, rng, out);
}

fn random_shape<R: Rng>(internal: usize, shape: TreeShape, rng: &mut R) -> Shape {
    match shape {
        TreeShape::Uniform => remy_shape(internal, rng),
        TreeShape::RandomBst | TreeShape::Balanced => {
            let mut out = Vec::with_capacity(2 * internal + 1);
            split_shape(internal, shape == TreeShape::Balanced, rng, &mut out);
            out
        }
    }
}

/// Materialises a preorder shape. The `j`-th internal node in preorder tests
/// attribute `j` at 0.5; leaf and training labels are fair coins.
fn shape_to_tree<R: Rng>(shape: &[bool], rng: &mut R) -> DecisionTree {
    let mut nodes: Vec<Node> = Vec::with_capacity(shape.len());
    let mut attr = 0;
    // Internal nodes waiting for their right child id.
    let mut open: Vec<NodeId> = Vec::new();
    for (id, &internal) in shape.iter().enumerate() {
        if internal {
            nodes.push(Node {
                kind: NodeKind::Internal {
                    test: SplitTest::new(attr, 0.5),
                    left: id + 1,
                    right: usize::MAX,
                },
                total: 0,
                pos: 0,
                train_label: Some(rng.gen_range(0..=1)),
            });
            attr += 1;
            open.push(id);
        } else {
            nodes.push(Node::leaf(rng.gen_range(0..=1)));
            // A finished subtree closes the left side of the innermost node
            // still missing its right child.
            let mut end = id + 1;
            while let Some(&top) = open.last() {
                let NodeKind::Internal { right, .. } = &mut nodes[top].kind else {
                    unreachable!()
                };
                if *right == usize::MAX {
                    *right = end;
                    break;
                }
                open.pop();
                end = nodes.len();
            }
        }
    }
    // Remaining open nodes already have both children.
    DecisionTree::from_nodes(nodes, false).expect("generated shape is a valid tree")
}

pub fn random_tree<R: Rng>(internal_count: usize, shape: TreeShape, rng: &mut R) -> DecisionTree {
    shape_to_tree(&random_shape(internal_count, shape, rng), rng)
}

pub fn gen_random_tree(internal_count: usize, shape: TreeShape, seed: u64) -> DecisionTree {
    random_tree(internal_count, shape, &mut rng::single_rng(seed, rng::tag("tree")))
}

/// A tree with exactly `k` safe nodes. A uniform skeleton with `k` leaves is
/// drawn and each skeleton leaf becomes a safe node: one child is a leaf, the
/// other a random subtree with at most `max_extra` internal nodes.
pub fn safe_node_tree<R: Rng>(k: usize, max_extra: usize, rng: &mut R) -> Result<DecisionTree> {
    if k == 0 {
        return Err(Error::domain("safe_node_tree", "k must be at least 1"));
    }
    let skeleton = remy_shape(k - 1, rng);
    let mut shape = Vec::new();
    for internal in skeleton {
        if internal {
            shape.push(true);
            continue;
        }
        let sub = remy_shape(rng.gen_range(0..=max_extra), rng);
        shape.push(true);
        if rng.gen_bool(0.5) {
            shape.push(false);
            shape.extend(sub);
        } else {
            shape.extend(sub);
            shape.push(false);
        }
    }
    Ok(shape_to_tree(&shape, rng))
}

/// `t` examples with one attribute uniform on `[0, 1)` and Bernoulli(`p`)
/// labels. Repeated attribute values are redrawn.
pub fn theorem6_sample<R: Rng>(t: usize, p: f64, rng: &mut R) -> Result<Dataset> {
    if t == 0 {
        return Err(Error::domain("gen_theorem6_sample", "t must be at least 1"));
    }
    let labels = Bernoulli::new(p)
        .map_err(|_| Error::domain("gen_theorem6_sample", format!("p must lie in [0, 1], got {p}")))?;
    let mut seen = HashSet::with_capacity(t);
    let mut data = Dataset::with_capacity(1, t);
    while data.len() < t {
        let x: f64 = rng.gen();
        if !seen.insert(x.to_bits()) {
            continue;
        }
        let label = u8::from(labels.sample(rng));
        data.push(Example { attributes: vec![x], label })?;
    }
    Ok(data)
}

pub fn gen_theorem6_sample(t: usize, p: f64, seed: u64) -> Result<Dataset> {
    theorem6_sample(t, p, &mut rng::single_rng(seed, rng::tag("theorem6")))
}

/// Number of adjacent label changes once the sample is sorted by its single
/// attribute.
pub fn class_alternations(sample: &Dataset) -> Result<usize> {
    Ok(runs(sample)?.len() - 1)
}

struct Run {
    label: u8,
    first_x: f64,
    last_x: f64,
    count: usize,
}

fn runs(sample: &Dataset) -> Result<Vec<Run>> {
    if sample.arity() != 1 {
        return Err(Error::SchemaMismatch(format!(
            "expected one attribute, got {}",
            sample.arity()
        )));
    }
    if sample.is_empty() {
        return Err(Error::ContractViolation("sample is empty".into()));
    }
    let mut sorted: Vec<(f64, u8)> = sample.iter().map(|e| (e.attributes[0], e.label)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::ContractViolation(format!("duplicate attribute value {}", w[0].0)));
    }
    let mut out: Vec<Run> = Vec::new();
    for (x, label) in sorted {
        match out.last_mut() {
            Some(run) if run.label == label => {
                run.last_x = x;
                run.count += 1;
            }
            _ => out.push(Run { label, first_x: x, last_x: x, count: 1 }),
        }
    }
    Ok(out)
}

/// Zero-training-error threshold tree with one leaf per maximal same-class
/// run of the sorted sample, i.e. `A + 1` leaves. Thresholds sit halfway
/// between neighbouring runs; the tree is balanced over the runs and internal
/// nodes carry the training majority of their range (ties to 0).
pub fn minimal_consistent_threshold_tree(sample: &Dataset) -> Result<DecisionTree> {
    let runs = runs(sample)?;
    Ok(build_over_runs(&runs))
}

fn build_over_runs(runs: &[Run]) -> DecisionTree {
    if runs.len() == 1 {
        return DecisionTree::leaf(runs[0].label);
    }
    let mid = runs.len() / 2;
    let threshold = 0.5 * (runs[mid - 1].last_x + runs[mid].first_x);
    let pos: usize = runs.iter().filter(|r| r.label == 1).map(|r| r.count).sum();
    let total: usize = runs.iter().map(|r| r.count).sum();
    DecisionTree::split(
        SplitTest::new(0, threshold),
        build_over_runs(&runs[..mid]),
        build_over_runs(&runs[mid..]),
    )
    .with_train_label(u8::from(2 * pos > total))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinsOutcome {
    pub counts: Vec<u64>,
    /// Empty bins.
    pub empty: u64,
    /// Bins holding at most the small-bin threshold (empty bins included).
    pub small: u64,
}

/// Throws `m` balls uniformly into `h` bins. `small_threshold` is the
/// `c·n/k` cut-off for the small-bin count.
pub fn balls_in_bins<R: Rng>(m: u64, h: usize, small_threshold: f64, rng: &mut R) -> Result<BinsOutcome> {
    if h == 0 {
        return Err(Error::domain("balls_in_bins", "h must be at least 1"));
    }
    let mut counts = vec![0u64; h];
    for _ in 0..m {
        counts[rng.gen_range(0..h)] += 1;
    }
    let empty = counts.iter().filter(|&&c| c == 0).count() as u64;
    let small = counts.iter().filter(|&&c| c as f64 <= small_threshold).count() as u64;
    Ok(BinsOutcome { counts, empty, small })
}

pub fn gen_balls_in_bins(m: u64, h: usize, small_threshold: f64, seed: u64) -> Result<BinsOutcome> {
    balls_in_bins(m, h, small_threshold, &mut rng::single_rng(seed, rng::tag("bins")))
}

/// Pruning-set counters `(negatives, positives)` of the four leaves of the
/// divergence instance, left to right.
///
/// Constraints, with the root and left child trained negative and the right
/// child trained positive, and leaves labeled 1, 0, 1, 0:
/// - the unpruned tree errs on 0 + 1 + 2 + 0 = 3 examples;
/// - a negative leaf at the root errs on the 2 positives;
/// - a negative leaf at the left child would err on 2 against the
///   subtree's 1, so that subtree is kept by the train-labeled sweep;
/// - a positive leaf at the right child would err on 3 against the
///   subtree's 2, so that subtree is also kept;
/// - with pruning-majority labels both children collapse to leaves with
///   no errors, and the root (0 against 2) survives.
///
/// A search over counters with up to 3 examples per leaf finds no instance
/// with fewer than these 5 examples.
pub const FIGURE1_LEAF_COUNTS: [(u64, u64); 4] = [(0, 1), (0, 1), (2, 0), (1, 0)];
pub const FIGURE1_LEAF_LABELS: [u8; 4] = [1, 0, 1, 0];
/// Training labels of the root, left child and right child.
pub const FIGURE1_TRAIN_LABELS: [u8; 3] = [0, 0, 1];

/// The divergence instance: its tree (counters unset) and the pruning set
/// realising [`FIGURE1_LEAF_COUNTS`]. The root tests attribute 0, the left
/// child attribute 1 and the right child attribute 2, all at 0.5.
pub fn gen_figure1_instance() -> (DecisionTree, Dataset) {
    let [lab_ll, lab_lr, lab_rl, lab_rr] = FIGURE1_LEAF_LABELS;
    let [tr_root, tr_left, tr_right] = FIGURE1_TRAIN_LABELS;
    let left = DecisionTree::split(
        SplitTest::new(1, 0.5),
        DecisionTree::leaf(lab_ll),
        DecisionTree::leaf(lab_lr),
    )
    .with_train_label(tr_left);
    let right = DecisionTree::split(
        SplitTest::new(2, 0.5),
        DecisionTree::leaf(lab_rl),
        DecisionTree::leaf(lab_rr),
    )
    .with_train_label(tr_right);
    let tree = DecisionTree::split(SplitTest::new(0, 0.5), left, right).with_train_label(tr_root);

    // Representative attribute vectors for each leaf.
    let reach = [
        [0.25, 0.25, 0.5],
        [0.25, 0.75, 0.5],
        [0.75, 0.5, 0.25],
        [0.75, 0.5, 0.75],
    ];
    let mut data = Dataset::new(3);
    for (attrs, &(neg, pos)) in reach.iter().zip(&FIGURE1_LEAF_COUNTS) {
        for label in std::iter::repeat_n(0, neg as usize).chain(std::iter::repeat_n(1, pos as usize)) {
            data.push(Example { attributes: attrs.to_vec(), label })
                .expect("arity matches");
        }
    }
    (tree, data)
}
