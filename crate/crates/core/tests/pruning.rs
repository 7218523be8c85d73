use proptest::prelude::*;
use replab::experiments::random_instance;
use replab::generators::{leaf_biased_set, random_tree, safe_node_tree, noise_pruning_set, NoiseModel, Routing, TreeShape};
use replab::oracle::{optimal_pruning, DEFAULT_LEAF_CAP};
use replab::prune::{trace_assert_theorem2, Action};
use replab::rng::trial_rng;
use replab::structure::{corollary3_holds, correspondence, safe_nodes, theorem4_predicate};
use replab::{iterative_prune, rep_prune, rep_prune_train_labeled, tree_json, Dataset, DecisionTree, Labeling};

fn instance(seed: u64) -> DecisionTree {
    random_instance(10, 50, &mut trial_rng(seed, 99, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn sweep_matches_oracle_under_both_labelings(seed in any::<u64>()) {
        let t = instance(seed);
        let rep = rep_prune(&t).unwrap();
        let best = optimal_pruning(&t, Labeling::PruningMajority, DEFAULT_LEAF_CAP).unwrap();
        prop_assert_eq!((rep.error, rep.tree.len()), (best.best_error, best.best_size));

        let train = rep_prune_train_labeled(&t).unwrap();
        let best = optimal_pruning(&t, Labeling::TrainingMajority, DEFAULT_LEAF_CAP).unwrap();
        prop_assert_eq!((train.error, train.tree.len()), (best.best_error, best.best_size));
    }

    #[test]
    fn sweep_output_is_a_consistent_pruning(seed in any::<u64>()) {
        let t = instance(seed);
        let out = rep_prune(&t).unwrap();
        prop_assert!(correspondence(&t, &out.tree).is_ok());
        prop_assert_eq!(out.error, out.tree.subtree_error(0));
        prop_assert!(out.error <= t.subtree_error(0));
        // Running the sweep again changes nothing.
        let again = rep_prune(&out.tree).unwrap();
        prop_assert_eq!(&again.tree, &out.tree);
        prop_assert!(again.trace.records.iter().all(|r| r.action == Action::Keep));
    }

    #[test]
    fn trace_is_postorder_and_satisfies_retention(seed in any::<u64>()) {
        let t = instance(seed);
        let out = rep_prune(&t).unwrap();
        prop_assert_eq!(out.trace.records.iter().map(|r| r.node).collect::<Vec<_>>(), t.internal_postorder());
        for r in &out.trace.records {
            prop_assert_eq!(r.r_l, t.leaf_error(r.node));
            prop_assert_eq!(r.action == Action::Keep, r.r_t < r.r_l);
        }
        prop_assert!(trace_assert_theorem2(&out.trace, &t).unwrap());
        prop_assert!(corollary3_holds(&out.trace, &t).unwrap());
    }

    #[test]
    fn iterative_never_beats_the_oracle(seed in any::<u64>()) {
        let t = instance(seed);
        let it = iterative_prune(&t).unwrap();
        let best = optimal_pruning(&t, Labeling::PruningMajority, DEFAULT_LEAF_CAP).unwrap();
        prop_assert!(it.error >= best.best_error);
        prop_assert_eq!(it.error, it.tree.subtree_error(0));
        prop_assert!(correspondence(&t, &it.tree).is_ok());
    }

    #[test]
    fn counters_add_up(seed in any::<u64>(), internal in 0usize..40, n in 0usize..200) {
        let rng = &mut trial_rng(seed, 5, 0);
        let tree = random_tree(internal, TreeShape::Uniform, rng);
        let data = leaf_biased_set(&tree, n, 0.8, rng).unwrap();
        let t = tree.classified(&data).unwrap();
        prop_assert_eq!(t.root().total as usize, n);
        prop_assert_eq!(t.root().pos as usize, data.positives());
        for id in 0..t.len() {
            if let Some((l, r)) = t.children(id) {
                prop_assert_eq!(t.node(id).total, t.node(l).total + t.node(r).total);
                prop_assert_eq!(t.node(id).pos, t.node(l).pos + t.node(r).pos);
            }
        }
        prop_assert_eq!(t.subtree_error(0), t.misclassified(&data).unwrap());
    }

    #[test]
    fn json_and_csv_round_trip(seed in any::<u64>()) {
        let rng = &mut trial_rng(seed, 6, 0);
        let tree = random_tree(rng.gen_range(0..20), TreeShape::RandomBst, rng);
        let data = leaf_biased_set(&tree, 30, 0.7, rng).unwrap();
        let back = Dataset::read_csv(data.to_csv_string().as_bytes()).unwrap();
        prop_assert_eq!(&back, &data);
        let counted = tree.clone().classified(&data).unwrap();
        for t in [&tree, &counted] {
            let parsed = tree_json::from_str(&tree_json::to_string(t)).unwrap();
            prop_assert_eq!(&parsed, t);
        }
    }

    #[test]
    fn collapse_predicate_matches_sweep(seed in any::<u64>(), k in 1usize..9, pi in 0usize..3, n in 1usize..80) {
        let p = [0.55, 0.6, 0.75][pi];
        let rng = &mut trial_rng(seed, 7, 0);
        let tree = safe_node_tree(k, 2, rng).unwrap();
        let data = noise_pruning_set(&tree, &NoiseModel::new(p, Routing::Direct).unwrap(), n, rng).unwrap();
        let t = tree.classified(&data).unwrap();
        let out = rep_prune(&t).unwrap();
        let verdict = theorem4_predicate(&t, &out.tree, &safe_nodes(&t).unwrap()).unwrap();
        prop_assert_eq!(verdict.collapses, out.tree.is_single_leaf());
    }
}

use rand::Rng;

#[test]
fn single_leaf_instances_agree_trivially() {
    let data = Dataset::from_examples(0, vec![]).unwrap();
    let t = DecisionTree::leaf(1).classified(&data).unwrap();
    let rep = rep_prune(&t).unwrap();
    assert!(rep.trace.records.is_empty());
    assert_eq!(rep.tree, t);
    let best = optimal_pruning(&t, Labeling::PruningMajority, DEFAULT_LEAF_CAP).unwrap();
    assert_eq!((best.best_error, best.best_size), (0, 1));
}

#[test]
fn uncounted_trees_are_rejected() {
    let t = random_tree(3, TreeShape::Balanced, &mut trial_rng(1, 1, 1));
    assert!(rep_prune(&t).is_err());
    assert!(iterative_prune(&t).is_err());
    assert!(optimal_pruning(&t, Labeling::PruningMajority, DEFAULT_LEAF_CAP).is_err());
}
