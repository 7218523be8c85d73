//! Reduced error pruning laboratory.
//!
//! The crate is organised around a binary decision-tree model with per-node
//! pruning counters ([`tree`]), the bottom-up pruning sweep and its rival
//! variants ([`prune`]), a brute-force optimal-pruning oracle ([`oracle`]),
//! structural predicates on fringe and safe nodes ([`structure`]), closed-form
//! pruning-probability bounds ([`bounds`]), seeded data generators
//! ([`generators`]) and Monte Carlo campaigns tying the bounds to simulation
//! ([`experiments`]).

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod normal;
pub mod oracle;
pub mod prune;
pub mod rng;
pub mod stats;
pub mod structure;
pub mod tree;
pub mod tree_json;

pub use dataset::{Dataset, Example};
pub use error::{Error, Result};
pub use prune::{iterative_prune, rep_prune, rep_prune_train_labeled, PruneOutcome, PruneTrace};
pub use tree::{DecisionTree, Labeling, NodeId, PruningSelection, SplitTest};
