//! Binary regression trees over (covariates, time).
//!
//! Splits may route missing values: rule 1 sends them left with the small
//! values, rule 2 sends them right with the large values, rule 3 splits on
//! missingness alone. Trees are immutable values; MCMC moves build new trees.

mod design;
mod moves;
mod prior;
mod split;
mod tree;

pub use design::Design;
pub use moves::{propose_move, Move, MoveKind, MoveProbabilities};
pub use prior::{grow_log_prior_delta, log_tree_prior, TreePrior};
pub use split::{sample_split_rule, MissingRules, SplitWeights};
pub use tree::{evaluate_ensemble, route, Axis, Ensemble, MissingDirection, Node, NodeKind, SplitRule, Tree};
