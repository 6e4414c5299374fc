//! Structural terms of the Metropolis-Hastings log acceptance ratio.
//!
//! Grow at leaf η of T (leaf count b) to T* (prunable count w*):
//!   log P(prune | T*) - log P(grow | T) + log b - log w*  + Δ log prior.
//! Prune is the exact reverse. Split-rule draw probabilities cancel against
//! the rule prior, and Change is symmetric, so neither appears here.

use crate::forest::{grow_log_prior_delta, MoveKind, MoveProbabilities, Tree, TreePrior};

/// Structural log ratio for growing `leaf` of `tree` into `grown`.
pub fn grow_log_ratio(
    tree: &Tree,
    leaf: usize,
    grown: &Tree,
    moves: &MoveProbabilities,
    prior: &TreePrior,
) -> f64 {
    let depth = tree.node(leaf).depth;
    grow_log_prior_delta(depth, prior)
        + libm::log(moves.of(MoveKind::Prune, grown))
        - libm::log(moves.of(MoveKind::Grow, tree))
        + libm::log(tree.n_leaves() as f64)
        - libm::log(grown.n_prunable() as f64)
}

/// Structural log ratio for pruning `node` of `tree` into `pruned`.
pub fn prune_log_ratio(
    tree: &Tree,
    node: usize,
    pruned: &Tree,
    moves: &MoveProbabilities,
    prior: &TreePrior,
) -> f64 {
    let depth = tree.node(node).depth;
    -grow_log_prior_delta(depth, prior)
        + libm::log(moves.of(MoveKind::Grow, pruned))
        - libm::log(moves.of(MoveKind::Prune, tree))
        + libm::log(tree.n_prunable() as f64)
        - libm::log(pruned.n_leaves() as f64)
}
