use rand::Rng;

use super::tree::Tree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Grow,
    Prune,
    Change,
}

/// A proposed structural move and its target node. The split rule for
/// Grow and Change is drawn by the sampler from the node's rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Grow { leaf: usize },
    Prune { node: usize },
    Change { node: usize },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::Grow { .. } => MoveKind::Grow,
            Move::Prune { .. } => MoveKind::Prune,
            Move::Change { .. } => MoveKind::Change,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MoveProbabilities {
    pub grow: f64,
    pub prune: f64,
    pub change: f64,
}

impl Default for MoveProbabilities {
    fn default() -> Self {
        Self {
            grow: 0.25,
            prune: 0.25,
            change: 0.5,
        }
    }
}

impl MoveProbabilities {
    pub fn validate(&self) -> Result<()> {
        let all = [self.grow, self.prune, self.change];
        if all.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || self.grow <= 0.0 {
            return Err(Error::InvalidConfig("move probabilities must be >= 0 with grow > 0".into()));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("move probabilities must sum to 1".into()));
        }
        Ok(())
    }

    /// Probability of choosing `kind` on `tree`. A single leaf always grows.
    pub fn of(&self, kind: MoveKind, tree: &Tree) -> f64 {
        if tree.nodes().len() == 1 {
            return if kind == MoveKind::Grow { 1.0 } else { 0.0 };
        }
        match kind {
            MoveKind::Grow => self.grow,
            MoveKind::Prune => self.prune,
            MoveKind::Change => self.change,
        }
    }
}

fn uniform_pick<R: Rng + ?Sized>(mut it: impl Iterator<Item = usize>, n: usize, rng: &mut R) -> usize {
    it.nth(rng.random_range(0..n)).unwrap()
}

/// Draw a move type and target: Grow picks a uniform leaf, Prune and Change
/// a uniform split whose children are both leaves.
pub fn propose_move<R: Rng + ?Sized>(tree: &Tree, probs: &MoveProbabilities, rng: &mut R) -> Move {
    let n_prunable = tree.n_prunable();
    let u = rng.random::<f64>();
    let kind = if n_prunable == 0 || u < probs.grow {
        MoveKind::Grow
    } else if u < probs.grow + probs.prune {
        MoveKind::Prune
    } else {
        MoveKind::Change
    };
    match kind {
        MoveKind::Grow => Move::Grow {
            leaf: uniform_pick(tree.leaves(), tree.n_leaves(), rng),
        },
        MoveKind::Prune => Move::Prune {
            node: uniform_pick(tree.prunable_nodes(), n_prunable, rng),
        },
        MoveKind::Change => Move::Change {
            node: uniform_pick(tree.prunable_nodes(), n_prunable, rng),
        },
    }
}
