use super::tree::Tree;
use crate::error::{Error, Result};

/// Branching-process prior on tree shape plus a normal prior on leaf values.
///
/// A node at depth `q` splits with probability `alpha * (1 + q)^(-beta)`;
/// leaf values are `Normal(0, sigma_mu^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TreePrior {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_mu: f64,
}

impl TreePrior {
    pub fn new(alpha: f64, beta: f64, sigma_mu: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            sigma_mu,
        };
        p.validate()?;
        Ok(p)
    }

    /// alpha = 0.95, beta = 2, sigma_mu = 3 / (2 sqrt(m)): the sum of m leaf
    /// values has prior standard deviation 1.5 on the probit scale.
    pub fn default_for(m: usize) -> Self {
        Self {
            alpha: 0.95,
            beta: 2.0,
            sigma_mu: 3.0 / (2.0 * libm::sqrt(m.max(1) as f64)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig("beta must be finite and >= 0".into()));
        }
        if !(self.sigma_mu > 0.0 && self.sigma_mu.is_finite()) {
            return Err(Error::InvalidConfig("sigma_mu must be finite and > 0".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn split_probability(&self, depth: usize) -> f64 {
        self.alpha * libm::pow(1.0 + depth as f64, -self.beta)
    }

    #[inline]
    pub fn log_split(&self, depth: usize) -> f64 {
        libm::log(self.split_probability(depth))
    }

    #[inline]
    pub fn log_no_split(&self, depth: usize) -> f64 {
        libm::log1p(-self.split_probability(depth))
    }
}

/// Log prior probability of the tree's shape.
///
/// Split-rule choice is not included here: the rule prior is the same
/// distribution the proposal draws from, so it cancels in every MH ratio.
pub fn log_tree_prior(tree: &Tree, prior: &TreePrior) -> f64 {
    tree.nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            if tree.is_leaf(i) {
                prior.log_no_split(n.depth)
            } else {
                prior.log_split(n.depth)
            }
        })
        .sum()
}

/// Change in `log_tree_prior` when a leaf at `depth` is split into two leaves.
pub fn grow_log_prior_delta(depth: usize, prior: &TreePrior) -> f64 {
    prior.log_split(depth) + 2.0 * prior.log_no_split(depth + 1) - prior.log_no_split(depth)
}
