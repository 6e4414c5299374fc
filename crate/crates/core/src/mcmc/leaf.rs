use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::math::LN_2PI;

/// Sufficient statistics of the residuals in one leaf.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeafStats {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl LeafStats {
    pub fn from_residuals(residuals: &[f64]) -> Self {
        let mut s = Self::default();
        for &r in residuals {
            s.push(r);
        }
        s
    }

    #[inline]
    pub fn push(&mut self, r: f64) {
        self.n += 1;
        self.sum += r;
        self.sum_sq += r * r;
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            n: self.n + other.n,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    /// Log of the leaf likelihood with the leaf value integrated out:
    /// residuals are `Normal(mu, 1)` and `mu ~ Normal(0, sigma_mu^2)`.
    pub fn log_marginal(&self, sigma_mu: f64) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        let s2 = sigma_mu * sigma_mu;
        let shrink = 1.0 + n * s2;
        -0.5 * n * LN_2PI
            - 0.5 * libm::log(shrink)
            - 0.5 * (self.sum_sq - s2 * self.sum * self.sum / shrink)
    }

    /// Conjugate posterior `(mean, variance)` of the leaf value.
    pub fn posterior(&self, sigma_mu: f64) -> (f64, f64) {
        let precision = self.n as f64 + 1.0 / (sigma_mu * sigma_mu);
        (self.sum / precision, 1.0 / precision)
    }

    pub fn sample_value<R: Rng + ?Sized>(&self, sigma_mu: f64, rng: &mut R) -> f64 {
        let (mean, var) = self.posterior(sigma_mu);
        let z: f64 = StandardNormal.sample(rng);
        mean + libm::sqrt(var) * z
    }
}

/// Integrated leaf log-likelihood of `residuals`; 0 for an empty leaf.
pub fn leaf_log_marginal(residuals: &[f64], sigma_mu: f64) -> f64 {
    LeafStats::from_residuals(residuals).log_marginal(sigma_mu)
}

/// Gibbs draw of a leaf value given its residuals; an empty leaf draws from
/// the prior.
pub fn sample_leaf_value<R: Rng + ?Sized>(residuals: &[f64], sigma_mu: f64, rng: &mut R) -> f64 {
    LeafStats::from_residuals(residuals).sample_value(sigma_mu, rng)
}
