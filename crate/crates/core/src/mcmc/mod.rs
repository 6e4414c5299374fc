//! Backfitting MCMC with probit data augmentation.
//!
//! Each sweep draws a truncated-normal latent per person-period row given
//! the current fit, then updates the trees one at a time: a Grow, Prune or
//! Change proposal is accepted by Metropolis-Hastings on the integrated leaf
//! likelihood of the partial residual, and all leaf values of the tree are
//! redrawn from their conjugate normal posteriors. Noise variance is fixed
//! at 1 on the probit scale.

mod config;
mod hastings;
mod latent;
mod leaf;
mod sampler;

pub use config::{FitConfig, FitDiagnostics, PosteriorDraws};
pub use hastings::{grow_log_ratio, prune_log_ratio};
pub use latent::{sample_latent, sample_truncated_below};
pub use leaf::{leaf_log_marginal, sample_leaf_value, LeafStats};
pub use sampler::{fit, fit_seeded, rng_for, SamplerSettings, SamplerState, TrainingData};
