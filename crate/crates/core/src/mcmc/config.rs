use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::forest::{Ensemble, MissingRules, MoveProbabilities, SplitWeights, TreePrior};
use crate::records::TimeGrid;

/// Everything that determines a fit besides the data.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitConfig {
    pub n_trees: usize,
    pub n_burn: usize,
    pub n_keep: usize,
    /// Iterations per retained draw after burn-in.
    pub thin: usize,
    pub prior: TreePrior,
    pub seed: u64,
    pub grid_bins: usize,
    pub moves: MoveProbabilities,
    pub missing_rules: MissingRules,
    /// One weight per feature followed by one for time; uniform when absent.
    pub split_weights: Option<Vec<f64>>,
    /// Leaves at this depth are never split.
    pub max_depth: Option<usize>,
    /// Verify sampler caches against fresh evaluation after every tree update.
    pub check_cache: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self::with_trees(50)
    }
}

impl FitConfig {
    /// Defaults (250 burn-in, 1000 kept draws, 20 grid bins, seed 0) with
    /// `m` trees and the matching leaf prior scale.
    pub fn with_trees(m: usize) -> Self {
        Self {
            n_trees: m,
            n_burn: 250,
            n_keep: 1000,
            thin: 1,
            prior: TreePrior::default_for(m),
            seed: 0,
            grid_bins: 20,
            moves: MoveProbabilities::default(),
            missing_rules: MissingRules::All,
            split_weights: None,
            max_depth: None,
            check_cache: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidConfig("need at least one tree".into()));
        }
        if self.n_keep < 1 {
            return Err(Error::InvalidConfig("need at least one retained draw".into()));
        }
        if self.thin < 1 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if self.grid_bins < 1 {
            return Err(Error::InvalidConfig("grid bins must be at least 1".into()));
        }
        self.prior.validate()?;
        self.moves.validate()
    }

    pub fn split_weights_for(&self, n_features: usize) -> Result<SplitWeights> {
        match &self.split_weights {
            None => Ok(SplitWeights::uniform(n_features)),
            Some(w) if w.len() == n_features + 1 => SplitWeights::new(w.clone()),
            Some(w) => Err(Error::InvalidConfig(format!(
                "{} split weights given, expected {} (features + time)",
                w.len(),
                n_features + 1
            ))),
        }
    }
}

/// Acceptance bookkeeping for one fit.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitDiagnostics {
    pub n_rows: usize,
    pub n_events: usize,
    pub proposed: [u64; 3],
    pub accepted: [u64; 3],
    pub warnings: Vec<String>,
}

impl FitDiagnostics {
    /// Acceptance rate per move kind (grow, prune, change).
    pub fn acceptance_rates(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for k in 0..3 {
            if self.proposed[k] > 0 {
                out[k] = self.accepted[k] as f64 / self.proposed[k] as f64;
            }
        }
        out
    }
}

/// Retained posterior ensembles with the context needed to predict from them.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub draws: Vec<Ensemble>,
    pub config: FitConfig,
    pub grid: TimeGrid,
    pub feature_names: Vec<String>,
    pub diagnostics: FitDiagnostics,
}

impl PosteriorDraws {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Fraction of retained trees that split on each feature at least once
    /// (features first, time last).
    pub fn split_frequencies(&self) -> Vec<f64> {
        let d = self.n_features();
        let mut counts = alloc::vec![0usize; d + 1];
        let mut total = 0usize;
        let mut seen = alloc::vec![false; d + 1];
        for e in &self.draws {
            for t in &e.trees {
                total += 1;
                seen.iter_mut().for_each(|s| *s = false);
                for r in t.rules() {
                    let idx = match r.axis {
                        crate::forest::Axis::Feature(j) => j,
                        crate::forest::Axis::Time => d,
                    };
                    seen[idx] = true;
                }
                for (c, s) in counts.iter_mut().zip(&seen) {
                    *c += usize::from(*s);
                }
            }
        }
        counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
    }
}
