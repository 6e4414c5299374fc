use alloc::vec::Vec;

use rand::Rng;

use super::design::Design;
use super::tree::{Axis, MissingDirection, SplitRule};
use crate::error::{Error, Result};

/// Which missing-value split rules the sampler may propose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MissingRules {
    /// Rules 1, 2 and 3, drawn uniformly among those that split the node.
    #[default]
    All,
    /// Only split on axes fully observed within the node.
    CompleteCase,
}

/// Relative selection weight of each split axis (features, then time).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitWeights(Vec<f64>);

impl SplitWeights {
    pub fn uniform(n_features: usize) -> Self {
        Self(alloc::vec![1.0; n_features + 1])
    }

    /// `weights` has one entry per feature followed by one for time.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig("split weights must be finite and >= 0".into()));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidConfig("at least one split weight must be positive".into()));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

struct AxisSummary {
    observed: usize,
    missing: usize,
    min: f64,
    max: f64,
}

fn summarize(design: &Design, axis: Axis, rows: &[usize]) -> AxisSummary {
    let mut s = AxisSummary {
        observed: 0,
        missing: 0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    for &i in rows {
        match design.value(axis, i) {
            Some(v) => {
                s.observed += 1;
                s.min = s.min.min(v);
                s.max = s.max.max(v);
            }
            None => s.missing += 1,
        }
    }
    s
}

/// Sorted distinct value ranks of the observed rows.
fn distinct_ranks(design: &Design, axis: Axis, rows: &[usize]) -> Vec<u32> {
    let n_distinct = design.n_distinct(axis);
    if rows.len() * 8 < n_distinct {
        let mut ranks: Vec<u32> = rows.iter().filter_map(|&i| design.rank(axis, i)).collect();
        ranks.sort_unstable();
        ranks.dedup();
        ranks
    } else {
        let mut seen = alloc::vec![false; n_distinct];
        for &i in rows {
            if let Some(r) = design.rank(axis, i) {
                seen[r as usize] = true;
            }
        }
        (0..n_distinct as u32).filter(|&r| seen[r as usize]).collect()
    }
}

/// Missing directions that produce two non-empty children on this axis.
fn valid_directions(s: &AxisSummary, mode: MissingRules) -> ([MissingDirection; 3], usize) {
    let mut dirs = [MissingDirection::MissingLeft; 3];
    let mut n = 0;
    let spread = s.observed >= 2 && s.min < s.max;
    match mode {
        MissingRules::CompleteCase => {
            if s.missing == 0 && spread {
                dirs[0] = MissingDirection::MissingLeft;
                dirs[1] = MissingDirection::MissingRight;
                n = 2;
            }
        }
        MissingRules::All => {
            if spread {
                dirs[n] = MissingDirection::MissingLeft;
                dirs[n + 1] = MissingDirection::MissingRight;
                n += 2;
            }
            if s.missing > 0 && s.observed > 0 {
                dirs[n] = MissingDirection::MissingOnly;
                n += 1;
            }
        }
    }
    (dirs, n)
}

/// Draw a split rule for the node holding `rows`.
///
/// The axis is drawn with probability proportional to its weight among axes
/// that can split the node; the missing direction uniformly among the rules
/// that split it; the threshold uniformly among the distinct observed values
/// except the largest, so neither child is empty. Returns `None` when no
/// axis can split the node.
pub fn sample_split_rule<R: Rng + ?Sized>(
    design: &Design,
    rows: &[usize],
    weights: &SplitWeights,
    mode: MissingRules,
    rng: &mut R,
) -> Option<SplitRule> {
    if rows.len() < 2 {
        return None;
    }
    debug_assert_eq!(weights.len(), design.n_axes());
    let mut candidates: Vec<(usize, f64)> = weights
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(a, w)| (a, *w))
        .collect();

    // Weighted draw without replacement until an axis can split: the first
    // valid axis is distributed proportionally to weight among valid axes.
    while !candidates.is_empty() {
        let total: f64 = candidates.iter().map(|c| c.1).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = candidates.len() - 1;
        for (k, c) in candidates.iter().enumerate() {
            if u < c.1 {
                pick = k;
                break;
            }
            u -= c.1;
        }
        let (axis_index, _) = candidates.swap_remove(pick);
        let axis = design.axis(axis_index);
        let summary = summarize(design, axis, rows);
        let (dirs, n_dirs) = valid_directions(&summary, mode);
        if n_dirs == 0 {
            continue;
        }
        let missing = dirs[rng.random_range(0..n_dirs)];
        if missing == MissingDirection::MissingOnly {
            if let Axis::Feature(j) = axis {
                return Some(SplitRule::missing_only(j));
            }
            unreachable!("time is always observed");
        }
        let mut ranks = distinct_ranks(design, axis, rows);
        ranks.pop();
        let threshold = design.value_at_rank(axis, ranks[rng.random_range(0..ranks.len())]);
        return Some(SplitRule::threshold(axis, threshold, missing));
    }
    None
}
