use crate::error::{Error, Result};

/// A landmark time and prediction window, both in years.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalSpec {
    pub landmark: f64,
    pub window: f64,
}

impl EvalSpec {
    pub fn new(landmark: f64, window: f64) -> Result<Self> {
        if !(landmark >= 0.0 && landmark.is_finite()) {
            return Err(Error::InvalidConfig("landmark must be finite and >= 0".into()));
        }
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::InvalidConfig("window must be finite and > 0".into()));
        }
        Ok(Self { landmark, window })
    }

    pub fn horizon(&self) -> f64 {
        self.landmark + self.window
    }
}

/// Observed exit time and event flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub time: f64,
    pub event: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CIndexResult {
    pub estimate: f64,
    /// Concordant pairs plus half the tied pairs.
    pub concordant: f64,
    pub comparable_pairs: usize,
    /// True when no pair was comparable; `estimate` is then 0.5.
    pub no_comparable_pairs: bool,
}

/// Truncated time-dependent concordance of predicted conditional survival.
///
/// Only patients with `time > landmark` take part. A pair is comparable when
/// the earlier exit `j` is an event within `landmark + window` and the other
/// patient outlived it; it is concordant when `predicted[j] < predicted[i]`
/// and counts one half on an exact tie.
pub fn c_index(predicted: &[f64], outcomes: &[Outcome], spec: &EvalSpec) -> Result<CIndexResult> {
    if predicted.len() != outcomes.len() {
        return Err(Error::DimensionMismatch {
            expected: outcomes.len(),
            got: predicted.len(),
        });
    }
    if let Some((index, &value)) = predicted
        .iter()
        .enumerate()
        .find(|(_, p)| !(**p >= 0.0 && **p <= 1.0))
    {
        return Err(Error::PredictionOutOfRange { index, value });
    }
    let at_risk: alloc::vec::Vec<usize> = (0..outcomes.len())
        .filter(|&i| outcomes[i].time > spec.landmark)
        .collect();
    let horizon = spec.horizon();
    let mut pairs = 0usize;
    let mut concordant = 0.0;
    for &j in &at_risk {
        let oj = outcomes[j];
        if !oj.event || oj.time > horizon {
            continue;
        }
        for &i in &at_risk {
            if outcomes[i].time > oj.time {
                pairs += 1;
                if predicted[j] < predicted[i] {
                    concordant += 1.0;
                } else if predicted[j] == predicted[i] {
                    concordant += 0.5;
                }
            }
        }
    }
    Ok(if pairs == 0 {
        CIndexResult {
            estimate: 0.5,
            concordant: 0.0,
            comparable_pairs: 0,
            no_comparable_pairs: true,
        }
    } else {
        CIndexResult {
            estimate: concordant / pairs as f64,
            concordant,
            comparable_pairs: pairs,
            no_comparable_pairs: false,
        }
    })
}
