//! Posterior hazards, survival curves from a landmark, and credible bands.
//!
//! Hazards are only queried at the training grid's interval ends. A curve
//! from landmark `t` freezes the patient's covariates at `t` (last
//! observation carried forward) and multiplies per-interval survival
//! probabilities forward along the time axis. The interval containing the
//! landmark counts in full.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::forest::{evaluate_ensemble, Ensemble};
use crate::math::{mean, norm_cdf, quantile_sorted, sorted_copy};
use crate::mcmc::PosteriorDraws;
use crate::records::{locf_covariates, PatientRecord, TimeGrid};

/// Largest double below 1.
const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

/// Event probability Φ(f), kept strictly inside (0, 1).
#[inline]
pub fn probit_hazard(f: f64) -> f64 {
    norm_cdf(f).clamp(f64::MIN_POSITIVE, ONE_MINUS)
}

/// Per-draw event probability for one (covariates, time) query.
pub fn hazard(draws: &PosteriorDraws, covariates: &[Option<f64>], time: f64) -> Result<Vec<f64>> {
    draws
        .draws
        .iter()
        .map(|e| evaluate_ensemble(e, covariates, time).map(probit_hazard))
        .collect()
}

/// Intervals `(t_{r-1}, t_r]` that overlap `(from, to]`, clipped to the grid.
fn overlapping_intervals(grid: &TimeGrid, from: f64, to: f64) -> core::ops::RangeInclusive<usize> {
    let b = grid.boundaries();
    let first = b.partition_point(|&x| x <= from).max(1);
    let last = b.partition_point(|&x| x < to).min(grid.len());
    first..=last
}

/// Survival through the grid intervals `intervals` under one ensemble, with
/// covariates held fixed.
pub fn ensemble_survival(
    ensemble: &Ensemble,
    grid: &TimeGrid,
    covariates: &[Option<f64>],
    intervals: core::ops::RangeInclusive<usize>,
) -> Result<f64> {
    let mut s = 1.0;
    for r in intervals {
        // 1 - Φ(f) computed as Φ(-f) to keep tail precision.
        s *= norm_cdf(-evaluate_ensemble(ensemble, covariates, grid.interval_end(r))?);
    }
    Ok(s)
}

/// Per-draw `P(T > t + window | T > t)` with covariates frozen at `t`.
pub fn survival_probability(
    draws: &PosteriorDraws,
    record: &PatientRecord,
    t: f64,
    window: f64,
) -> Result<Vec<f64>> {
    if t > draws.grid.end() {
        return Err(Error::LandmarkBeyondGrid {
            landmark: t,
            grid_end: draws.grid.end(),
        });
    }
    let x = locf_covariates(record, t);
    let intervals = overlapping_intervals(&draws.grid, t, t + window);
    draws
        .draws
        .iter()
        .map(|e| ensemble_survival(e, &draws.grid, &x, intervals.clone()))
        .collect()
}

/// Posterior-mean `P(T > t + window | T > t)`.
pub fn mean_survival_probability(draws: &PosteriorDraws, record: &PatientRecord, t: f64, window: f64) -> Result<f64> {
    Ok(mean(&survival_probability(draws, record, t, window)?))
}

/// Pointwise credible band at a pair of quantile levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub lower_level: f64,
    pub upper_level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub patient_id: String,
    pub landmark: f64,
    /// The landmark followed by the grid interval ends after it.
    pub times: Vec<f64>,
    /// `per_draw[d][s]`: survival to `times[s]` under draw `d`.
    pub per_draw: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub bands: Vec<Band>,
}

impl SurvivalCurve {
    /// Samples across draws at horizon index `s`.
    pub fn samples_at(&self, s: usize) -> Vec<f64> {
        self.per_draw.iter().map(|d| d[s]).collect()
    }
}

/// Survival trajectory from `landmark` up to `horizon_end` (clipped to the
/// grid end), with credible bands at each `(lower, upper)` level pair.
pub fn survival_curve(
    draws: &PosteriorDraws,
    record: &PatientRecord,
    landmark: f64,
    horizon_end: f64,
    levels: &[(f64, f64)],
) -> Result<SurvivalCurve> {
    let grid = &draws.grid;
    if !(landmark >= 0.0) || landmark > grid.end() {
        return Err(Error::LandmarkBeyondGrid {
            landmark,
            grid_end: grid.end(),
        });
    }
    if !(horizon_end > landmark) {
        return Err(Error::InvalidConfig(format!(
            "horizon end {horizon_end} must exceed the landmark {landmark}"
        )));
    }
    if draws.draws.len() < 2 && !levels.is_empty() {
        return Err(Error::InvalidLevels("credible bands need at least two draws".into()));
    }
    for &(lo, hi) in levels {
        check_levels(lo, hi)?;
    }
    let x = locf_covariates(record, landmark);
    let intervals = overlapping_intervals(grid, landmark, horizon_end);
    let mut times = alloc::vec![landmark];
    times.extend(intervals.clone().map(|r| grid.interval_end(r)));

    let per_draw: Vec<Vec<f64>> = draws
        .draws
        .iter()
        .map(|e| {
            let mut s = 1.0;
            let mut row = Vec::with_capacity(times.len());
            row.push(1.0);
            for r in intervals.clone() {
                s *= norm_cdf(-evaluate_ensemble(e, &x, grid.interval_end(r))?);
                row.push(s);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let columns: Vec<Vec<f64>> = (0..times.len())
        .map(|s| sorted_copy(&per_draw.iter().map(|d| d[s]).collect::<Vec<_>>()))
        .collect();
    let mean_curve = columns.iter().map(|c| mean(c)).collect();
    let bands = levels
        .iter()
        .map(|&(lo, hi)| Band {
            lower_level: lo,
            upper_level: hi,
            lower: columns.iter().map(|c| quantile_sorted(c, lo)).collect(),
            upper: columns.iter().map(|c| quantile_sorted(c, hi)).collect(),
        })
        .collect();
    Ok(SurvivalCurve {
        patient_id: record.id.clone(),
        landmark,
        times,
        per_draw,
        mean: mean_curve,
        bands,
    })
}

fn check_levels(lower: f64, upper: f64) -> Result<()> {
    let inside = |p: f64| p > 0.0 && p < 1.0;
    if !(inside(lower) && inside(upper)) {
        return Err(Error::InvalidLevels(format!("levels ({lower}, {upper}) must lie in (0, 1)")));
    }
    if !(lower < upper) {
        return Err(Error::InvalidLevels(format!("levels ({lower}, {upper}) must be increasing")));
    }
    Ok(())
}

/// Empirical `(lower, upper)` quantiles of `samples`, linearly interpolated
/// between order statistics.
pub fn credible_band(samples: &[f64], lower: f64, upper: f64) -> Result<(f64, f64)> {
    check_levels(lower, upper)?;
    if samples.len() < 2 {
        return Err(Error::InvalidLevels("credible bands need at least two samples".into()));
    }
    let sorted = sorted_copy(samples);
    Ok((quantile_sorted(&sorted, lower), quantile_sorted(&sorted, upper)))
}
