use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::cindex::{c_index, CIndexResult, EvalSpec, Outcome};
use crate::error::{Error, Result};
use crate::math::{median, sample_std};
use crate::mcmc::{fit, rng_for, FitConfig, PosteriorDraws};
use crate::predict::mean_survival_probability;
use crate::records::{build_time_grid, expand_person_period, landmark_subset, PatientRecord};

/// Patient-level fold labels: a seeded shuffle dealt round-robin, so fold
/// sizes differ by at most one.
pub fn assign_folds(n_patients: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidConfig("cross-validation needs at least 2 folds".into()));
    }
    if folds > n_patients {
        return Err(Error::InvalidConfig("more folds than patients".into()));
    }
    let mut order: Vec<usize> = (0..n_patients).collect();
    order.shuffle(&mut rng_for(seed, u64::MAX));
    let mut labels = alloc::vec![0; n_patients];
    for (pos, &p) in order.iter().enumerate() {
        labels[p] = pos % folds;
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    /// Fit a separate model per landmark on patients still at risk there,
    /// with measurements truncated at the landmark.
    pub refit_per_landmark: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            refit_per_landmark: false,
        }
    }
}

/// Score of one (spec, fold); `None` when the fold had no usable pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldScore {
    pub spec: EvalSpec,
    pub fold: usize,
    pub result: Option<CIndexResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub spec: EvalSpec,
    pub median: Option<f64>,
    pub std: Option<f64>,
    pub n_folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub scores: Vec<FoldScore>,
    pub summaries: Vec<CvSummary>,
}

fn fit_records(records: &[PatientRecord], config: &FitConfig, stream: u64) -> Result<PosteriorDraws> {
    let grid = build_time_grid(records, config.grid_bins)?;
    let table = expand_person_period(records, &grid, None)?;
    fit(&table, config, &mut rng_for(config.seed, stream))
}

/// Posterior-mean conditional survival for the test patients at risk at the
/// spec's landmark, scored by `c_index`.
pub fn score_draws(draws: &PosteriorDraws, test: &[PatientRecord], spec: &EvalSpec) -> Result<Option<CIndexResult>> {
    if spec.landmark > draws.grid.end() {
        return Ok(None);
    }
    let at_risk: Vec<&PatientRecord> = test.iter().filter(|r| r.event_time > spec.landmark).collect();
    if at_risk.is_empty() {
        return Ok(None);
    }
    let predicted = at_risk
        .iter()
        .map(|r| mean_survival_probability(draws, r, spec.landmark, spec.window))
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<Outcome> = at_risk
        .iter()
        .map(|r| Outcome {
            time: r.event_time,
            event: r.event,
        })
        .collect();
    let result = c_index(&predicted, &outcomes, spec)?;
    Ok((!result.no_comparable_pairs).then_some(result))
}

/// Train on every fold but `fold`, score on `fold`. Each fit uses its own
/// RNG stream, so folds can run in any order or in parallel.
pub fn evaluate_fold(
    records: &[PatientRecord],
    labels: &[usize],
    fold: usize,
    config: &FitConfig,
    specs: &[EvalSpec],
    refit_per_landmark: bool,
) -> Result<Vec<FoldScore>> {
    let (train, test): (Vec<_>, Vec<_>) = records
        .iter()
        .zip(labels)
        .partition(|(_, &l)| l != fold);
    let train: Vec<PatientRecord> = train.into_iter().map(|(r, _)| r.clone()).collect();
    let test: Vec<PatientRecord> = test.into_iter().map(|(r, _)| r.clone()).collect();
    let base_stream = 1 + fold as u64 * (specs.len() as u64 + 1);

    let shared = if refit_per_landmark {
        None
    } else {
        Some(fit_records(&train, config, base_stream)?)
    };
    specs
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            let result = match &shared {
                Some(draws) => score_draws(draws, &test, spec)?,
                None => {
                    let subset = landmark_subset(&train, spec.landmark);
                    if subset.is_empty() {
                        None
                    } else {
                        let draws = fit_records(&subset, config, base_stream + 1 + s as u64)?;
                        score_draws(&draws, &test, spec)?
                    }
                }
            };
            Ok(FoldScore {
                spec: *spec,
                fold,
                result,
            })
        })
        .collect()
}

/// Median and sample standard deviation across folds, per spec.
pub fn summarize(specs: &[EvalSpec], scores: &[FoldScore]) -> Vec<CvSummary> {
    specs
        .iter()
        .map(|spec| {
            let values: Vec<f64> = scores
                .iter()
                .filter(|s| s.spec == *spec)
                .filter_map(|s| s.result.map(|r| r.estimate))
                .collect();
            CvSummary {
                spec: *spec,
                median: (!values.is_empty()).then(|| median(&values)),
                std: (!values.is_empty()).then(|| sample_std(&values)),
                n_folds: values.len(),
            }
        })
        .collect()
}

/// K-fold cross-validated C-index, folds run sequentially.
pub fn cross_validate(
    records: &[PatientRecord],
    config: &FitConfig,
    specs: &[EvalSpec],
    options: &CvOptions,
) -> Result<CvReport> {
    let labels = assign_folds(records.len(), options.folds, options.seed)?;
    let mut scores = Vec::new();
    for fold in 0..options.folds {
        scores.extend(evaluate_fold(records, &labels, fold, config, specs, options.refit_per_landmark)?);
    }
    let summaries = summarize(specs, &scores);
    Ok(CvReport { scores, summaries })
}
