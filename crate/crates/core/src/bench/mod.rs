//! Evaluation: time-dependent concordance, cross-validation, and a
//! synthetic cohort generator with exact survival for ground truth.

mod cindex;
mod cv;
mod scenario;

pub use cindex::{c_index, CIndexResult, EvalSpec, Outcome};
pub use cv::{assign_folds, cross_validate, evaluate_fold, score_draws, summarize, CvOptions, CvReport, CvSummary, FoldScore};
pub use scenario::{generate, true_survival, HazardModel, Missingness, Scenario, ScenarioOracle};
