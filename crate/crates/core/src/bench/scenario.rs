//! Synthetic longitudinal cohorts with known discrete-time hazards.
//!
//! Each patient has a latent health score and linear covariate paths
//! `x_j(t) = b_j + s_j t`, measured with noise at Poisson visit times.
//! Events are drawn interval by interval from the scenario's hazard, which
//! depends on the true covariates at the interval start, the interval end
//! time and the latent health. The returned oracle keeps every patient's
//! true hazard path, so exact conditional survival is available for scoring.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::math::norm_cdf;
use crate::records::{Observation, PatientRecord};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum HazardModel {
    /// The same event probability in every interval.
    Constant { p: f64 },
    /// `Φ(intercept + Σ coefficients[j] x_j(t_{r-1}) + time_coefficient t_r
    ///  + health_coefficient health)`.
    Probit {
        intercept: f64,
        coefficients: Vec<f64>,
        time_coefficient: f64,
        health_coefficient: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum Missingness {
    /// Every measurement is dropped independently with probability `rate`.
    CompletelyRandom { rate: f64 },
    /// Measurements of `feature` are dropped with probability
    /// `Φ(strength (threshold - health))`; large `strength` makes the
    /// feature missing exactly when health is below `threshold`.
    Informative {
        feature: usize,
        threshold: f64,
        strength: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub n_patients: usize,
    pub n_features: usize,
    /// Study length in intervals; survivors are censored at the end.
    pub n_intervals: usize,
    pub interval_width: f64,
    pub baseline_sd: f64,
    pub drift_sd: f64,
    pub noise_sd: f64,
    /// Expected visits per unit time after the baseline visit at 0.
    pub visit_rate: f64,
    /// Per-interval dropout probability, applied from the second interval on.
    pub censoring_rate: f64,
    pub hazard: HazardModel,
    pub missingness: Missingness,
}

impl Scenario {
    /// Constant hazard `p`, three noise features, no dropout or missingness.
    pub fn constant(n_patients: usize, n_intervals: usize, p: f64) -> Self {
        Self {
            n_patients,
            n_features: 3,
            n_intervals,
            interval_width: 1.0,
            baseline_sd: 1.0,
            drift_sd: 0.2,
            noise_sd: 0.1,
            visit_rate: 1.0,
            censoring_rate: 0.0,
            hazard: HazardModel::Constant { p },
            missingness: Missingness::CompletelyRandom { rate: 0.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.into()));
        if self.n_patients == 0 || self.n_intervals == 0 {
            return bad("need at least one patient and one interval");
        }
        let finite_nonneg = [
            self.baseline_sd,
            self.drift_sd,
            self.noise_sd,
            self.visit_rate,
        ];
        if finite_nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("standard deviations and visit rate must be finite and >= 0");
        }
        if !(self.interval_width > 0.0 && self.interval_width.is_finite()) {
            return bad("interval width must be finite and > 0");
        }
        if !(0.0..=1.0).contains(&self.censoring_rate) {
            return bad("censoring rate must lie in [0, 1]");
        }
        match &self.hazard {
            HazardModel::Constant { p } if !(0.0..=1.0).contains(p) => {
                return Err(Error::InvalidScenario(format!("hazard {p} is outside [0, 1]")));
            }
            HazardModel::Probit {
                intercept,
                coefficients,
                time_coefficient,
                health_coefficient,
            } => {
                if coefficients.len() != self.n_features {
                    return bad("one hazard coefficient per feature is required");
                }
                let all = coefficients.iter().chain([intercept, time_coefficient, health_coefficient]);
                if all.into_iter().any(|c| !c.is_finite()) {
                    return bad("hazard coefficients must be finite");
                }
            }
            _ => {}
        }
        match self.missingness {
            Missingness::CompletelyRandom { rate } if !(0.0..=1.0).contains(&rate) => {
                bad("missingness rate must lie in [0, 1]")
            }
            Missingness::Informative { feature, .. } if feature >= self.n_features => {
                bad("informative missingness feature index out of range")
            }
            Missingness::Informative { threshold, strength, .. }
                if !(threshold.is_finite() && strength.is_finite() && strength >= 0.0) =>
            {
                bad("informative missingness parameters must be finite, strength >= 0")
            }
            _ => Ok(()),
        }
    }

    pub fn end_time(&self) -> f64 {
        self.n_intervals as f64 * self.interval_width
    }

    fn interval_end(&self, r: usize) -> f64 {
        r as f64 * self.interval_width
    }
}

/// Ground truth kept alongside a generated cohort.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioOracle {
    pub interval_width: f64,
    /// `hazards[i][r - 1]`: true event probability of patient `i` in interval `r`.
    pub hazards: Vec<Vec<f64>>,
    pub health: Vec<f64>,
}

impl ScenarioOracle {
    pub fn n_patients(&self) -> usize {
        self.hazards.len()
    }
}

/// Exact `P(T > t + window | T > t)` for patient `i`: the product of
/// `1 - hazard` over scenario intervals whose end lies in `(t, t + window]`.
pub fn true_survival(oracle: &ScenarioOracle, patient: usize, t: f64, window: f64) -> f64 {
    oracle.hazards[patient]
        .iter()
        .enumerate()
        .filter(|(r, _)| {
            let end = (r + 1) as f64 * oracle.interval_width;
            end > t && end <= t + window
        })
        .map(|(_, h)| 1.0 - h)
        .product()
}

struct PatientPath {
    baseline: Vec<f64>,
    drift: Vec<f64>,
    health: f64,
}

impl PatientPath {
    fn value(&self, j: usize, t: f64) -> f64 {
        self.baseline[j] + self.drift[j] * t
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Simulate a cohort and its oracle.
pub fn generate<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<(Vec<PatientRecord>, ScenarioOracle)> {
    scenario.validate()?;
    let d = scenario.n_features;
    let k = scenario.n_intervals;
    let visit_gap = (scenario.visit_rate > 0.0).then(|| Exp::new(scenario.visit_rate).unwrap());

    let mut records = Vec::with_capacity(scenario.n_patients);
    let mut oracle = ScenarioOracle {
        interval_width: scenario.interval_width,
        hazards: Vec::with_capacity(scenario.n_patients),
        health: Vec::with_capacity(scenario.n_patients),
    };
    for i in 0..scenario.n_patients {
        let path = PatientPath {
            baseline: (0..d).map(|_| scenario.baseline_sd * normal(rng)).collect(),
            drift: (0..d).map(|_| scenario.drift_sd * normal(rng)).collect(),
            health: normal(rng),
        };
        let hazards: Vec<f64> = (1..=k)
            .map(|r| match &scenario.hazard {
                HazardModel::Constant { p } => *p,
                HazardModel::Probit {
                    intercept,
                    coefficients,
                    time_coefficient,
                    health_coefficient,
                } => {
                    let start = scenario.interval_end(r - 1);
                    let eta = intercept
                        + coefficients
                            .iter()
                            .enumerate()
                            .map(|(j, c)| c * path.value(j, start))
                            .sum::<f64>()
                        + time_coefficient * scenario.interval_end(r)
                        + health_coefficient * path.health;
                    norm_cdf(eta)
                }
            })
            .collect();

        let mut exit = (scenario.end_time(), false);
        for (r, &h) in (1..=k).zip(&hazards) {
            if r > 1 && rng.random::<f64>() < scenario.censoring_rate {
                exit = (scenario.interval_end(r - 1), false);
                break;
            }
            if rng.random::<f64>() < h {
                exit = (scenario.interval_end(r), true);
                break;
            }
        }

        let mut visits = alloc::vec![0.0];
        if let Some(gap) = &visit_gap {
            let mut t = gap.sample(rng);
            while t < exit.0 {
                visits.push(t);
                t += gap.sample(rng);
            }
        }
        let observations = visits
            .into_iter()
            .map(|time| {
                let values = (0..d)
                    .map(|j| {
                        let missing = match scenario.missingness {
                            Missingness::CompletelyRandom { rate } => rng.random::<f64>() < rate,
                            Missingness::Informative {
                                feature,
                                threshold,
                                strength,
                            } => {
                                feature == j
                                    && rng.random::<f64>() < norm_cdf(strength * (threshold - path.health))
                            }
                        };
                        let measured = path.value(j, time) + scenario.noise_sd * normal(rng);
                        (!missing).then_some(measured)
                    })
                    .collect();
                Observation { time, values }
            })
            .collect();

        records.push(PatientRecord {
            id: format!("P{}", i + 1),
            observations,
            event_time: exit.0,
            event: exit.1,
            static_covariates: Vec::new(),
        });
        oracle.hazards.push(hazards);
        oracle.health.push(path.health);
    }
    Ok((records, oracle))
}
