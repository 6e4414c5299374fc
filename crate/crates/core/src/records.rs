//! Longitudinal patient records and their person-period expansion.
//!
//! A patient is a set of irregularly timed, partially observed measurements
//! plus an exit time and an event flag. Training works on a global grid of
//! time intervals: every patient contributes one binary row per interval
//! they were at risk in, with covariates carried forward to the interval
//! start.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One visit: a time in years and the values measured at it (`None` = not measured).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    pub time: f64,
    pub values: Vec<Option<f64>>,
}

/// A patient's full history.
///
/// `event_time` holds the event time when `event` is true and the censoring
/// time otherwise.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PatientRecord {
    pub id: String,
    pub observations: Vec<Observation>,
    pub event_time: f64,
    pub event: bool,
    pub static_covariates: Vec<Option<f64>>,
}

impl PatientRecord {
    pub fn n_longitudinal(&self) -> usize {
        self.observations.first().map_or(0, |o| o.values.len())
    }

    /// Total feature count: longitudinal features followed by static ones.
    pub fn n_features(&self) -> usize {
        self.n_longitudinal() + self.static_covariates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidRecord {
            patient: self.id.clone(),
            reason,
        };
        if self.observations.is_empty() {
            return Err(fail("no observations".into()));
        }
        if !(self.event_time.is_finite() && self.event_time > 0.0) {
            return Err(fail(format!(
                "event time {} must be finite and positive",
                self.event_time
            )));
        }
        let d = self.n_longitudinal();
        let mut prev = f64::NEG_INFINITY;
        for obs in &self.observations {
            if !(obs.time.is_finite() && obs.time >= 0.0) {
                return Err(fail(format!("observation time {} is invalid", obs.time)));
            }
            if obs.time <= prev {
                return Err(fail("observation times are not strictly increasing".into()));
            }
            if obs.time > self.event_time {
                return Err(fail(format!(
                    "observation at {} is after event time {}",
                    obs.time, self.event_time
                )));
            }
            if obs.values.len() != d {
                return Err(fail("observations have differing feature counts".into()));
            }
            if obs.values.iter().flatten().any(|v| !v.is_finite()) {
                return Err(fail("non-finite covariate value".into()));
            }
            prev = obs.time;
        }
        if self.static_covariates.iter().flatten().any(|v| !v.is_finite()) {
            return Err(fail("non-finite static covariate".into()));
        }
        Ok(())
    }

    /// Copy of the record that only knows what was measured up to `time`.
    /// Observations after `time` are dropped; outcome fields are kept.
    pub fn truncated_at(&self, time: f64) -> PatientRecord {
        let mut out = self.clone();
        out.observations.retain(|o| o.time <= time);
        out
    }
}

/// Per-feature last observation carried forward to `at_time`.
///
/// Returns the longitudinal features followed by the static covariates;
/// a `None` entry means the feature was never observed by `at_time`.
pub fn locf_covariates(record: &PatientRecord, at_time: f64) -> Vec<Option<f64>> {
    let mut current: Vec<Option<f64>> = alloc::vec![None; record.n_longitudinal()];
    for obs in record.observations.iter().take_while(|o| o.time <= at_time) {
        for (slot, value) in current.iter_mut().zip(&obs.values) {
            if value.is_some() {
                *slot = *value;
            }
        }
    }
    current.extend_from_slice(&record.static_covariates);
    current
}

/// Interval boundaries `0 = t_0 < t_1 < ... < t_K`.
///
/// Interval `r` (1-based) is the half-open range `(t_{r-1}, t_r]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeGrid {
    boundaries: Vec<f64>,
}

impl TimeGrid {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidGrid("need at least two boundaries".into()));
        }
        if boundaries[0] != 0.0 {
            return Err(Error::InvalidGrid("first boundary must be 0".into()));
        }
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidGrid("non-finite boundary".into()));
        }
        if boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "boundaries must be strictly increasing".into(),
            ));
        }
        Ok(Self { boundaries })
    }

    /// Equal-width grid of `k` intervals over `(0, end]`.
    pub fn uniform(end: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidGrid("K must be at least 1".into()));
        }
        let mut b: Vec<f64> = (0..=k).map(|i| end * i as f64 / k as f64).collect();
        b[k] = end;
        Self::new(b)
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Number of intervals K.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end(&self) -> f64 {
        self.boundaries[self.len()]
    }

    /// End time of interval `r` (1-based).
    pub fn interval_end(&self, r: usize) -> f64 {
        self.boundaries[r]
    }

    pub fn interval_start(&self, r: usize) -> f64 {
        self.boundaries[r - 1]
    }

    /// The 1-based interval containing `time`, or `None` when `time <= 0`
    /// or `time` is past the grid end.
    pub fn interval_of(&self, time: f64) -> Option<usize> {
        if !(time > 0.0) || time > self.end() {
            return None;
        }
        // First boundary >= time.
        Some(self.boundaries.partition_point(|&b| b < time))
    }
}

/// Grid whose boundaries are the empirical quantiles at `1/K, ..., K/K` of
/// the pooled event/censoring times, with 0 prepended and duplicates removed.
///
/// Quantiles use the inverse empirical CDF (smallest time with ECDF ≥ level),
/// so every boundary is an observed exit time and the last one is the maximum.
pub fn build_time_grid(records: &[PatientRecord], k: usize) -> Result<TimeGrid> {
    if k < 1 {
        return Err(Error::InvalidGrid("K must be at least 1".into()));
    }
    if records.is_empty() {
        return Err(Error::Empty("no records to build a grid from".into()));
    }
    let mut times: Vec<f64> = records.iter().map(|r| r.event_time).collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let mut boundaries = alloc::vec![0.0];
    for j in 1..=k {
        let idx = (j * n).div_ceil(k) - 1;
        let t = times[idx];
        if t > *boundaries.last().unwrap() {
            boundaries.push(t);
        }
    }
    TimeGrid::new(boundaries)
}

/// One (patient, interval) row of the discrete-time training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonPeriodRow {
    /// Index into the table's patient list.
    pub patient: usize,
    /// 1-based interval index.
    pub interval: usize,
    pub interval_end: f64,
    /// Covariates carried forward to the interval start.
    pub covariates: Vec<Option<f64>>,
    pub missing_mask: Vec<bool>,
    /// Event in this interval.
    pub outcome: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonPeriodTable {
    pub rows: Vec<PersonPeriodRow>,
    pub grid: TimeGrid,
    pub feature_names: Vec<String>,
    pub patient_ids: Vec<String>,
}

impl PersonPeriodTable {
    pub fn n_patients(&self) -> usize {
        self.patient_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_events(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome).count()
    }
}

/// Number of person-period rows a patient contributes on `grid`.
///
/// Events count the interval they fall in; censored patients count only the
/// intervals they fully survived (a censoring time equal to an interval end
/// counts that interval). `None` if the exit time is off the grid.
pub fn rows_for(record: &PatientRecord, grid: &TimeGrid) -> Option<usize> {
    let r = grid.interval_of(record.event_time)?;
    if record.event || record.event_time == grid.interval_end(r) {
        Some(r)
    } else {
        Some(r - 1)
    }
}

/// Expand records into the person-period table.
///
/// Feature names default to `x1..xd` when `feature_names` is `None`.
pub fn expand_person_period(
    records: &[PatientRecord],
    grid: &TimeGrid,
    feature_names: Option<&[String]>,
) -> Result<PersonPeriodTable> {
    let d = records.first().map_or(0, PatientRecord::n_features);
    let names: Vec<String> = match feature_names {
        Some(names) => {
            if names.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: names.len(),
                    got: d,
                });
            }
            names.to_vec()
        }
        None => (1..=d).map(|j| format!("x{j}")).collect(),
    };

    let mut rows = Vec::new();
    let mut patient_ids = Vec::with_capacity(records.len());
    for (p, record) in records.iter().enumerate() {
        record.validate()?;
        if record.n_features() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: record.n_features(),
            });
        }
        let n_rows = rows_for(record, grid).ok_or_else(|| Error::InvalidGrid(format!(
            "exit time {} of patient {} is outside the grid (0, {}]",
            record.event_time,
            record.id,
            grid.end()
        )))?;
        patient_ids.push(record.id.clone());
        for r in 1..=n_rows {
            let covariates = locf_covariates(record, grid.interval_start(r));
            let missing_mask = covariates.iter().map(Option::is_none).collect();
            rows.push(PersonPeriodRow {
                patient: p,
                interval: r,
                interval_end: grid.interval_end(r),
                covariates,
                missing_mask,
                outcome: record.event && r == n_rows,
            });
        }
    }
    Ok(PersonPeriodTable {
        rows,
        grid: grid.clone(),
        feature_names: names,
        patient_ids,
    })
}

/// Landmark training set: patients still at risk at `time`, with their
/// measurements truncated to what was known at `time`.
pub fn landmark_subset(records: &[PatientRecord], time: f64) -> Vec<PatientRecord> {
    records
        .iter()
        .filter(|r| r.event_time > time)
        .map(|r| r.truncated_at(time))
        .collect()
}

/// Default feature names for generated or anonymous data.
pub fn default_feature_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn obs(time: f64, values: &[Option<f64>]) -> Observation {
        Observation {
            time,
            values: values.to_vec(),
        }
    }

    fn patient(id: &str, event_time: f64, event: bool, observations: Vec<Observation>) -> PatientRecord {
        PatientRecord {
            id: id.into(),
            observations,
            event_time,
            event,
            static_covariates: vec![],
        }
    }

    fn simple(id: &str, event_time: f64, event: bool) -> PatientRecord {
        patient(id, event_time, event, vec![obs(0.0, &[Some(1.0)])])
    }

    #[test]
    fn grid_median_split() {
        let recs: Vec<_> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&t| simple("a", t, true))
            .collect();
        let g = build_time_grid(&recs, 2).unwrap();
        assert_eq!(g.boundaries(), &[0.0, 2.0, 4.0]);
        let g1 = build_time_grid(&recs, 1).unwrap();
        assert_eq!(g1.boundaries(), &[0.0, 4.0]);
    }

    #[test]
    fn grid_deduplicates_when_k_exceeds_distinct_times() {
        let recs: Vec<_> = [1.0, 1.0, 2.0, 2.0]
            .iter()
            .map(|&t| simple("a", t, true))
            .collect();
        let g = build_time_grid(&recs, 10).unwrap();
        assert_eq!(g.boundaries(), &[0.0, 1.0, 2.0]);
        assert_eq!(g.len(), 2);

        let same: Vec<_> = (0..5).map(|_| simple("a", 3.0, false)).collect();
        assert_eq!(build_time_grid(&same, 4).unwrap().boundaries(), &[0.0, 3.0]);
    }

    #[test]
    fn grid_errors() {
        assert!(build_time_grid(&[simple("a", 1.0, true)], 0).is_err());
        assert!(build_time_grid(&[], 3).is_err());
        assert!(TimeGrid::new(vec![0.0, 2.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.5, 2.0]).is_err());
    }

    #[test]
    fn interval_lookup_is_right_closed() {
        let g = TimeGrid::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.interval_of(0.5), Some(1));
        assert_eq!(g.interval_of(1.0), Some(1));
        assert_eq!(g.interval_of(1.0001), Some(2));
        assert_eq!(g.interval_of(3.0), Some(3));
        assert_eq!(g.interval_of(3.1), None);
        assert_eq!(g.interval_of(0.0), None);
    }

    #[test]
    fn expansion_event_and_censoring() {
        let g = TimeGrid::uniform(5.0, 5).unwrap();
        let ev = simple("e", 2.5, true);
        let cen = simple("c", 2.5, false);
        let cen_on_edge = simple("b", 3.0, false);
        let t = expand_person_period(&[ev, cen, cen_on_edge], &g, None).unwrap();
        let w = |p: usize| -> Vec<bool> { t.rows.iter().filter(|r| r.patient == p).map(|r| r.outcome).collect() };
        assert_eq!(w(0), vec![false, false, true]);
        assert_eq!(w(1), vec![false, false]);
        assert_eq!(w(2), vec![false, false, false]);
        assert_eq!(t.n_events(), 1);
        assert_eq!(t.feature_names, vec!["x1".to_string()]);
    }

    #[test]
    fn expansion_rejects_exit_beyond_grid() {
        let g = TimeGrid::uniform(2.0, 2).unwrap();
        assert!(expand_person_period(&[simple("a", 3.0, true)], &g, None).is_err());
    }

    #[test]
    fn locf_carries_each_feature_forward() {
        let r = patient(
            "a",
            5.0,
            true,
            vec![
                obs(1.0, &[Some(2.0), Some(10.0)]),
                obs(3.0, &[Some(5.0), None]),
            ],
        );
        assert_eq!(locf_covariates(&r, 2.0), vec![Some(2.0), Some(10.0)]);
        assert_eq!(locf_covariates(&r, 0.5), vec![None, None]);
        assert_eq!(locf_covariates(&r, 4.0), vec![Some(5.0), Some(10.0)]);
    }

    #[test]
    fn locf_appends_static_covariates() {
        let mut r = patient("a", 5.0, true, vec![obs(1.0, &[Some(2.0)])]);
        r.static_covariates = vec![Some(60.0), None];
        assert_eq!(locf_covariates(&r, 0.0), vec![None, Some(60.0), None]);
    }

    #[test]
    fn row_covariates_use_interval_start() {
        let g = TimeGrid::uniform(3.0, 3).unwrap();
        let r = patient(
            "a",
            3.0,
            true,
            vec![obs(0.0, &[None]), obs(0.5, &[Some(1.0)]), obs(1.0, &[Some(2.0)])],
        );
        let t = expand_person_period(&[r], &g, None).unwrap();
        let vals: Vec<_> = t.rows.iter().map(|r| r.covariates[0]).collect();
        assert_eq!(vals, vec![None, Some(2.0), Some(2.0)]);
        assert_eq!(t.rows[0].missing_mask, vec![true]);
    }

    #[test]
    fn validation_errors() {
        let mut r = patient("z", 1.0, true, vec![obs(2.0, &[Some(1.0)])]);
        assert!(r.validate().is_err());
        r.observations = vec![obs(0.5, &[Some(1.0)]), obs(0.5, &[Some(1.0)])];
        assert!(r.validate().is_err());
        r.observations = vec![];
        assert!(r.validate().is_err());
    }

    #[test]
    fn landmark_subset_drops_exited_and_future() {
        let a = patient("a", 1.5, true, vec![obs(0.0, &[Some(1.0)])]);
        let b = patient("b", 5.0, false, vec![obs(0.0, &[Some(1.0)]), obs(3.0, &[Some(2.0)])]);
        let s = landmark_subset(&[a, b], 2.0);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].id, "b");
        assert_eq!(s[0].observations.len(), 1);
    }
}
