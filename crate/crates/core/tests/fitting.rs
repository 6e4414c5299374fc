//! Statistical checks of the sampler and generator against independent
//! oracles. Tolerances are three Monte Carlo standard errors unless noted.

use rand::Rng;
use treesurv_core::bench::{generate, true_survival, HazardModel, Scenario};
use treesurv_core::forest::{Axis, Design};
use treesurv_core::math::{mean, norm_cdf};
use treesurv_core::mcmc::{
    fit_seeded, leaf_log_marginal, rng_for, sample_latent, sample_leaf_value, FitConfig, SamplerSettings, SamplerState,
    TrainingData,
};
use treesurv_core::records::{expand_person_period, TimeGrid};

#[test]
fn leaf_marginal_matches_trapezoid_quadrature() {
    let r = [0.1, -0.3, 0.7, 0.0, 0.2];
    let sigma: f64 = 0.3;
    // Integrand on a wide, fine grid; the Gaussian tails make the trapezoid
    // rule converge fast.
    let log_f = |mu: f64| {
        let lik: f64 = r.iter().map(|x| -0.5 * (x - mu) * (x - mu)).sum::<f64>() - 2.5 * (2.0 * std::f64::consts::PI).ln();
        lik - 0.5 * (mu / sigma).powi(2) - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
    };
    let (lo, hi, n) = (-3.0, 3.0, 60_000);
    let h = (hi - lo) / n as f64;
    let integral: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * log_f(lo + i as f64 * h).exp()
        })
        .sum::<f64>()
        * h;
    let ours = leaf_log_marginal(&r, sigma).exp();
    assert!((ours / integral - 1.0).abs() < 1e-8, "{ours} vs {integral}");
}

#[test]
fn far_tail_latent_mean_matches_formula() {
    let mut rng = rng_for(12, 0);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| sample_latent(true, -6.0, &mut rng)).collect();
    assert!(xs.iter().all(|x| x.is_finite() && *x > 0.0));
    let phi6 = (-18.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let lambda = phi6 / norm_cdf(-6.0);
    let want = lambda - 6.0;
    // Z = -6 + X with X ~ N(0, 1) | X > 6: Var = 1 + 6λ - λ².
    let var = 1.0 + 6.0 * lambda - lambda * lambda;
    let m = mean(&xs);
    assert!((m - want).abs() < 3.0 * (var / n as f64).sqrt(), "mean {m} vs {want}");
}

#[test]
fn empty_leaf_draws_have_prior_spread() {
    let mut rng = rng_for(13, 0);
    let sigma = 0.4;
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| sample_leaf_value(&[], sigma, &mut rng)).collect();
    let sd = (xs.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    // Standard error of a normal sample sd is about sigma / sqrt(2n).
    assert!((sd - sigma).abs() < 3.0 * sigma / (2.0 * n as f64).sqrt(), "sd {sd}");
}

#[test]
fn constant_event_fraction_is_recovered() {
    // 2000 rows, exactly 20% events, one uninformative feature.
    let n = 2000;
    let rows: Vec<Vec<Option<f64>>> = (0..n).map(|i| vec![Some((i % 13) as f64)]).collect();
    let outcomes: Vec<bool> = (0..n).map(|i| i % 5 == 0).collect();
    let data = TrainingData::new(Design::new(&rows, vec![1.0; n]), outcomes);
    let config = FitConfig::with_trees(50);
    let settings = SamplerSettings::from_config(&config, 1).unwrap();
    let mut state = SamplerState::new(&data, 50);
    let mut rng = rng_for(14, 0);
    let mut per_iter = Vec::new();
    for it in 0..600 {
        state.backfit_iteration(&data, &settings, &mut rng).unwrap();
        if it >= 200 {
            per_iter.push(state.total_fit().iter().map(|&f| norm_cdf(f)).sum::<f64>() / n as f64);
        }
    }
    let m = mean(&per_iter);
    assert!((m - 0.2).abs() < 0.05, "posterior mean hazard {m}");
}

fn strong_signal_table(seed: u64) -> treesurv_core::records::PersonPeriodTable {
    let mut s = Scenario::constant(300, 8, 0.0);
    s.drift_sd = 0.3;
    s.hazard = HazardModel::Probit {
        intercept: -1.8,
        coefficients: vec![3.0, 0.0, 0.0],
        time_coefficient: 0.0,
        health_coefficient: 0.0,
    };
    let (records, _) = generate(&s, &mut rng_for(seed, 0)).unwrap();
    let grid = TimeGrid::uniform(8.0, 8).unwrap();
    expand_person_period(&records, &grid, None).unwrap()
}

#[test]
fn signal_feature_dominates_split_counts() {
    let table = strong_signal_table(15);
    let mut config = FitConfig::with_trees(20);
    config.n_burn = 200;
    config.n_keep = 200;
    let draws = fit_seeded(&table, &config).unwrap();
    let freq = draws.split_frequencies();
    assert!(freq[0] >= 0.5, "split frequencies {freq:?}");
    assert!(freq[0] > freq[1] && freq[0] > freq[2]);
    // Every split the fit produced refers to a real axis.
    for e in &draws.draws {
        for t in &e.trees {
            assert!(t.rules().all(|r| matches!(r.axis, Axis::Time) || matches!(r.axis, Axis::Feature(j) if j < 3)));
        }
    }
}

#[test]
fn same_seed_gives_identical_draws() {
    let table = strong_signal_table(16);
    let mut config = FitConfig::with_trees(10);
    config.n_burn = 20;
    config.n_keep = 30;
    config.seed = 99;
    let a = fit_seeded(&table, &config).unwrap();
    let b = fit_seeded(&table, &config).unwrap();
    assert_eq!(a, b);
    config.seed = 100;
    assert_ne!(a.draws, fit_seeded(&table, &config).unwrap().draws);
}

#[test]
fn zero_event_data_fits_with_a_warning() {
    let (records, _) = generate(&Scenario::constant(30, 4, 0.0), &mut rng_for(17, 0)).unwrap();
    let table = expand_person_period(&records, &TimeGrid::uniform(4.0, 4).unwrap(), None).unwrap();
    let mut config = FitConfig::with_trees(5);
    config.n_burn = 10;
    config.n_keep = 10;
    let draws = fit_seeded(&table, &config).unwrap();
    assert_eq!(draws.diagnostics.warnings.len(), 1);
}

#[test]
fn true_survival_matches_simulated_paths() {
    let mut s = Scenario::constant(50, 8, 0.0);
    s.hazard = HazardModel::Probit {
        intercept: -1.0,
        coefficients: vec![0.7, -0.4, 0.2],
        time_coefficient: 0.05,
        health_coefficient: 0.3,
    };
    let (_, oracle) = generate(&s, &mut rng_for(18, 0)).unwrap();
    let mut rng = rng_for(18, 1);
    let paths = 100_000;
    for &(patient, t, window) in &[(0usize, 0.0, 3.0), (7, 2.0, 4.0), (23, 1.5, 2.5)] {
        // Brute force: walk each path interval by interval from the start,
        // keep those alive at t, count survivors at t + window.
        let hazards = &oracle.hazards[patient];
        let (mut alive_at_t, mut alive_after) = (0u32, 0u32);
        for _ in 0..paths {
            let exit = hazards
                .iter()
                .position(|&h| rng.random::<f64>() < h)
                .map_or(f64::INFINITY, |r| (r + 1) as f64 * oracle.interval_width);
            if exit > t {
                alive_at_t += 1;
                if exit > t + window {
                    alive_after += 1;
                }
            }
        }
        let p_hat = alive_after as f64 / alive_at_t as f64;
        let p = true_survival(&oracle, patient, t, window);
        let se = (p * (1.0 - p) / alive_at_t as f64).sqrt();
        assert!((p_hat - p).abs() < 3.0 * se.max(1e-9), "patient {patient}: {p_hat} vs {p}");
    }
}
