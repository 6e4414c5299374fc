//! Command-line surface: argument definitions and the four subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use treesurv_core::bench::{assign_folds, evaluate_fold, generate, summarize, CvReport, EvalSpec, Scenario};
use treesurv_core::forest::{MissingRules, TreePrior};
use treesurv_core::mcmc::{fit, fit_seeded, rng_for, FitConfig, PosteriorDraws};
use treesurv_core::predict::{survival_curve, SurvivalCurve};
use treesurv_core::records::{build_time_grid, expand_person_period, landmark_subset, PatientRecord};

use crate::csv_io::{read_dataset, write_longitudinal_csv, Dataset};
use crate::error::{CliError, Result};
use crate::model_io::{config_hash, read_model, write_model};
use crate::report::{
    check_input_path, check_output_path, comment_header, write_cindex_table, write_curves, write_oracle, OutputSet,
};

#[derive(Parser, Debug)]
#[command(name = "treesurv", version, about = "Bayesian tree-ensemble survival model for longitudinal records")]
pub struct Cli {
    /// Worker threads for parallel folds and patients (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the model and write a model file.
    Train(TrainArgs),
    /// Write posterior survival curves for every patient and landmark.
    Predict(PredictArgs),
    /// Cross-validated time-dependent C-index.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic cohort and its ground-truth hazards.
    Simulate(SimulateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RulesArg {
    /// Missing-left, missing-right and missing-only splits.
    All,
    /// Only split on features observed for every row in the node.
    CompleteCase,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// Number of trees.
    #[arg(long, default_value_t = 50)]
    pub trees: usize,
    /// Burn-in iterations.
    #[arg(long, default_value_t = 250)]
    pub burn: usize,
    /// Retained posterior draws.
    #[arg(long, default_value_t = 1000)]
    pub keep: usize,
    /// Iterations per retained draw.
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Number of quantile bins for the time grid.
    #[arg(long, default_value_t = 20)]
    pub grid_bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tree prior: split probability at the root.
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    /// Tree prior: depth penalty exponent.
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Leaf prior standard deviation [default: 1.5 / sqrt(trees)].
    #[arg(long)]
    pub sigma_mu: Option<f64>,
    #[arg(long, value_enum, default_value_t = RulesArg::All)]
    pub missing_rules: RulesArg,
}

impl FitArgs {
    pub fn to_config(&self) -> Result<FitConfig> {
        let mut c = FitConfig::with_trees(self.trees);
        c.n_burn = self.burn;
        c.n_keep = self.keep;
        c.thin = self.thin;
        c.grid_bins = self.grid_bins;
        c.seed = self.seed;
        c.prior = TreePrior::new(self.alpha, self.beta, self.sigma_mu.unwrap_or(c.prior.sigma_mu))?;
        c.missing_rules = match self.missing_rules {
            RulesArg::All => MissingRules::All,
            RulesArg::CompleteCase => MissingRules::CompleteCase,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Longitudinal CSV: id,time,event_time,event,<features...>
    #[arg(long)]
    pub data: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Patients to predict for, in the training CSV format.
    #[arg(long)]
    pub data: PathBuf,
    /// Curve CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Landmark times, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub landmarks: Vec<f64>,
    /// Curve length after each landmark [default: up to the end of the time grid].
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Lower and upper credible band quantiles.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "0.05,0.95")]
    pub quantiles: Vec<f64>,
    /// Refit on `--train-data` patients at risk at each landmark, with the
    /// model file's configuration, instead of reusing the stored draws.
    #[arg(long, requires = "train_data")]
    pub refit_per_landmark: bool,
    #[arg(long)]
    pub train_data: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// C-index table to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Prediction window after each landmark. Required: there is no
    /// standard choice.
    #[arg(long)]
    pub window: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    pub landmarks: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Fit one model per landmark on training patients still at risk there.
    #[arg(long)]
    pub refit_per_landmark: bool,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Oracle JSON to write [default: <out> with extension .oracle.json].
    #[arg(long)]
    pub oracle: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Ignore a pool that already exists (repeated calls in one process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Train(a) => train(&a),
        Command::Predict(a) => predict(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Simulate(a) => simulate(&a),
    }
}

fn log_config<T: Serialize>(command: &str, seed: u64, config: &T) {
    let json = serde_json::to_string(config).expect("config serializes");
    eprintln!("treesurv {command}: seed={seed} config={json}");
}

/// Fit on `records` with a quantile grid; `stream` selects the RNG stream.
pub fn fit_dataset(records: &[PatientRecord], names: &[String], config: &FitConfig, stream: u64) -> Result<PosteriorDraws> {
    let grid = build_time_grid(records, config.grid_bins)?;
    let table = expand_person_period(records, &grid, Some(names))?;
    let draws = if stream == 0 {
        fit_seeded(&table, config)?
    } else {
        fit(&table, config, &mut rng_for(config.seed, stream))?
    };
    for w in &draws.diagnostics.warnings {
        eprintln!("treesurv: warning: {w}");
    }
    Ok(draws)
}

fn train(a: &TrainArgs) -> Result<()> {
    check_input_path(&a.data)?;
    check_output_path(&a.out)?;
    let config = a.fit.to_config()?;
    log_config("train", config.seed, &config);
    let data = read_dataset(&a.data)?;
    let draws = fit_dataset(&data.records, &data.feature_names, &config, 0)?;
    let d = &draws.diagnostics;
    let rates = d.acceptance_rates();
    eprintln!(
        "treesurv train: {} patients, {} rows, {} events, grid of {} intervals; acceptance grow={:.3} prune={:.3} change={:.3}",
        data.records.len(),
        d.n_rows,
        d.n_events,
        draws.grid.len(),
        rates[0],
        rates[1],
        rates[2]
    );
    let mut out = OutputSet::new();
    out.stage(&a.out, |w| write_model(w, &draws))?;
    out.commit()
}

/// Curves for every patient (outer) and landmark (inner).
pub fn predict_curves(
    per_landmark: &[(f64, &PosteriorDraws)],
    records: &[PatientRecord],
    horizon: Option<f64>,
    levels: (f64, f64),
) -> Result<Vec<SurvivalCurve>> {
    records
        .par_iter()
        .map(|r| {
            per_landmark
                .iter()
                .map(|&(t, draws)| {
                    let end = horizon.map_or(draws.grid.end(), |h| t + h);
                    survival_curve(draws, r, t, end, &[levels]).map_err(CliError::from)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().flatten().collect())
}

fn predict(a: &PredictArgs) -> Result<()> {
    check_input_path(&a.model)?;
    check_input_path(&a.data)?;
    if let Some(p) = &a.train_data {
        check_input_path(p)?;
    }
    check_output_path(&a.out)?;
    let levels = match a.quantiles[..] {
        [lo, hi] => (lo, hi),
        _ => return Err(CliError::Usage("--quantiles takes exactly two values".into())),
    };
    if let Some(h) = a.horizon {
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::Usage("--horizon must be positive".into()));
        }
    }
    let model_file = std::fs::File::open(&a.model).map_err(|e| CliError::io(&a.model, e))?;
    let model = read_model(std::io::BufReader::new(model_file), &a.model.display().to_string())?;
    log_config("predict", model.config.seed, &model.config);
    let data = read_dataset(&a.data)?;
    check_features(&model.feature_names, &data, &a.data)?;

    let refits: Vec<PosteriorDraws> = match (&a.train_data, a.refit_per_landmark) {
        (Some(path), true) => {
            let train = read_dataset(path)?;
            check_features(&model.feature_names, &train, path)?;
            a.landmarks
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let subset = landmark_subset(&train.records, t);
                    if subset.is_empty() {
                        return Err(CliError::Usage(format!("no training patients are at risk at landmark {t}")));
                    }
                    fit_dataset(&subset, &train.feature_names, &model.config, 1 + i as u64)
                })
                .collect::<Result<_>>()?
        }
        _ => Vec::new(),
    };
    let per_landmark: Vec<(f64, &PosteriorDraws)> = a
        .landmarks
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, refits.get(i).unwrap_or(&model)))
        .collect();
    let curves = predict_curves(&per_landmark, &data.records, a.horizon, levels)?;
    let header = comment_header(&config_hash(&model.config), model.config.seed);
    let mut out = OutputSet::new();
    out.stage(&a.out, |w| write_curves(w, &header, &curves))?;
    out.commit()
}

fn check_features(expected: &[String], data: &Dataset, path: &Path) -> Result<()> {
    if data.feature_names != expected {
        return Err(CliError::Usage(format!(
            "{}: features [{}] differ from the model's [{}]",
            path.display(),
            data.feature_names.join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluateConfig<'a> {
    fit: &'a FitConfig,
    landmarks: &'a [f64],
    window: f64,
    folds: usize,
    refit_per_landmark: bool,
}

/// Cross-validate with folds running in parallel. Each fold has its own
/// RNG stream, so results do not depend on the thread count.
pub fn cross_validate_parallel(
    records: &[PatientRecord],
    config: &FitConfig,
    specs: &[EvalSpec],
    folds: usize,
    refit_per_landmark: bool,
) -> Result<CvReport> {
    let labels = assign_folds(records.len(), folds, config.seed)?;
    let per_fold = (0..folds)
        .into_par_iter()
        .map(|fold| evaluate_fold(records, &labels, fold, config, specs, refit_per_landmark))
        .collect::<treesurv_core::Result<Vec<_>>>()?;
    let scores: Vec<_> = per_fold.into_iter().flatten().collect();
    let summaries = summarize(specs, &scores);
    Ok(CvReport { scores, summaries })
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    check_input_path(&a.data)?;
    check_output_path(&a.out)?;
    let config = a.fit.to_config()?;
    let specs = a
        .landmarks
        .iter()
        .map(|&t| EvalSpec::new(t, a.window))
        .collect::<treesurv_core::Result<Vec<_>>>()?;
    let eval_config = EvaluateConfig {
        fit: &config,
        landmarks: &a.landmarks,
        window: a.window,
        folds: a.folds,
        refit_per_landmark: a.refit_per_landmark,
    };
    log_config("evaluate", config.seed, &eval_config);
    let data = read_dataset(&a.data)?;
    let report = cross_validate_parallel(&data.records, &config, &specs, a.folds, a.refit_per_landmark)?;
    for s in &report.summaries {
        eprintln!(
            "treesurv evaluate: landmark={} window={} median={} std={} folds_scored={}",
            s.spec.landmark,
            s.spec.window,
            s.median.map_or("NA".into(), |v| format!("{v:.4}")),
            s.std.map_or("NA".into(), |v| format!("{v:.4}")),
            s.n_folds
        );
    }
    let header = comment_header(&config_hash(&eval_config), config.seed);
    let mut out = OutputSet::new();
    out.stage(&a.out, |w| write_cindex_table(w, &header, &report))?;
    out.commit()
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    check_input_path(&a.scenario)?;
    check_output_path(&a.out)?;
    let oracle_path = a.oracle.clone().unwrap_or_else(|| a.out.with_extension("oracle.json"));
    check_output_path(&oracle_path)?;
    if oracle_path == a.out {
        return Err(CliError::Usage("dataset and oracle paths must differ".into()));
    }
    let text = std::fs::read_to_string(&a.scenario).map_err(|e| CliError::io(&a.scenario, e))?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: a.scenario.display().to_string(),
        message: e.to_string(),
    })?;
    scenario.validate()?;
    log_config("simulate", a.seed, &scenario);
    let (records, oracle) = generate(&scenario, &mut rng_for(a.seed, 0))?;
    let names: Vec<String> = (0..scenario.n_features).map(|j| format!("x{}", j + 1)).collect();
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let hash = config_hash(&scenario);
    let header = comment_header(&hash, a.seed);
    let mut out = OutputSet::new();
    out.stage(&a.out, |w| -> csv::Result<()> {
        writeln!(w, "{header}")?;
        write_longitudinal_csv(w, &names, &records)
    })?;
    out.stage(&oracle_path, |w| write_oracle(w, &hash, a.seed, &ids, &oracle))?;
    out.commit()?;
    eprintln!(
        "treesurv simulate: {} patients, {} events",
        records.len(),
        records.iter().filter(|r| r.event).count()
    );
    Ok(())
}
