use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::Parser;
use treesurv::commands::Command as Sub;
use treesurv::csv_io::{parse_longitudinal_csv, read_dataset, write_longitudinal_csv};
use treesurv::Cli;
use treesurv_core::bench::{generate, HazardModel, Scenario};
use treesurv_core::mcmc::{rng_for, FitConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treesurv"))
}

fn run(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut c = bin();
    c.args(args);
    for (flag, p) in paths {
        c.arg(flag).arg(p);
    }
    c.output().unwrap()
}

fn stderr_lines(o: &Output) -> Vec<String> {
    String::from_utf8_lossy(&o.stderr).lines().map(String::from).collect()
}

/// The last stderr line is a single JSON error object with a `kind`.
fn error_kind(o: &Output) -> String {
    assert!(!o.status.success());
    let last = stderr_lines(o).pop().expect("an error line");
    let v: serde_json::Value = serde_json::from_str(&last).unwrap_or_else(|e| panic!("not JSON ({e}): {last}"));
    v["error"].as_str().unwrap().to_string()
}

fn small_cohort(dir: &Path, n: usize) -> PathBuf {
    let mut s = Scenario::constant(n, 8, 0.0);
    s.hazard = HazardModel::Probit {
        intercept: -1.5,
        coefficients: vec![1.0, 0.0, 0.0],
        time_coefficient: 0.0,
        health_coefficient: 0.0,
    };
    let (records, _) = generate(&s, &mut rng_for(5, 0)).unwrap();
    let path = dir.join("cohort.csv");
    let names: Vec<String> = ["x1", "x2", "x3"].map(String::from).to_vec();
    write_longitudinal_csv(std::fs::File::create(&path).unwrap(), &names, &records).unwrap();
    path
}

const FAST: [&str; 6] = ["--trees", "10", "--burn", "20", "--keep", "40"];

fn train_small(dir: &Path, data: &Path) -> PathBuf {
    let model = dir.join("model.json");
    let mut args = vec!["train"];
    args.extend(FAST);
    let o = run(&args, &[("--data", data), ("--out", &model)]);
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    model
}

#[test]
fn train_defaults_match_the_standard_configuration() {
    let cli = Cli::try_parse_from(["treesurv", "train", "--data", "d.csv", "--out", "m.json"]).unwrap();
    let Sub::Train(args) = cli.command else { panic!("not train") };
    let config = args.fit.to_config().unwrap();
    assert_eq!(config, FitConfig::default());
    assert_eq!((config.n_trees, config.n_burn, config.n_keep, config.grid_bins, config.seed), (50, 250, 1000, 20, 0));
}

#[test]
fn train_logs_resolved_config_and_writes_versioned_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_cohort(dir.path(), 40);
    let model = train_small(dir.path(), &data);
    let v: serde_json::Value = serde_json::from_reader(std::fs::File::open(&model).unwrap()).unwrap();
    assert_eq!(v["format"], "treesurv-model");
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["seed"], 0);
    assert_eq!(v["draws"].as_array().unwrap().len(), 40);
    assert_eq!(v["feature_names"], serde_json::json!(["x1", "x2", "x3"]));
}

#[test]
fn predict_writes_one_block_per_patient_and_landmark() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_cohort(dir.path(), 30);
    let model = train_small(dir.path(), &data);
    let curves = dir.path().join("curves.csv");
    let o = run(
        &["predict", "--landmarks", "2,4,6", "--quantiles", "0.1,0.9"],
        &[("--model", &model), ("--data", &data), ("--out", &curves)],
    );
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    let text = std::fs::read_to_string(&curves).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# treesurv "));
    assert_eq!(lines.next().unwrap(), "patient_id,landmark,horizon_time,mean,lower,upper");
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    // Block starts: horizon_time == landmark with all survival values 1.
    let starts: Vec<&Vec<String>> = rows.iter().filter(|r| r[1] == r[2]).collect();
    assert_eq!(starts.len(), 30 * 3);
    assert!(starts.iter().all(|r| r[3] == "1" && r[4] == "1" && r[5] == "1"));
    let first_patient: Vec<&str> = starts.iter().take(3).map(|r| r[1].as_str()).collect();
    assert_eq!(first_patient, ["2", "4", "6"]);
    for r in &rows {
        let (m, lo, hi): (f64, f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap(), r[5].parse().unwrap());
        assert!(lo <= hi && (0.0..=1.0).contains(&m));
    }
}

#[test]
fn predict_can_refit_per_landmark() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_cohort(dir.path(), 30);
    let model = train_small(dir.path(), &data);
    let curves = dir.path().join("refit.csv");
    let o = run(
        &["predict", "--landmarks", "1,3", "--horizon", "2", "--refit-per-landmark"],
        &[("--model", &model), ("--data", &data), ("--train-data", &data), ("--out", &curves)],
    );
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    assert!(std::fs::read_to_string(&curves).unwrap().lines().count() > 2 + 60);
    let no_train = run(
        &["predict", "--landmarks", "1", "--refit-per-landmark"],
        &[("--model", &model), ("--data", &data), ("--out", &curves)],
    );
    assert_eq!(error_kind(&no_train), "usage");
}

#[test]
fn failures_are_single_json_lines_and_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_cohort(dir.path(), 20);
    let model = train_small(dir.path(), &data);
    let out = dir.path().join("never.csv");

    let beyond = run(&["predict", "--landmarks", "2,50"], &[("--model", &model), ("--data", &data), ("--out", &out)]);
    assert_eq!(error_kind(&beyond), "model");
    assert!(!out.exists());

    let missing = run(&["train"], &[("--data", &dir.path().join("nope.csv")), ("--out", &out)]);
    assert_eq!(error_kind(&missing), "usage");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "id,time,event_time,event,x\nA,0,2,0,1\nA,1,2,maybe,1\n").unwrap();
    let parse = run(&["train"], &[("--data", &bad), ("--out", &out)]);
    assert_eq!(error_kind(&parse), "parse");
    let last = stderr_lines(&parse).pop().unwrap();
    let v: serde_json::Value = serde_json::from_str(&last).unwrap();
    assert_eq!(v["line"], 3);

    let no_window = run(&["evaluate"], &[("--data", &data), ("--out", &out)]);
    assert_eq!(error_kind(&no_window), "usage");
    assert_eq!(no_window.status.code(), Some(2));
    assert_eq!(stderr_lines(&no_window).len(), 1);

    let no_dir = run(&["train"], &[("--data", &data), ("--out", &dir.path().join("sub/m.json"))]);
    assert_eq!(error_kind(&no_dir), "usage");
    assert!(!out.exists());
}

#[test]
fn evaluate_writes_fold_and_summary_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_cohort(dir.path(), 60);
    let table = dir.path().join("cindex.csv");
    let mut args = vec!["evaluate", "--window", "3", "--landmarks", "1,2", "--folds", "3", "--threads", "2"];
    args.extend(FAST);
    let o = run(&args, &[("--data", &data), ("--out", &table)]);
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# treesurv ") && lines[0].contains("config_hash=") && lines[0].contains("seed=0"));
    assert_eq!(lines[1], "landmark,window,fold,c_index");
    assert_eq!(lines.len(), 2 + 2 * 3 + 2 * 2);
    assert!(lines.iter().any(|l| l.starts_with("1,3,median,")));
    assert!(lines.iter().any(|l| l.starts_with("2,3,std,")));
    for l in &lines[2..8] {
        let c = l.rsplit(',').next().unwrap();
        assert!(c == "NA" || (0.0..=1.0).contains(&c.parse::<f64>().unwrap()), "{l}");
    }
    // Thread count does not change results.
    let again = dir.path().join("cindex1.csv");
    args[8] = "1";
    let o = run(&args, &[("--data", &data), ("--out", &again)]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&again).unwrap(), text.as_bytes());
}

#[test]
fn simulate_writes_dataset_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Scenario::constant(25, 5, 0.3);
    let spath = dir.path().join("scenario.json");
    std::fs::write(&spath, serde_json::to_string_pretty(&scenario).unwrap()).unwrap();
    let out = dir.path().join("sim.csv");
    let o = run(&["simulate", "--seed", "4"], &[("--scenario", &spath), ("--out", &out)]);
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    let ds = read_dataset(&out).unwrap();
    let (expected, oracle) = generate(&scenario, &mut rng_for(4, 0)).unwrap();
    assert_eq!(ds.records, expected);
    let v: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(dir.path().join("sim.oracle.json")).unwrap()).unwrap();
    assert_eq!(v["seed"], 4);
    assert_eq!(v["patients"].as_array().unwrap().len(), 25);
    assert_eq!(v["patients"][3]["hazards"], serde_json::json!(oracle.hazards[3]));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("# treesurv "));
}

#[test]
fn pbc_shaped_file_parses_to_312_patients() {
    // Same shape as the PBC follow-up data: 312 patients, 197 deaths (63%),
    // irregular visits, several lab values with gaps.
    let mut text = String::from("id,time,event_time,event,bili,albumin,alk.phos,platelet\n");
    for i in 0..312u32 {
        let event = (i * 7) % 312 < 197;
        let exit = 0.5 + (i % 29) as f64 * 0.47;
        let visits = 1 + i % 6;
        for v in 0..visits {
            let t = exit * v as f64 / visits as f64;
            let bili = if (i + v) % 7 == 0 { String::new() } else { format!("{:.1}", 0.3 + (i % 17) as f64) };
            let platelet = if (i * v) % 5 == 1 { "NA".to_string() } else { (150 + i % 200).to_string() };
            text.push_str(&format!("{},{t},{exit},{},{bili},3.{},{},{platelet}\n", i + 1, event as u8, i % 9, 600 + i));
        }
    }
    let ds = parse_longitudinal_csv(text.as_bytes(), "pbc.csv").unwrap();
    assert_eq!(ds.records.len(), 312);
    let events = ds.n_events();
    assert_eq!(events, 197);
    assert!(((events as f64 / 312.0) - 0.63).abs() < 0.005);
    assert_eq!(ds.feature_names.len(), 4);
    assert!(ds.records.iter().any(|r| r.observations.iter().any(|o| o.values[0].is_none())));
}
