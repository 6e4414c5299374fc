//! Curve and C-index CSV writers, oracle JSON, and all-or-nothing file output.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;
use treesurv_core::bench::{CvReport, ScenarioOracle};
use treesurv_core::predict::SurvivalCurve;

use crate::error::{CliError, Result};
use crate::model_io::TOOL_VERSION;

/// `# treesurv <version> config_hash=<hash> seed=<seed>`
pub fn comment_header(config_hash: &str, seed: u64) -> String {
    format!("# treesurv {TOOL_VERSION} config_hash={config_hash} seed={seed}")
}

/// One row per curve point: `patient_id,landmark,horizon_time,mean,lower,upper`.
/// Bands come from each curve's first level pair.
pub fn write_curves<W: Write>(out: W, header: &str, curves: &[SurvivalCurve]) -> csv::Result<()> {
    let mut out = out;
    writeln!(out, "{header}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["patient_id", "landmark", "horizon_time", "mean", "lower", "upper"])?;
    for c in curves {
        let band = c.bands.first();
        for (s, t) in c.times.iter().enumerate() {
            let (lo, hi) = band.map_or((String::from("NA"), String::from("NA")), |b| {
                (b.lower[s].to_string(), b.upper[s].to_string())
            });
            w.write_record([
                c.patient_id.clone(),
                c.landmark.to_string(),
                t.to_string(),
                c.mean[s].to_string(),
                lo,
                hi,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn or_na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

/// `landmark,window,fold,c_index` per fold, then `median` and `std` rows per
/// spec in the fold column. Folds without comparable pairs show `NA`.
pub fn write_cindex_table<W: Write>(out: W, header: &str, report: &CvReport) -> csv::Result<()> {
    let mut out = out;
    writeln!(out, "{header}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["landmark", "window", "fold", "c_index"])?;
    for s in &report.scores {
        w.write_record([
            s.spec.landmark.to_string(),
            s.spec.window.to_string(),
            s.fold.to_string(),
            or_na(s.result.map(|r| r.estimate)),
        ])?;
    }
    for s in &report.summaries {
        for (label, v) in [("median", s.median), ("std", s.std)] {
            w.write_record([s.spec.landmark.to_string(), s.spec.window.to_string(), label.into(), or_na(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct OraclePatient<'a> {
    id: &'a str,
    health: f64,
    /// True event probability per scenario interval.
    hazards: &'a [f64],
}

#[derive(Serialize)]
struct OracleFile<'a> {
    tool_version: &'a str,
    config_hash: &'a str,
    seed: u64,
    interval_width: f64,
    patients: Vec<OraclePatient<'a>>,
}

pub fn write_oracle<W: Write>(
    out: W,
    config_hash: &str,
    seed: u64,
    ids: &[String],
    oracle: &ScenarioOracle,
) -> serde_json::Result<()> {
    let file = OracleFile {
        tool_version: TOOL_VERSION,
        config_hash,
        seed,
        interval_width: oracle.interval_width,
        patients: ids
            .iter()
            .zip(&oracle.hazards)
            .zip(&oracle.health)
            .map(|((id, hazards), &health)| OraclePatient { id, health, hazards })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &file)
}

/// Files written to temporaries next to their destinations and renamed into
/// place only by `commit`. Dropping the set deletes anything uncommitted.
#[derive(Default)]
pub struct OutputSet {
    staged: Vec<(NamedTempFile, PathBuf)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage<E>(&mut self, path: &Path, write: impl FnOnce(&mut dyn Write) -> std::result::Result<(), E>) -> Result<()>
    where
        E: std::fmt::Display,
    {
        let dir = parent_dir(path);
        let tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w).map_err(|e| CliError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        w.flush().map_err(|e| CliError::io(path, e))?;
        drop(w);
        self.staged.push((tmp, path.to_path_buf()));
        Ok(())
    }

    /// Rename every staged file into place. If one rename fails, files already
    /// placed by this call are removed again.
    pub fn commit(self) -> Result<()> {
        let mut placed: Vec<PathBuf> = Vec::new();
        for (tmp, path) in self.staged {
            if let Err(e) = tmp.persist(&path) {
                for p in &placed {
                    let _ = std::fs::remove_file(p);
                }
                return Err(CliError::io(&path, e.error));
            }
            placed.push(path);
        }
        Ok(())
    }
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Fail early if `path` cannot be an output file: its directory must exist
/// and the path itself must not be a directory.
pub fn check_output_path(path: &Path) -> Result<()> {
    let dir = parent_dir(path);
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("output directory {} does not exist", dir.display())));
    }
    if path.is_dir() {
        return Err(CliError::Usage(format!("output path {} is a directory", path.display())));
    }
    Ok(())
}

pub fn check_input_path(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("input file {} does not exist", path.display())));
    }
    Ok(())
}
