//! Longitudinal CSV: `id,time,event_time,event,<feature...>`, one row per
//! (patient, observation time). Empty cells (or `NA`) are missing values.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use treesurv_core::records::{Observation, PatientRecord};

use crate::error::{CliError, Result};

const FIXED: [&str; 4] = ["id", "time", "event_time", "event"];

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub records: Vec<PatientRecord>,
}

impl Dataset {
    pub fn n_events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }
}

struct Pending {
    first_line: u64,
    event_time: f64,
    event: bool,
    observations: Vec<(u64, Observation)>,
}

/// Parse a dataset, grouping rows by id in order of first appearance.
/// `source` names the input in error messages.
pub fn parse_longitudinal_csv<R: Read>(reader: R, source: &str) -> Result<Dataset> {
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(csv_line(&e).unwrap_or(1), e.to_string()))?
        .clone();
    let header_line = headers.position().map_or(1, |p| p.line());
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < FIXED.len() || names[..FIXED.len()] != FIXED {
        return Err(parse_err(
            header_line,
            format!("header must start with {}", FIXED.join(",")),
        ));
    }
    let feature_names: Vec<String> = names[FIXED.len()..].iter().map(|s| s.to_string()).collect();
    if let Some(dup) = feature_names
        .iter()
        .enumerate()
        .find(|(i, n)| n.is_empty() || feature_names[..*i].contains(n))
    {
        return Err(parse_err(header_line, format!("empty or repeated feature name '{}'", dup.1)));
    }

    let mut order: Vec<String> = Vec::new();
    let mut patients: HashMap<String, Pending> = HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| parse_err(csv_line(&e).unwrap_or(0), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let id = &row[0];
        if id.is_empty() {
            return Err(parse_err(line, "empty patient id".into()));
        }
        let number = |col: usize| -> Result<f64> {
            row[col]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("{} '{}' is not a finite number", FIXED[col], &row[col])))
        };
        let time = number(1)?;
        let event_time = number(2)?;
        let event = match &row[3] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("event '{other}' must be 0 or 1"))),
        };
        let values = (FIXED.len()..row.len())
            .map(|col| match &row[col] {
                "" | "NA" => Ok(None),
                cell => cell.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some).ok_or_else(|| {
                    parse_err(line, format!("{} '{}' is not a finite number", names[col], cell))
                }),
            })
            .collect::<Result<Vec<_>>>()?;

        let entry = patients.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            Pending {
                first_line: line,
                event_time,
                event,
                observations: Vec::new(),
            }
        });
        if entry.event_time != event_time || entry.event != event {
            return Err(parse_err(
                line,
                format!(
                    "patient {id}: event_time/event differ from line {}",
                    entry.first_line
                ),
            ));
        }
        if let Some((prev, _)) = entry.observations.iter().find(|(_, o)| o.time == time) {
            return Err(parse_err(
                line,
                format!("patient {id}: duplicate observation time {time} (also on line {prev})"),
            ));
        }
        entry.observations.push((line, Observation { time, values }));
    }

    let mut records = Vec::with_capacity(order.len());
    for id in order {
        let mut p = patients.remove(&id).expect("every ordered id was inserted");
        p.observations.sort_by(|a, b| a.1.time.total_cmp(&b.1.time));
        let record = PatientRecord {
            id,
            observations: p.observations.into_iter().map(|(_, o)| o).collect(),
            event_time: p.event_time,
            event: p.event,
            static_covariates: Vec::new(),
        };
        record.validate().map_err(|e| parse_err(p.first_line, e.to_string()))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(parse_err(header_line, "no data rows".into()));
    }
    Ok(Dataset {
        feature_names,
        records,
    })
}

fn csv_line(e: &csv::Error) -> Option<u64> {
    e.position().map(|p| p.line())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_longitudinal_csv(std::io::BufReader::new(file), &path.display().to_string())
}

/// Write records in the ingestion format. Values use the shortest exact
/// decimal form, so re-parsing gives identical records.
pub fn write_longitudinal_csv<W: Write>(out: W, feature_names: &[String], records: &[PatientRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FIXED.to_vec();
    header.extend(feature_names.iter().map(String::as_str));
    w.write_record(&header)?;
    for r in records {
        for o in &r.observations {
            let mut row = vec![
                r.id.clone(),
                o.time.to_string(),
                r.event_time.to_string(),
                if r.event { "1" } else { "0" }.to_string(),
            ];
            row.extend(o.values.iter().map(|v| v.map_or_else(String::new, |x| x.to_string())));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_longitudinal_csv(text.as_bytes(), "test.csv")
    }

    fn line_of(err: CliError) -> u64 {
        match err {
            CliError::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn groups_rows_and_sorts_observations() {
        let ds = parse("id,time,event_time,event,bili\nA,1.2,3.0,1,2.5\nB,0,4,0,1\nA,0.5,3.0,1,\n").unwrap();
        assert_eq!(ds.feature_names, ["bili"]);
        assert_eq!(ds.records.len(), 2);
        let a = &ds.records[0];
        assert_eq!(a.id, "A");
        assert!(a.event);
        assert_eq!(a.observations.iter().map(|o| o.time).collect::<Vec<_>>(), [0.5, 1.2]);
        assert_eq!(a.observations[0].values, [None]);
        assert_eq!(a.observations[1].values, [Some(2.5)]);
    }

    #[test]
    fn comments_and_na_are_accepted() {
        let ds = parse("# made by hand\nid,time,event_time,event,x,y\nA,0,2,0,NA,1\n").unwrap();
        assert_eq!(ds.records[0].observations[0].values, [None, Some(1.0)]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of(parse("id,time,event_time,event\nA,0,2,0\nA,x,2,0\n").unwrap_err()), 3);
        assert_eq!(line_of(parse("id,time,event_time,event\nA,0,2,2\n").unwrap_err()), 2);
        assert_eq!(line_of(parse("id,time,event_time,event\nA,0,2,0\nA,0,2,0\n").unwrap_err()), 3);
        assert_eq!(line_of(parse("id,time,event_time,event,z\nA,0,2,0,abc\n").unwrap_err()), 2);
        assert_eq!(line_of(parse("id,time,event_time,event\nA,0,2,0\nA,1,3,0\n").unwrap_err()), 3);
        assert_eq!(line_of(parse("patient,time,event_time,event\n").unwrap_err()), 1);
    }

    #[test]
    fn observation_after_exit_names_the_patient() {
        let err = parse("id,time,event_time,event\nQ7,0,2,0\nQ7,2.5,2,0\n").unwrap_err();
        assert!(err.to_string().contains("Q7"), "{err}");
    }

    #[test]
    fn writer_round_trips() {
        let ds = parse("id,time,event_time,event,a,b\nA,0,3.25,1,0.1,\nA,1.7,3.25,1,,-2e-9\nB,0,1,0,5,6\n").unwrap();
        let mut buf = Vec::new();
        write_longitudinal_csv(&mut buf, &ds.feature_names, &ds.records).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), ds);
    }
}
