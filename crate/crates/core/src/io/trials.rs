use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Choice, Condition, TrialRecord, TrialSet};
use crate::error::{Error, Result};

pub const TRIALS_HEADER: [&str; 6] = ["subject_id", "scenario_id", "condition", "choice", "rt_ms", "slider"];
pub const MAX_SCENARIO_ID: u32 = 30;
/// Abort when more than this fraction of data rows is malformed.
pub const MAX_REJECT_FRACTION: f64 = 0.10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line in the file; the header is line 1.
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total_rows: usize,
    pub accepted: usize,
    pub rejected: Vec<RejectedRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedTrials {
    pub trials: TrialSet,
    pub report: ValidationReport,
}

fn parse_row(fields: &csv::StringRecord) -> std::result::Result<TrialRecord, String> {
    if fields.len() != TRIALS_HEADER.len() {
        return Err(format!("expected 6 fields, found {}", fields.len()));
    }
    let subject_id = fields[0].trim();
    if subject_id.is_empty() {
        return Err("empty subject_id".into());
    }
    let scenario_id: u32 = fields[1]
        .trim()
        .parse()
        .map_err(|_| format!("scenario_id {:?} is not an integer", &fields[1]))?;
    if !(1..=MAX_SCENARIO_ID).contains(&scenario_id) {
        return Err(format!("scenario_id out of range: {scenario_id}"));
    }
    let condition: Condition = fields[2].trim().parse()?;
    let choice = match fields[3].trim() {
        "ai" => Choice::Ai,
        "human" => Choice::Human,
        other => return Err(format!("unknown choice {other:?}")),
    };
    let rt_ms: u64 = fields[4]
        .trim()
        .parse()
        .map_err(|_| format!("rt_ms {:?} is not a positive integer", &fields[4]))?;
    if rt_ms == 0 {
        return Err("rt_ms must be positive".into());
    }
    let slider: i64 = fields[5]
        .trim()
        .parse()
        .map_err(|_| format!("slider {:?} is not an integer", &fields[5]))?;
    if !(0..=100).contains(&slider) {
        return Err("slider out of range".into());
    }
    Ok(TrialRecord {
        subject_id: subject_id.to_string(),
        scenario_id,
        condition,
        choice,
        rt_ms,
        slider: slider as u8,
    })
}

/// Parses trials CSV text. Every data row ends up either in the trial set
/// or in the report.
pub fn parse_trials(text: &str) -> Result<LoadedTrials> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Err(Error::Data("no data".into())),
        Some(h) => h?,
    };
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    if header != TRIALS_HEADER {
        return Err(Error::Data(format!(
            "header must be {}, found {}",
            TRIALS_HEADER.join(","),
            header.join(",")
        )));
    }

    let mut report = ValidationReport::default();
    let mut records = Vec::new();
    let mut conditions: BTreeMap<u32, Condition> = BTreeMap::new();
    for row in rows {
        report.total_rows += 1;
        let (line, parsed) = match row {
            Ok(r) => (r.position().map_or(0, |p| p.line()), parse_row(&r)),
            Err(e) => (
                e.position().map_or(0, |p| p.line()),
                Err(format!("unreadable row: {e}")),
            ),
        };
        let parsed = parsed.and_then(|r| match conditions.get(&r.scenario_id) {
            Some(&c) if c != r.condition => Err(format!(
                "condition {} conflicts with {} for scenario {}",
                r.condition, c, r.scenario_id
            )),
            _ => Ok(r),
        });
        match parsed {
            Ok(r) => {
                conditions.entry(r.scenario_id).or_insert(r.condition);
                records.push(r);
            }
            Err(reason) => report.rejected.push(RejectedRow { line, reason }),
        }
    }
    report.accepted = records.len();
    if report.total_rows == 0 {
        return Err(Error::Data("no data".into()));
    }
    let frac = report.rejected.len() as f64 / report.total_rows as f64;
    if frac > MAX_REJECT_FRACTION {
        let first = &report.rejected[0];
        return Err(Error::Data(format!(
            "{} of {} rows malformed (first at line {}: {}); aborting",
            report.rejected.len(),
            report.total_rows,
            first.line,
            first.reason
        )));
    }
    for r in &report.rejected {
        log::warn!("line {}: {}", r.line, r.reason);
    }
    Ok(LoadedTrials {
        trials: TrialSet::new(records),
        report,
    })
}

pub fn load_trials(path: &Path) -> Result<LoadedTrials> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trials(&text)
}

/// Serializes records in the ingestion schema, LF line endings.
pub fn trials_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(TRIALS_HEADER)?;
    for r in records {
        w.write_record([
            r.subject_id.clone(),
            r.scenario_id.to_string(),
            r.condition.to_string(),
            match r.choice {
                Choice::Ai => "ai".into(),
                Choice::Human => "human".into(),
            },
            r.rt_ms.to_string(),
            r.slider.to_string(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}
