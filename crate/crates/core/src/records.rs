//! JSONL record format shared by quantum trials and classical runs.
//!
//! One JSON object per line with the fields `trial_id, ordering,
//! setting0_index, setting0_deg, setting3_index, setting3_deg, outcome0,
//! outcome3, bsm, events`. Classical records put their marker in `bsm` and
//! use the ordering `"classical"`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{Sample, SampleView};
use crate::classical::ClassicalRecord;
use crate::format::serialize_f64;
use crate::measure::BinaryOutcome;
use crate::protocol::TrialRecord;
use crate::SimError;

pub const CLASSICAL_ORDERING: &str = "classical";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordLine {
    pub trial_id: u64,
    pub ordering: String,
    pub setting0_index: u8,
    #[serde(serialize_with = "serialize_f64")]
    pub setting0_deg: f64,
    pub setting3_index: u8,
    #[serde(serialize_with = "serialize_f64")]
    pub setting3_deg: f64,
    pub outcome0: BinaryOutcome,
    pub outcome3: BinaryOutcome,
    pub bsm: String,
    pub events: Vec<String>,
}

impl RecordLine {
    fn validate(&self) -> Result<(), SimError> {
        if self.setting0_index > 1 || self.setting3_index > 1 {
            return Err(SimError::InvalidRecord(format!(
                "setting indices ({}, {}) must be 0 or 1",
                self.setting0_index, self.setting3_index
            )));
        }
        if !self.setting0_deg.is_finite() || !self.setting3_deg.is_finite() {
            return Err(SimError::InvalidRecord("non-finite angle".into()));
        }
        Ok(())
    }
}

impl From<&TrialRecord> for RecordLine {
    fn from(r: &TrialRecord) -> Self {
        Self {
            trial_id: r.trial_id,
            ordering: r.ordering.label().to_string(),
            setting0_index: r.setting0.index,
            setting0_deg: r.setting0.angle.degrees(),
            setting3_index: r.setting3.index,
            setting3_deg: r.setting3.angle.degrees(),
            outcome0: r.outcome0,
            outcome3: r.outcome3,
            bsm: r.bsm.label().to_string(),
            events: r.events.iter().map(|e| e.label().to_string()).collect(),
        }
    }
}

impl From<&ClassicalRecord> for RecordLine {
    fn from(r: &ClassicalRecord) -> Self {
        Self {
            trial_id: r.trial_id,
            ordering: CLASSICAL_ORDERING.to_string(),
            setting0_index: r.setting0.index,
            setting0_deg: r.setting0.angle.degrees(),
            setting3_index: r.setting3.index,
            setting3_deg: r.setting3.angle.degrees(),
            outcome0: r.outcome0,
            outcome3: r.outcome3,
            bsm: r.marker.label().to_string(),
            events: ClassicalRecord::EVENTS.iter().map(|e| e.to_string()).collect(),
        }
    }
}

impl Sample for RecordLine {
    fn view(&self) -> SampleView<'_> {
        SampleView {
            trial_id: self.trial_id,
            setting0: self.setting0_index,
            setting3: self.setting3_index,
            outcome0: self.outcome0,
            outcome3: self.outcome3,
            label: &self.bsm,
        }
    }
}

/// Writes one line per record.
pub fn write_jsonl<W: Write, R>(mut out: W, records: &[R]) -> std::io::Result<()>
where
    for<'a> &'a R: Into<RecordLine>,
{
    for r in records {
        let line: RecordLine = r.into();
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_lines<W: Write>(mut out: W, lines: &[RecordLine]) -> std::io::Result<()> {
    for line in lines {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Garbled { line: usize, message: String },
}

/// Reads records; blank lines are skipped, anything else malformed is an
/// error carrying its 1-based line number.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<RecordLine>, ReadError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(&line).map_err(|e| ReadError::Garbled {
            line: i + 1,
            message: e.to_string(),
        })?;
        rec.validate().map_err(|e| ReadError::Garbled {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}
