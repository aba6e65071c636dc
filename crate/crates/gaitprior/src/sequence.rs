//! Sequence CSV files with their `.meta.json` sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use gaitprior_core::reflib::{select_joints, MotionSequence, RawSequence};
use gaitprior_core::JointId;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const TIME_COLUMN: &str = "time_s";

/// Timestamps may deviate from `i / sample_rate` by this much, s.
const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub name: String,
    pub velocity_mps: f64,
    pub sample_rate_hz: f64,
    pub format_version: u32,
    /// Gait frequency the trajectory was generated at, for model output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
}

/// `walk.csv` → `walk.meta.json`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

pub fn read_meta(csv: &Path) -> Result<SequenceMeta> {
    let path = meta_path(csv);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: SequenceMeta = serde_json::from_str(&text).map_err(|e| Error::format(&path, Some(e.line()), e.to_string()))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            path,
            found: meta.format_version.into(),
            expected: FORMAT_VERSION.into(),
        });
    }
    Ok(meta)
}

/// Reads every column of a sequence file; columns other than `time_s` become
/// named channels.
pub fn load_raw_sequence(csv: &Path) -> Result<RawSequence> {
    let meta = read_meta(csv)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(csv).map_err(|e| csv_error(csv, e))?;
    let headers: Vec<String> = reader.headers().map_err(|e| csv_error(csv, e))?.iter().map(str::to_string).collect();
    let time_col = headers
        .iter()
        .position(|h| h == TIME_COLUMN)
        .ok_or_else(|| Error::format(csv, Some(1), format!("missing `{TIME_COLUMN}` column")))?;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| csv_error(csv, e))?;
        if record.len() != headers.len() {
            return Err(Error::format(csv, Some(line), format!("expected {} fields, found {}", headers.len(), record.len())));
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field
                .parse()
                .map_err(|_| Error::format(csv, Some(line), format!("column `{}`: `{field}` is not a number", headers[col])))?;
            if !value.is_finite() {
                return Err(Error::format(csv, Some(line), format!("column `{}` is not finite", headers[col])));
            }
            columns[col].push(value);
        }
        let expected = row as f64 / meta.sample_rate_hz;
        if (columns[time_col][row] - expected).abs() > TIME_TOLERANCE {
            return Err(Error::format(
                csv,
                Some(line),
                format!("time {} s does not match sample {row} at {} Hz", columns[time_col][row], meta.sample_rate_hz),
            ));
        }
    }
    let channels = headers
        .into_iter()
        .zip(columns)
        .enumerate()
        .filter(|(i, _)| *i != time_col)
        .map(|(_, c)| c)
        .collect();
    Ok(RawSequence { name: meta.name, velocity: meta.velocity_mps, sample_rate: meta.sample_rate_hz, channels })
}

/// Reads a sequence file and keeps the ten modelled joints.
pub fn load_sequence(csv: &Path) -> Result<MotionSequence> {
    let raw = load_raw_sequence(csv)?;
    select_joints(&raw).map_err(|e| match e {
        gaitprior_core::Error::MissingJoint(joint) => Error::format(csv, Some(1), format!("missing joint column `{joint}`")),
        other => other.into(),
    })
}

pub fn header() -> Vec<&'static str> {
    std::iter::once(TIME_COLUMN).chain(JointId::ALL.iter().map(|j| j.name())).collect()
}

/// Writes `seq` to `csv` and its sidecar. Floats use the shortest
/// representation that parses back to the same value.
pub fn save_sequence(csv: &Path, seq: &MotionSequence, frequency: Option<f64>) -> Result<()> {
    let mut out = String::with_capacity(seq.len() * 200);
    out.push_str(&header().join(","));
    out.push('\n');
    for (i, t) in seq.times().into_iter().enumerate() {
        out.push_str(&t.to_string());
        for v in seq.frame(i) {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    write_file(csv, out.as_bytes())?;
    let meta = SequenceMeta {
        name: seq.name.clone(),
        velocity_mps: seq.velocity(),
        sample_rate_hz: seq.sample_rate(),
        format_version: FORMAT_VERSION,
        frequency_hz: frequency,
    };
    write_json(&meta_path(csv), &meta)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::format(path, line, format!("{kind:?}")),
    }
}
