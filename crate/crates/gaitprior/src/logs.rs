//! Loss history, metric report and robot-log CSV files.
//!
//! # Robot log schema (format_version 1)
//!
//! One control tick per row. The file may start with a
//! `# format_version=1` comment line. Columns, in any order:
//!
//! - `time_s`, `cmd_vx` (m/s), `cmd_wz` (rad/s) and optionally
//!   `cmd_vx_filtered`; without it the raw command is passed through the
//!   acceleration filter starting from rest.
//! - `q_<joint>`, `qd_<joint>`, `qdd_<joint>`, `tau_<joint>` for each of the
//!   ten joints.
//! - `ang_vel_x`, `ang_vel_y`, `ang_vel_z`, `gravity_x`, `gravity_y`,
//!   `base_height`, `planar_velocity`.
//! - `<side>_contact`, `<side>_foot_height`, `<side>_foot_tangent_speed`,
//!   `<side>_foot_y`, `<side>_air_time`, `<side>_foot_gx`, `<side>_foot_gy`
//!   for `left` and `right`.
//! - `terminated`.
//!
//! Booleans are `0`/`1` or `true`/`false`.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use gaitprior_core::rewards::{FootState, RewardBreakdown, RobotStateFrame};
use gaitprior_core::train::LossBreakdown;
use gaitprior_core::JointId;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{csv_error, write_file};

pub const LOG_FORMAT_VERSION: u32 = 1;
const VERSION_PREFIX: &str = "# format_version=";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub reconstruction: f64,
    pub kl: f64,
    pub total: f64,
}

pub fn save_loss_history(path: &Path, history: &[LossBreakdown]) -> Result<()> {
    let rows = history.iter().enumerate().map(|(epoch, l)| LossRow {
        epoch,
        reconstruction: l.reconstruction,
        kl: l.kl,
        total: l.total,
    });
    write_rows(path, rows, &["epoch", "reconstruction", "kl", "total"])
}

pub fn load_loss_history(path: &Path) -> Result<Vec<LossRow>> {
    read_rows(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub value: f64,
    pub config_hash: String,
}

pub fn save_metrics(path: &Path, rows: &[MetricRow]) -> Result<()> {
    write_rows(path, rows.iter().cloned(), &["metric", "value", "config_hash"])
}

pub fn load_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    read_rows(path)
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    writer.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    write_file(path, &writer.into_inner().expect("in-memory writer"))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader.deserialize().map(|r| r.map_err(|e| csv_error(path, e))).collect()
}

/// One parsed log row: the robot state plus the command columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFrame {
    pub time: f64,
    pub command_velocity: f64,
    pub command_yaw_rate: f64,
    pub filtered_velocity: Option<f64>,
    pub state: RobotStateFrame,
}

const SIDES: [&str; 2] = ["left", "right"];
const FOOT_FIELDS: [&str; 7] = ["contact", "foot_height", "foot_tangent_speed", "foot_y", "air_time", "foot_gx", "foot_gy"];
const BASE_FIELDS: [&str; 7] = ["ang_vel_x", "ang_vel_y", "ang_vel_z", "gravity_x", "gravity_y", "base_height", "planar_velocity"];
const JOINT_PREFIXES: [&str; 4] = ["q", "qd", "qdd", "tau"];

/// Required log columns in canonical order, optionally with
/// `cmd_vx_filtered`.
pub fn log_columns(with_filtered: bool) -> Vec<String> {
    let mut cols: Vec<String> = ["time_s", "cmd_vx", "cmd_wz"].map(String::from).to_vec();
    if with_filtered {
        cols.push("cmd_vx_filtered".into());
    }
    for prefix in JOINT_PREFIXES {
        cols.extend(JointId::ALL.iter().map(|j| format!("{prefix}_{}", j.name())));
    }
    cols.extend(BASE_FIELDS.map(String::from));
    for side in SIDES {
        cols.extend(FOOT_FIELDS.iter().map(|f| format!("{side}_{f}")));
    }
    cols.push("terminated".into());
    cols
}

fn log_row(frame: &LogFrame) -> Vec<String> {
    let s = &frame.state;
    let mut out = vec![frame.time, frame.command_velocity, frame.command_yaw_rate];
    out.extend(frame.filtered_velocity);
    for a in [&s.q, &s.qd, &s.qdd, &s.torque] {
        out.extend_from_slice(a);
    }
    out.extend_from_slice(&s.base_angular_velocity);
    out.extend_from_slice(&s.projected_gravity);
    out.extend([s.base_height, s.planar_velocity]);
    for f in &s.feet {
        out.extend([f64::from(u8::from(f.contact)), f.height, f.tangential_speed, f.lateral, f.air_time, f.gravity_xy[0], f.gravity_xy[1]]);
    }
    out.push(f64::from(u8::from(s.terminated)));
    out.iter().map(f64::to_string).collect()
}

/// Writes frames in the log schema. Either every frame carries a filtered
/// command or none does.
pub fn save_log(path: &Path, frames: &[LogFrame]) -> Result<()> {
    let with_filtered = frames.first().is_some_and(|f| f.filtered_velocity.is_some());
    if frames.iter().any(|f| f.filtered_velocity.is_some() != with_filtered) {
        return Err(Error::Config("filtered command must be present on every frame or none".into()));
    }
    let mut writer = csv::Writer::from_writer(format!("{VERSION_PREFIX}{LOG_FORMAT_VERSION}\n").into_bytes());
    writer.write_record(log_columns(with_filtered)).map_err(|e| csv_error(path, e))?;
    for frame in frames {
        writer.write_record(log_row(frame)).map_err(|e| csv_error(path, e))?;
    }
    write_file(path, &writer.into_inner().expect("in-memory writer"))
}

pub fn load_log(path: &Path) -> Result<Vec<LogFrame>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    std::io::BufReader::new(file).read_line(&mut first).map_err(|e| Error::io(path, e))?;
    // header positions exclude skipped comment lines; record positions do not
    let skipped = usize::from(first.starts_with('#'));
    if let Some(v) = first.trim().strip_prefix(VERSION_PREFIX) {
        let found: u64 = v.trim().parse().map_err(|_| Error::format(path, Some(1), "unreadable format_version"))?;
        if found != u64::from(LOG_FORMAT_VERSION) {
            return Err(Error::UnsupportedVersion { path: path.to_path_buf(), found, expected: LOG_FORMAT_VERSION.into() });
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let header_line = headers.position().map_or(1, |p| p.line() as usize) + skipped;
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let with_filtered = index.contains_key("cmd_vx_filtered");
    let required = log_columns(with_filtered);
    if let Some(missing) = required.iter().find(|c| !index.contains_key(c.as_str())) {
        return Err(Error::format(path, Some(header_line), format!("missing column `{missing}`")));
    }
    if let Some(extra) = headers.iter().find(|h| !required.iter().any(|c| c == h)) {
        return Err(Error::format(path, Some(header_line), format!("unknown column `{extra}`")));
    }
    let columns: Vec<usize> = required.iter().map(|c| index[c.as_str()]).collect();
    let mut frames = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize);
        let values = columns
            .iter()
            .map(|&c| {
                let text = &record[c];
                parse_cell(text)
                    .ok_or_else(|| Error::format(path, line, format!("column `{}`: `{text}` is not a finite number", &headers[c])))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut at = 0;
        let mut take = |n: usize| {
            at += n;
            &values[at - n..at]
        };
        let head = take(3);
        let filtered = if with_filtered { Some(take(1)[0]) } else { None };
        let joints = take(40);
        let base = take(7);
        let feet = take(14);
        let terminated = take(1)[0];
        let flag = |v: f64, name: &str| -> Result<bool> {
            match v {
                0.0 => Ok(false),
                1.0 => Ok(true),
                _ => Err(Error::format(path, line, format!("column `{name}` must be 0 or 1, got {v}"))),
            }
        };
        let arr = |k: usize| -> [f64; 10] { joints[10 * k..10 * (k + 1)].try_into().expect("ten joints") };
        let foot = |k: usize| -> Result<FootState> {
            let f = &feet[7 * k..7 * (k + 1)];
            Ok(FootState {
                contact: flag(f[0], &format!("{}_contact", SIDES[k]))?,
                height: f[1],
                tangential_speed: f[2],
                lateral: f[3],
                air_time: f[4],
                gravity_xy: [f[5], f[6]],
            })
        };
        let state = RobotStateFrame {
            q: arr(0),
            qd: arr(1),
            qdd: arr(2),
            torque: arr(3),
            base_angular_velocity: [base[0], base[1], base[2]],
            projected_gravity: [base[3], base[4]],
            base_height: base[5],
            planar_velocity: base[6],
            feet: [foot(0)?, foot(1)?],
            terminated: flag(terminated, "terminated")?,
        };
        state.validate().map_err(|e| Error::format(path, line, e.to_string()))?;
        frames.push(LogFrame { time: head[0], command_velocity: head[1], command_yaw_rate: head[2], filtered_velocity: filtered, state });
    }
    Ok(frames)
}

fn parse_cell(text: &str) -> Option<f64> {
    let v: f64 = match text {
        "true" => 1.0,
        "false" => 0.0,
        _ => text.parse().ok()?,
    };
    v.is_finite().then_some(v)
}

/// Audit output columns: `time_s`, every reward term, `total`.
pub fn audit_columns() -> Vec<&'static str> {
    std::iter::once("time_s").chain(RewardBreakdown::NAMES).chain(["total"]).collect()
}

pub fn save_audit(path: &Path, rows: &[(f64, RewardBreakdown)]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(audit_columns()).map_err(|e| csv_error(path, e))?;
    for (t, b) in rows {
        let values = std::iter::once(*t).chain(b.terms()).chain([b.total]);
        writer.write_record(values.map(|v| v.to_string())).map_err(|e| csv_error(path, e))?;
    }
    write_file(path, &writer.into_inner().expect("in-memory writer"))
}

/// Reads an audit file back as `(time, terms, total)` rows.
pub fn load_audit(path: &Path) -> Result<Vec<(f64, [f64; 18], f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().ne(audit_columns()) {
        return Err(Error::format(path, Some(1), "unexpected audit header"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize);
        let values = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::format(path, line, format!("`{s}` is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push((values[0], values[1..19].try_into().expect("18 terms"), values[19]));
    }
    Ok(rows)
}
