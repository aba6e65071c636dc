//! Library directories: sequence files plus a `library.json` index.

use std::fs;
use std::path::Path;

use gaitprior_core::reflib::{analyze_sequence, CurationConfig, FrequencyMap, ReferenceLibrary, SpectralProfile};
use gaitprior_core::JointId;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{self, csv_error, write_file, write_json};

pub const INDEX_FILE: &str = "library.json";
pub const REPORT_FILE: &str = "spectral_report.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryIndex {
    pub format_version: u32,
    /// Sequence file names relative to the directory, in velocity order.
    pub members: Vec<String>,
    pub velocity_frequency_pairs: Vec<(f64, f64)>,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub floor_hz: f64,
    pub ceiling_hz: f64,
}

/// File stem used for library members, made filesystem-safe.
pub fn member_file(name: &str) -> String {
    let stem: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
    format!("{stem}.csv")
}

pub fn save_library(dir: &Path, library: &ReferenceLibrary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut members = Vec::with_capacity(library.len());
    for seq in library.sequences() {
        let file = member_file(&seq.name);
        if members.contains(&file) {
            return Err(Error::Config(format!("two library sequences map to file {file}")));
        }
        sequence::save_sequence(&dir.join(&file), seq, None)?;
        members.push(file);
    }
    let map = library.frequency_map();
    let index = LibraryIndex {
        format_version: sequence::FORMAT_VERSION,
        members,
        velocity_frequency_pairs: map.pairs().to_vec(),
        duration_s: library.duration(),
        sample_rate_hz: library.sample_rate(),
        floor_hz: map.floor(),
        ceiling_hz: map.ceiling(),
    };
    write_json(&dir.join(INDEX_FILE), &index)
}

pub fn load_library(dir: &Path) -> Result<ReferenceLibrary> {
    let path = dir.join(INDEX_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let index: LibraryIndex = serde_json::from_str(&text).map_err(|e| Error::format(&path, Some(e.line()), e.to_string()))?;
    if index.format_version != sequence::FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            path,
            found: index.format_version.into(),
            expected: sequence::FORMAT_VERSION.into(),
        });
    }
    let sequences = index
        .members
        .iter()
        .map(|m| sequence::load_sequence(&dir.join(m)))
        .collect::<Result<Vec<_>>>()?;
    let map = FrequencyMap::new(index.velocity_frequency_pairs, index.floor_hz, index.ceiling_hz)?;
    Ok(ReferenceLibrary::from_parts(sequences, map, index.duration_s, index.sample_rate_hz)?)
}

/// One row per (sequence, joint) of the curated library's spectral profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub sequence: String,
    pub velocity_mps: f64,
    pub primary_frequency_hz: Option<f64>,
    pub joint: String,
    pub dominant_frequency_hz: Option<f64>,
    pub amplitude_rad: Option<f64>,
    /// Phase lead of the contralateral joint in cycles; empty for right-side
    /// joints and when undefined.
    pub contralateral_offset_cycles: Option<f64>,
}

pub fn report_rows(library: &ReferenceLibrary, config: &CurationConfig) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for seq in library.sequences() {
        let profile: SpectralProfile = analyze_sequence(seq, config);
        for joint in JointId::ALL {
            let spectrum = profile.joint(joint);
            let offset = profile.contralateral.iter().find(|(l, _, _)| *l == joint).and_then(|p| p.2);
            rows.push(ReportRow {
                sequence: seq.name.clone(),
                velocity_mps: seq.velocity(),
                primary_frequency_hz: profile.primary_frequency,
                joint: joint.name().to_string(),
                dominant_frequency_hz: spectrum.map(|s| s.frequency),
                amplitude_rad: spectrum.map(|s| s.amplitude),
                contralateral_offset_cycles: offset,
            });
        }
    }
    rows
}

pub fn save_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    write_file(path, &writer.into_inner().expect("in-memory writer"))
}

pub fn load_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader.deserialize().map(|r| r.map_err(|e| csv_error(path, e))).collect()
}
