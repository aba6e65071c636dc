use alloc::vec::Vec;
use core::array;

use super::{FrequencyMap, JointSpectrum, MotionSequence, RawSequence, ReferenceLibrary, SpectralProfile};
use crate::dsp::{self, Signal};
use crate::error::{invalid, Error, Result};
use crate::joints::{JointId, JOINT_COUNT};
use crate::reflib::{DEFAULT_CEILING_HZ, DEFAULT_FLOOR_HZ};

/// Duration/rate standardization and smoothing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalizeConfig {
    pub duration: f64,
    pub sample_rate: f64,
    pub sg_window: usize,
    pub sg_order: usize,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig { duration: 10.0, sample_rate: 60.0, sg_window: 11, sg_order: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurationConfig {
    pub normalize: NormalizeConfig,
    /// Peaks below this are ignored when looking for a joint's dominant frequency.
    pub min_frequency: f64,
    /// Primary frequencies entered into the velocity map are rounded to this
    /// grid, Hz. `None` keeps the raw estimate.
    pub frequency_quantum: Option<f64>,
    pub floor: f64,
    pub ceiling: f64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            normalize: NormalizeConfig::default(),
            min_frequency: 0.25,
            frequency_quantum: Some(0.01),
            floor: DEFAULT_FLOOR_HZ,
            ceiling: DEFAULT_CEILING_HZ,
        }
    }
}

/// Keeps the ten modelled joints, in canonical order.
pub fn select_joints(raw: &RawSequence) -> Result<MotionSequence> {
    let mut channels: [Option<Vec<f64>>; JOINT_COUNT] = Default::default();
    for (name, values) in &raw.channels {
        if let Ok(joint) = name.parse::<JointId>() {
            channels[joint.index()] = Some(values.clone());
        }
    }
    let mut out: [Vec<f64>; JOINT_COUNT] = Default::default();
    for joint in JointId::ALL {
        out[joint.index()] = channels[joint.index()].take().ok_or(Error::MissingJoint(joint))?;
    }
    MotionSequence::new(raw.name.clone(), raw.velocity, raw.sample_rate, out)
}

/// Tiles `seq` cyclically to `config.duration`, Fourier-resamples each joint
/// to `config.sample_rate` and applies Savitzky–Golay smoothing.
///
/// The output always has `round(duration · sample_rate)` samples per joint.
pub fn normalize_sequence(seq: &MotionSequence, config: &NormalizeConfig) -> Result<MotionSequence> {
    if !(config.duration.is_finite() && config.duration > 0.0) {
        return Err(invalid!("target duration must be positive"));
    }
    if !(config.sample_rate.is_finite() && config.sample_rate > 0.0) {
        return Err(invalid!("target rate must be positive"));
    }
    if seq.is_empty() {
        return Err(invalid!("sequence {} is empty", seq.name));
    }
    if config.sample_rate < seq.sample_rate() {
        return Err(invalid!(
            "downsampling {} from {} Hz to {} Hz is not supported",
            seq.name,
            seq.sample_rate(),
            config.sample_rate
        ));
    }
    let source_len = (libm::round(config.duration * seq.sample_rate()) as usize).max(2);
    let target_len = libm::round(config.duration * config.sample_rate) as usize;
    let mut channels: [Vec<f64>; JOINT_COUNT] = Default::default();
    for joint in JointId::ALL {
        let cycle = seq.channel(joint);
        let tiled: Vec<f64> = (0..source_len).map(|i| cycle[i % cycle.len()]).collect();
        let resampled = dsp::resample_to_len(&tiled, target_len.max(source_len));
        let signal = Signal::new(resampled, config.sample_rate)?;
        channels[joint.index()] = dsp::savitzky_golay(&signal, config.sg_window, config.sg_order)?.into_samples();
    }
    MotionSequence::new(seq.name.clone(), seq.velocity(), config.sample_rate, channels)
}

/// Per-joint dominant frequency and amplitude, the sequence's primary
/// frequency and contralateral phase offsets.
pub fn analyze_sequence(seq: &MotionSequence, config: &CurationConfig) -> SpectralProfile {
    let joints: [Option<JointSpectrum>; JOINT_COUNT] = array::from_fn(|j| {
        let signal = seq.signal(JointId::ALL[j]);
        let frequency = dsp::estimate_frequency(&signal, config.min_frequency).ok()?;
        let amplitude = dsp::amplitude_at(&signal, frequency).ok()?;
        Some(JointSpectrum { frequency, amplitude })
    });
    let primary_frequency = modal_frequency(&joints, seq.len() as f64 / seq.sample_rate());
    let contralateral = JointId::CONTRALATERAL_PAIRS.map(|(l, r)| {
        let offset = primary_frequency.and_then(|f| dsp::phase_offset(&seq.signal(l), &seq.signal(r), f).ok());
        (l, r, offset)
    });
    SpectralProfile { joints, primary_frequency, contralateral }
}

/// The frequency shared by the most joints (within a quarter of a DFT bin),
/// averaged over that group. Ties go to the lower frequency.
fn modal_frequency(joints: &[Option<JointSpectrum>], duration: f64) -> Option<f64> {
    let tolerance = 0.25 / duration;
    let freqs: Vec<f64> = joints.iter().flatten().map(|j| j.frequency).collect();
    let mut best: Option<(usize, f64)> = None;
    for &f in &freqs {
        let group: Vec<f64> = freqs.iter().copied().filter(|g| libm::fabs(g - f) <= tolerance).collect();
        let mean = group.iter().sum::<f64>() / group.len() as f64;
        best = match best {
            Some((count, m)) if count > group.len() || (count == group.len() && m <= mean) => Some((count, m)),
            _ => Some((group.len(), mean)),
        };
    }
    best.map(|(_, f)| f)
}

fn quantize(value: f64, quantum: f64) -> f64 {
    let steps = libm::round(value / quantum);
    let inverse = libm::round(1.0 / quantum);
    if inverse >= 1.0 && libm::fabs(inverse * quantum - 1.0) < 1e-12 {
        // divide by an exact integer so e.g. 68 / 100 lands on the literal 0.68
        steps / inverse
    } else {
        steps * quantum
    }
}

/// Normalizes, profiles and sorts `sequences` by velocity, assembling the
/// velocity→frequency map from each sequence's primary frequency.
pub fn build_library(sequences: &[MotionSequence], config: &CurationConfig) -> Result<ReferenceLibrary> {
    if sequences.len() < 2 {
        return Err(Error::Curation(alloc::format!(
            "a library needs at least 2 sequences, got {}",
            sequences.len()
        )));
    }
    let mut normalized = sequences
        .iter()
        .map(|s| normalize_sequence(s, &config.normalize))
        .collect::<Result<Vec<_>>>()?;
    normalized.sort_by(|a, b| a.velocity().total_cmp(&b.velocity()));
    for w in normalized.windows(2) {
        if w[0].velocity() == w[1].velocity() {
            return Err(Error::Curation(alloc::format!(
                "sequences {} and {} share velocity {} m/s",
                w[0].name,
                w[1].name,
                w[0].velocity()
            )));
        }
    }
    let mut pairs = Vec::with_capacity(normalized.len());
    for seq in &normalized {
        let profile = analyze_sequence(seq, config);
        let f = profile
            .primary_frequency
            .ok_or_else(|| Error::Curation(alloc::format!("sequence {} has no periodic joint", seq.name)))?;
        let f = config.frequency_quantum.map_or(f, |q| quantize(f, q));
        pairs.push((seq.velocity(), f));
    }
    let map = FrequencyMap::new(pairs, config.floor, config.ceiling)?;
    ReferenceLibrary::from_parts(normalized, map, config.normalize.duration, config.normalize.sample_rate)
}
