//! Reference library curation.
//!
//! A library is a small set of velocity-tagged, single-gait joint trajectories
//! normalized to a common duration and rate, together with the
//! velocity→primary-frequency map they imply.

mod curate;
mod synth;
mod velocity;

use alloc::string::String;
use alloc::vec::Vec;

pub use curate::{analyze_sequence, build_library, normalize_sequence, select_joints, CurationConfig, NormalizeConfig};
pub use synth::{
    canonical_library, canonical_single_cycle_specs, canonical_specs, synth_reference, LimbHarmonics, SynthSpec,
    CANONICAL_PAIRS,
};
pub use velocity::{FrequencyMap, DEFAULT_CEILING_HZ, DEFAULT_FLOOR_HZ};

use crate::dsp::Signal;
use crate::error::{invalid, Result};
use crate::joints::{JointId, JOINT_COUNT};

/// A full-body recording with arbitrarily named channels, before joint
/// selection.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSequence {
    pub name: String,
    pub velocity: f64,
    pub sample_rate: f64,
    pub channels: Vec<(String, Vec<f64>)>,
}

/// A velocity-tagged, fixed-rate trajectory of the ten modelled joints.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub name: String,
    velocity: f64,
    sample_rate: f64,
    channels: [Vec<f64>; JOINT_COUNT],
}

impl MotionSequence {
    pub fn new(name: impl Into<String>, velocity: f64, sample_rate: f64, channels: [Vec<f64>; JOINT_COUNT]) -> Result<Self> {
        if !(velocity.is_finite() && velocity >= 0.0) {
            return Err(invalid!("velocity must be finite and non-negative, got {velocity}"));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid!("sample rate must be positive, got {sample_rate}"));
        }
        let len = channels[0].len();
        for (joint, channel) in JointId::ALL.iter().zip(&channels) {
            if channel.len() != len {
                return Err(invalid!("joint {joint} has {} samples, expected {len}", channel.len()));
            }
            if let Some(i) = channel.iter().position(|v| !v.is_finite()) {
                return Err(invalid!("joint {joint} sample {i} is not finite"));
            }
        }
        Ok(MotionSequence { name: name.into(), velocity, sample_rate, channels })
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Samples per joint.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn channel(&self, joint: JointId) -> &[f64] {
        &self.channels[joint.index()]
    }

    pub fn channels(&self) -> &[Vec<f64>; JOINT_COUNT] {
        &self.channels
    }

    pub fn signal(&self, joint: JointId) -> Signal {
        Signal::new(self.channels[joint.index()].clone(), self.sample_rate).expect("validated rate")
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 / self.sample_rate).collect()
    }

    /// Joint-position frame at sample `i`.
    pub fn frame(&self, i: usize) -> [f64; JOINT_COUNT] {
        core::array::from_fn(|j| self.channels[j][i])
    }
}

/// Per-joint spectral summary; `None` marks a flat joint.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointSpectrum {
    pub frequency: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    pub joints: [Option<JointSpectrum>; JOINT_COUNT],
    /// Most common per-joint dominant frequency; `None` when every joint is flat.
    pub primary_frequency: Option<f64>,
    /// `(left, right, offset)`: phase of `right` relative to `left` in cycles,
    /// measured at the primary frequency.
    pub contralateral: [(JointId, JointId, Option<f64>); JOINT_COUNT / 2],
}

impl SpectralProfile {
    pub fn joint(&self, joint: JointId) -> Option<JointSpectrum> {
        self.joints[joint.index()]
    }
}

/// Curated, normalized reference set. Sequences are sorted by velocity and
/// `frequency_map().pairs()[i]` belongs to `sequences()[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLibrary {
    sequences: Vec<MotionSequence>,
    map: FrequencyMap,
    duration: f64,
    sample_rate: f64,
}

impl ReferenceLibrary {
    /// Reassembles a library from stored parts, re-checking its invariants.
    pub fn from_parts(sequences: Vec<MotionSequence>, map: FrequencyMap, duration: f64, sample_rate: f64) -> Result<Self> {
        if sequences.len() != map.pairs().len() {
            return Err(invalid!(
                "{} sequences but {} velocity/frequency pairs",
                sequences.len(),
                map.pairs().len()
            ));
        }
        let expected_len = libm::round(duration * sample_rate) as usize;
        for (seq, &(v, _)) in sequences.iter().zip(map.pairs()) {
            if seq.sample_rate() != sample_rate || seq.len() != expected_len {
                return Err(invalid!(
                    "sequence {} is {} samples at {} Hz, library expects {expected_len} at {sample_rate} Hz",
                    seq.name,
                    seq.len(),
                    seq.sample_rate()
                ));
            }
            if seq.velocity() != v {
                return Err(invalid!("sequence {} velocity {} does not match map entry {v}", seq.name, seq.velocity()));
            }
        }
        Ok(ReferenceLibrary { sequences, map, duration, sample_rate })
    }

    pub fn sequences(&self) -> &[MotionSequence] {
        &self.sequences
    }

    pub fn frequency_map(&self) -> &FrequencyMap {
        &self.map
    }

    pub fn velocity_frequency_pairs(&self) -> &[(f64, f64)] {
        self.map.pairs()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.map.pairs().iter().map(|p| p.1).collect()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.sequences[0].times()
    }

    pub fn velocity_to_frequency(&self, velocity: f64) -> f64 {
        self.map.frequency(velocity)
    }

    /// `(frequency, sequence)` training pairs in velocity order.
    pub fn entries(&self) -> impl Iterator<Item = (f64, &MotionSequence)> {
        self.map.pairs().iter().map(|p| p.1).zip(&self.sequences)
    }

    /// Index of the library entry whose frequency is closest to `frequency`.
    pub fn nearest(&self, frequency: f64) -> usize {
        let mut best = 0;
        for (i, &(_, f)) in self.map.pairs().iter().enumerate() {
            if libm::fabs(f - frequency) < libm::fabs(self.map.pairs()[best].1 - frequency) {
                best = i;
            }
        }
        best
    }

    pub fn profiles(&self) -> Vec<SpectralProfile> {
        self.sequences.iter().map(|s| analyze_sequence(s, &CurationConfig::default())).collect()
    }
}
