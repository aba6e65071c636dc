//! Deterministic synthetic gait generator standing in for retargeted capture
//! data.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_library, CurationConfig, MotionSequence, ReferenceLibrary};
use crate::error::{invalid, Result};
use crate::joints::{JointId, JOINT_COUNT};

/// Velocity (m/s) → primary frequency (Hz) pairs of the canonical five-gait
/// library: two walks, a jog and two runs.
pub const CANONICAL_PAIRS: [(f64, f64); 5] = [(0.66, 0.68), (1.10, 0.86), (2.29, 1.25), (2.87, 1.36), (3.40, 1.58)];

/// Harmonic shape of one contralateral joint pair.
///
/// The left joint is `mean + Σ_k sin[k]·sin(2πkft) + cos[k]·cos(2πkft)`; the
/// right joint is the same curve advanced by `contralateral_offset` cycles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LimbHarmonics {
    #[cfg_attr(feature = "serde", serde(default))]
    pub mean: f64,
    pub sin: Vec<f64>,
    pub cos: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default = "half_cycle"))]
    pub contralateral_offset: f64,
}

#[cfg(feature = "serde")]
fn half_cycle() -> f64 {
    0.5
}

impl LimbHarmonics {
    fn eval(&self, phase: f64) -> f64 {
        let mut y = self.mean;
        for (k, (&a, &b)) in self.sin.iter().zip(&self.cos).enumerate() {
            let (s, c) = libm::sincos((k + 1) as f64 * phase);
            y += a * s + b * c;
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthSpec {
    pub name: String,
    pub velocity: f64,
    pub frequency: f64,
    pub duration: f64,
    pub sample_rate: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise_amplitude: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    /// One entry per pair in [`JointId::CONTRALATERAL_PAIRS`] order.
    pub limbs: Vec<LimbHarmonics>,
}

/// Renders `spec` into a sequence of `round(duration · sample_rate)` samples,
/// adding seeded uniform noise in `±noise_amplitude`.
pub fn synth_reference(spec: &SynthSpec) -> Result<MotionSequence> {
    if !(spec.frequency.is_finite() && spec.frequency > 0.0) {
        return Err(invalid!("synthetic frequency must be positive, got {}", spec.frequency));
    }
    if !(spec.duration > 0.0 && spec.sample_rate > 0.0) {
        return Err(invalid!("duration and sample rate must be positive"));
    }
    if spec.limbs.len() != JOINT_COUNT / 2 {
        return Err(invalid!("expected {} limb specs, got {}", JOINT_COUNT / 2, spec.limbs.len()));
    }
    for limb in &spec.limbs {
        if limb.sin.len() != limb.cos.len() {
            return Err(invalid!("sin and cos coefficient lists differ in length"));
        }
        let all = limb.sin.iter().chain(&limb.cos).chain([&limb.mean, &limb.contralateral_offset]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(invalid!("limb coefficients must be finite"));
        }
    }
    if !(spec.noise_amplitude >= 0.0) {
        return Err(invalid!("noise amplitude must be non-negative"));
    }
    let len = libm::round(spec.duration * spec.sample_rate) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut channels: [Vec<f64>; JOINT_COUNT] = Default::default();
    for (limb, (left, right)) in spec.limbs.iter().zip(JointId::CONTRALATERAL_PAIRS) {
        for (joint, shift) in [(left, 0.0), (right, limb.contralateral_offset)] {
            channels[joint.index()] = (0..len)
                .map(|i| {
                    let cycles = spec.frequency * i as f64 / spec.sample_rate + shift;
                    limb.eval(TAU * (cycles - libm::floor(cycles)))
                })
                .collect();
        }
    }
    if spec.noise_amplitude > 0.0 {
        for channel in channels.iter_mut() {
            for v in channel.iter_mut() {
                *v += rng.random_range(-spec.noise_amplitude..=spec.noise_amplitude);
            }
        }
    }
    MotionSequence::new(spec.name.clone(), spec.velocity, spec.sample_rate, channels)
}

fn limb(mean: f64, sin: &[f64], cos: &[f64]) -> LimbHarmonics {
    LimbHarmonics { mean, sin: sin.to_vec(), cos: cos.to_vec(), contralateral_offset: 0.5 }
}

/// Canonical gait shapes at `intensity` 0 (slow walk) … 1 (run); amplitudes
/// and flexion offsets grow with speed.
fn canonical_limbs(intensity: f64) -> Vec<LimbHarmonics> {
    let s = intensity;
    vec![
        // hip pitch
        limb(-0.15 - 0.10 * s, &[0.30 + 0.12 * s, 0.03], &[0.05, 0.01]),
        // knee
        limb(0.55 + 0.25 * s, &[0.30 + 0.12 * s, 0.10 + 0.04 * s], &[-0.15 - 0.05 * s, 0.05]),
        // ankle pitch
        limb(-0.10, &[0.18 + 0.05 * s, 0.06], &[0.08, 0.0]),
        // shoulder pitch, counter-swinging the hip
        limb(0.0, &[-0.22 - 0.10 * s, -0.01], &[0.02, 0.0]),
        // elbow
        limb(0.60 + 0.30 * s, &[0.15 + 0.07 * s, 0.03], &[0.05, 0.0]),
    ]
}

fn canonical_spec(index: usize, duration: f64, sample_rate: f64, seed: u64) -> SynthSpec {
    const NAMES: [&str; 5] = ["walk_slow", "walk_fast", "jog", "run", "run_fast"];
    let (velocity, frequency) = CANONICAL_PAIRS[index];
    let (f_lo, f_hi) = (CANONICAL_PAIRS[0].1, CANONICAL_PAIRS[4].1);
    SynthSpec {
        name: format!("{:02}_{}", index, NAMES[index]),
        velocity,
        frequency,
        duration,
        sample_rate,
        noise_amplitude: 0.0,
        seed: seed.wrapping_add(index as u64),
        limbs: canonical_limbs((frequency - f_lo) / (f_hi - f_lo)),
    }
}

/// The five canonical gaits, rendered directly at 10 s and 60 Hz.
pub fn canonical_specs(seed: u64) -> Vec<SynthSpec> {
    (0..CANONICAL_PAIRS.len()).map(|i| canonical_spec(i, 10.0, 60.0, seed)).collect()
}

/// One gait cycle of each canonical gait at 30 Hz, the raw form the curation
/// pipeline expects.
pub fn canonical_single_cycle_specs(seed: u64) -> Vec<SynthSpec> {
    (0..CANONICAL_PAIRS.len())
        .map(|i| canonical_spec(i, 1.0 / CANONICAL_PAIRS[i].1, 30.0, seed))
        .collect()
}

/// Noiseless canonical library built through the regular curation path.
pub fn canonical_library(config: &CurationConfig) -> Result<ReferenceLibrary> {
    let seqs = canonical_specs(0)
        .iter()
        .map(synth_reference)
        .collect::<Result<Vec<_>>>()?;
    build_library(&seqs, config)
}
