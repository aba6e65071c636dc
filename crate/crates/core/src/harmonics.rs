//! Multi-harmonic phase vector `[sin φ, cos φ, …, sin Kφ, cos Kφ]` with
//! `φ = 2πft`, the decoder's input.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::{invalid, Result};

pub const DEFAULT_HARMONICS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicVector {
    pub values: Vec<f64>,
    pub harmonics: usize,
    pub time: f64,
    pub frequency: f64,
}

impl HarmonicVector {
    pub fn width(&self) -> usize {
        self.values.len()
    }
}

fn validate(frequency: f64, harmonics: usize) -> Result<()> {
    if harmonics < 1 {
        return Err(invalid!("harmonic count must be at least 1"));
    }
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(invalid!("frequency must be positive, got {frequency}"));
    }
    Ok(())
}

/// Writes the `2K` harmonic features for `(t, f)` into `out`.
///
/// Time is reduced to the fractional cycle `ft - ⌊ft⌋` before the phase is
/// formed, so large `t` does not erode precision.
pub(crate) fn encode_into(time: f64, frequency: f64, out: &mut [f64]) {
    let cycles = frequency * time;
    let phase = TAU * (cycles - libm::floor(cycles));
    for (k, pair) in out.chunks_exact_mut(2).enumerate() {
        let (s, c) = libm::sincos((k + 1) as f64 * phase);
        pair[0] = s;
        pair[1] = c;
    }
}

pub fn harmonic_encode(time: f64, frequency: f64, harmonics: usize) -> Result<HarmonicVector> {
    validate(frequency, harmonics)?;
    if !time.is_finite() {
        return Err(invalid!("time must be finite"));
    }
    let mut values = vec![0.0; 2 * harmonics];
    encode_into(time, frequency, &mut values);
    Ok(HarmonicVector { values, harmonics, time, frequency })
}

pub fn harmonic_encode_batch(times: &[f64], frequency: f64, harmonics: usize) -> Result<Vec<HarmonicVector>> {
    validate(frequency, harmonics)?;
    times.iter().map(|&t| harmonic_encode(t, frequency, harmonics)).collect()
}
