use alloc::vec::Vec;

use super::Signal;
use crate::error::{Error, Result};

/// One-sided periodogram of a real signal.
///
/// Rectangular window. Normalized so that `Σ power == mean(x²)`: the DC and
/// (for even `N`) Nyquist bins carry `|X_k|²/N²`, every other retained bin
/// `2|X_k|²/N²`. Off-cycle inputs leak into neighbouring bins; the peak
/// estimate then relies on parabolic refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    /// Bin spacing `sample_rate / N`, Hz.
    pub resolution: f64,
}

impl Spectrum {
    pub const NORMALIZATION: &'static str = "one-sided periodogram, rectangular window, sum(power) = mean(x^2)";

    pub fn normalization(&self) -> &'static str {
        Self::NORMALIZATION
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }
}

pub fn power_spectral_density(signal: &Signal) -> Result<Spectrum> {
    let coefficients = super::dft_forward(signal)?;
    let n = signal.len();
    let norm = 1.0 / (n as f64 * n as f64);
    let bins = n / 2 + 1;
    let resolution = signal.sample_rate() / n as f64;
    let power = (0..bins)
        .map(|k| {
            let p = coefficients[k].norm_sqr() * norm;
            let paired = k != 0 && !(n.is_multiple_of(2) && k == n / 2);
            if paired {
                2.0 * p
            } else {
                p
            }
        })
        .collect();
    let frequencies = (0..bins).map(|k| k as f64 * resolution).collect();
    Ok(Spectrum { frequencies, power, resolution })
}

/// Frequency of the strongest bin at or above `min_hz`, refined by a
/// three-point parabola through the log-power of the peak and its neighbours.
/// Ties resolve to the lower frequency.
pub fn dominant_frequency(spectrum: &Spectrum, min_hz: f64) -> Result<f64> {
    if spectrum.is_empty() || !(min_hz >= 0.0) {
        return Err(crate::error::invalid!("dominant_frequency needs a non-empty spectrum and min_hz >= 0"));
    }
    // half-bin slack so a bin sitting exactly on min_hz is not lost to rounding
    let floor = min_hz - 1e-9 * spectrum.resolution;
    let mut best: Option<usize> = None;
    for (k, (&f, &p)) in spectrum.frequencies.iter().zip(&spectrum.power).enumerate() {
        if f < floor {
            continue;
        }
        match best {
            Some(b) if spectrum.power[b] >= p => {}
            _ => best = Some(k),
        }
    }
    let peak = match best {
        Some(k) if spectrum.power[k] > 0.0 => k,
        _ => return Err(Error::NoDominantFrequency { min_hz }),
    };

    let mut offset = 0.0;
    if peak > 0 && peak + 1 < spectrum.len() {
        let (l, c, r) = (spectrum.power[peak - 1], spectrum.power[peak], spectrum.power[peak + 1]);
        if l > 0.0 && r > 0.0 {
            let (a, b, g) = (libm::log(l), libm::log(c), libm::log(r));
            let denom = a - 2.0 * b + g;
            if denom < 0.0 {
                offset = (0.5 * (a - g) / denom).clamp(-0.5, 0.5);
            }
        }
    }
    Ok((peak as f64 + offset) * spectrum.resolution)
}
