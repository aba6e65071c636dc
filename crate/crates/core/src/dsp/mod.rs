//! Signal-processing primitives used for reference curation and evaluation.
//!
//! Everything here is a pure function of its inputs and runs in 64-bit
//! floating point.

mod fft;
mod linsolve;
mod resample;
mod savgol;
mod spectrum;
mod tone;

use alloc::vec::Vec;

pub use fft::{dft_forward, dft_inverse};
pub use num_complex::Complex64;
pub use resample::fourier_resample;
pub(crate) use resample::resample_to_len;
pub use savgol::savitzky_golay;
pub use spectrum::{dominant_frequency, power_spectral_density, Spectrum};
pub use tone::{amplitude_at, estimate_frequency, phase_offset, refine_frequency, tone_fit, ToneFit};

pub(crate) use linsolve::invert_symmetric;

use crate::error::{invalid, Result};

/// A uniformly sampled real-valued time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid!("sample rate must be positive, got {sample_rate}"));
        }
        Ok(Signal { samples, sample_rate })
    }

    /// Samples `f(t)` at `t = n / sample_rate` for `n in 0..len`.
    pub fn from_fn(len: usize, sample_rate: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..len).map(|n| f(n as f64 / sample_rate)).collect();
        Signal::new(samples, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `len / sample_rate`, in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn nyquist(&self) -> f64 {
        0.5 * self.sample_rate
    }

    pub fn mean_square(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }

    pub(crate) fn require_spectral(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(invalid!(
                "spectral operations need at least 2 samples, got {}",
                self.samples.len()
            ));
        }
        Ok(())
    }
}
