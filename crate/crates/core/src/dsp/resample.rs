use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{fft, Signal};
use crate::error::{invalid, Result};

/// Band-limited upsampling by zero-padding the spectrum.
///
/// The input window is treated as one period of a periodic signal, so the
/// result is exact (to rounding) for tones that complete an integer number of
/// cycles in the window; other inputs ring near the window edges. Samples at
/// the original timestamps are always preserved when the rate ratio is an
/// integer. Output length is `round(N · target_rate / sample_rate)`.
/// Downsampling is rejected.
pub fn fourier_resample(signal: &Signal, target_rate: f64) -> Result<Signal> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(invalid!("target rate must be positive, got {target_rate}"));
    }
    if target_rate < signal.sample_rate() {
        return Err(invalid!(
            "downsampling from {} Hz to {target_rate} Hz is not supported",
            signal.sample_rate()
        ));
    }
    signal.require_spectral()?;
    if target_rate == signal.sample_rate() {
        return Ok(signal.clone());
    }
    let m = libm::round(signal.len() as f64 * target_rate / signal.sample_rate()) as usize;
    Signal::new(resample_to_len(signal.samples(), m), target_rate)
}

/// Fourier interpolation of `samples` onto `m ≥ samples.len()` points spanning
/// the same window.
pub(crate) fn resample_to_len(samples: &[f64], m: usize) -> Vec<f64> {
    let n = samples.len();
    if m == n || n < 2 {
        return samples.to_vec();
    }
    debug_assert!(m > n);
    let input: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let spectrum = fft::transform(&input);
    let zero = Complex64::new(0.0, 0.0);
    let mut padded = vec![zero; m];
    let positive = n / 2; // highest retained positive bin index
    if n.is_multiple_of(2) {
        padded[..positive].copy_from_slice(&spectrum[..positive]);
        for k in 1..positive {
            padded[m - k] = spectrum[n - k];
        }
        // split the Nyquist bin so the interpolant stays real
        let half = spectrum[positive] * 0.5;
        padded[positive] = half;
        padded[m - positive] = half;
    } else {
        padded[..=positive].copy_from_slice(&spectrum[..=positive]);
        for k in 1..=positive {
            padded[m - k] = spectrum[n - k];
        }
    }
    let scale = m as f64 / n as f64;
    fft::inverse(&padded).into_iter().map(|c| c.re * scale).collect()
}
