use core::f64::consts::PI;

use super::{dominant_frequency, invert_symmetric, power_spectral_density, Signal};
use crate::error::{invalid, Error, Result};

/// Least-squares fit of `offset + a·sin(2πft) + b·cos(2πft)`.
///
/// Evaluated at the exact frequency rather than the nearest DFT bin, so a
/// tone that does not complete an integer number of cycles in the window is
/// still measured without leakage bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneFit {
    pub frequency: f64,
    pub offset: f64,
    pub sin: f64,
    pub cos: f64,
    /// Mean-square of the fitted model (offset included); maximal exactly
    /// where the fit residual is minimal.
    pub explained: f64,
}

impl ToneFit {
    pub fn amplitude(&self) -> f64 {
        libm::hypot(self.sin, self.cos)
    }

    /// Phase `φ` of `A·sin(2πft + φ)`, radians in `(-π, π]`.
    pub fn phase(&self) -> f64 {
        libm::atan2(self.cos, self.sin)
    }

    /// Mean-square power carried by the sinusoid, `A²/2`.
    pub fn power(&self) -> f64 {
        0.5 * (self.sin * self.sin + self.cos * self.cos)
    }
}

pub fn tone_fit(signal: &Signal, frequency: f64) -> Result<ToneFit> {
    signal.require_spectral()?;
    if !(frequency > 0.0 && frequency < signal.nyquist()) {
        return Err(invalid!(
            "frequency {frequency} Hz outside (0, {}) Hz",
            signal.nyquist()
        ));
    }
    let omega = 2.0 * PI * frequency / signal.sample_rate();
    let mut gram = [0.0; 9];
    let mut rhs = [0.0; 3];
    for (n, &x) in signal.samples().iter().enumerate() {
        let (s, c) = libm::sincos(omega * n as f64);
        let basis = [1.0, s, c];
        for p in 0..3 {
            rhs[p] += basis[p] * x;
            for q in 0..3 {
                gram[p * 3 + q] += basis[p] * basis[q];
            }
        }
    }
    let inv = invert_symmetric(&gram, 3)
        .ok_or_else(|| invalid!("tone fit at {frequency} Hz is degenerate for this window"))?;
    let coef: [f64; 3] = core::array::from_fn(|p| (0..3).map(|q| inv[p * 3 + q] * rhs[q]).sum());
    let explained = coef.iter().zip(&rhs).map(|(c, r)| c * r).sum::<f64>() / signal.len() as f64;
    Ok(ToneFit { frequency, offset: coef[0], sin: coef[1], cos: coef[2], explained })
}

/// Amplitude of the sinusoidal component at `frequency`, radians for joint
/// angles. A pure tone `A·sin(2πft)` returns `A`.
pub fn amplitude_at(signal: &Signal, frequency: f64) -> Result<f64> {
    Ok(tone_fit(signal, frequency)?.amplitude())
}

/// Phase of `b` relative to `a` at `frequency`, as a fraction of a cycle in
/// `[0, 1)`.
pub fn phase_offset(a: &Signal, b: &Signal, frequency: f64) -> Result<f64> {
    if a.len() != b.len() || a.sample_rate() != b.sample_rate() {
        return Err(invalid!("phase_offset needs signals of equal length and rate"));
    }
    let fa = checked_fit(a, frequency)?;
    let fb = checked_fit(b, frequency)?;
    Ok(wrap_cycle((fb.phase() - fa.phase()) / (2.0 * PI)))
}

fn checked_fit(signal: &Signal, frequency: f64) -> Result<ToneFit> {
    let fit = tone_fit(signal, frequency)?;
    let total = signal.mean_square();
    if !(total > 0.0) || fit.power() < 1e-12 * total {
        return Err(Error::UndefinedPhase { frequency });
    }
    Ok(fit)
}

pub(crate) fn wrap_cycle(x: f64) -> f64 {
    let w = x - libm::floor(x);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Golden-section search for the frequency within `center ± half_width` whose
/// tone fit leaves the smallest residual.
pub fn refine_frequency(signal: &Signal, center: f64, half_width: f64) -> Result<f64> {
    let lo_bound = (center - half_width).max(1e-6 * signal.sample_rate());
    let hi_bound = (center + half_width).min(signal.nyquist() * (1.0 - 1e-9));
    if !(lo_bound < hi_bound) {
        return Err(invalid!("empty frequency search interval around {center} Hz"));
    }
    let score = |f: f64| tone_fit(signal, f).map(|fit| fit.explained).unwrap_or(f64::NEG_INFINITY);
    let ratio = 0.5 * (libm::sqrt(5.0) - 1.0);
    let (mut lo, mut hi) = (lo_bound, hi_bound);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut s1, mut s2) = (score(x1), score(x2));
    while hi - lo > 1e-10 {
        if s1 < s2 {
            lo = x1;
            x1 = x2;
            s1 = s2;
            x2 = lo + ratio * (hi - lo);
            s2 = score(x2);
        } else {
            hi = x2;
            x2 = x1;
            s2 = s1;
            x1 = hi - ratio * (hi - lo);
            s1 = score(x1);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dominant frequency at or above `min_hz`: periodogram peak with parabolic
/// refinement, then a continuous search within half a bin of it.
pub fn estimate_frequency(signal: &Signal, min_hz: f64) -> Result<f64> {
    let psd = power_spectral_density(signal)?;
    let coarse = dominant_frequency(&psd, min_hz)?;
    refine_frequency(signal, coarse, 0.5 * psd.resolution)
}
