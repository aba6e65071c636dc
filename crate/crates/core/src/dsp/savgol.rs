use alloc::vec;
use alloc::vec::Vec;

use super::{invert_symmetric, Signal};
use crate::error::{invalid, Result};

/// Savitzky–Golay smoothing with a centred window of `window` samples and a
/// local polynomial of degree `poly_order`.
///
/// The first and last `window / 2` outputs evaluate the polynomial fitted to
/// the first (last) full window at the sample's own offset, so polynomials of
/// degree `≤ poly_order` are reproduced everywhere, edges included.
pub fn savitzky_golay(signal: &Signal, window: usize, poly_order: usize) -> Result<Signal> {
    if window.is_multiple_of(2) {
        return Err(invalid!("Savitzky–Golay window must be odd, got {window}"));
    }
    if window <= poly_order {
        return Err(invalid!("window {window} must exceed polynomial order {poly_order}"));
    }
    if window > signal.len() {
        return Err(invalid!("window {window} exceeds signal length {}", signal.len()));
    }
    let table = CoefficientTable::new(window, poly_order)?;
    let x = signal.samples();
    let n = x.len();
    let half = window / 2;
    let mut out = vec![0.0; n];
    for (i, y) in out.iter_mut().enumerate() {
        let (start, offset) = if i < half {
            (0, i)
        } else if i + half >= n {
            (n - window, i + window - n)
        } else {
            (i - half, half)
        };
        *y = table.row(offset).iter().zip(&x[start..start + window]).map(|(c, v)| c * v).sum();
    }
    Signal::new(out, signal.sample_rate())
}

/// `rows[s]` holds the weights that evaluate the least-squares polynomial over
/// a full window at position `s` within it.
struct CoefficientTable {
    window: usize,
    rows: Vec<f64>,
}

impl CoefficientTable {
    fn new(window: usize, order: usize) -> Result<Self> {
        let half = (window / 2) as f64;
        let scale = if half > 0.0 { 1.0 / half } else { 1.0 };
        let terms = order + 1;
        // Vandermonde on positions scaled to [-1, 1]
        let positions: Vec<f64> = (0..window).map(|j| (j as f64 - half) * scale).collect();
        let vander: Vec<f64> = positions
            .iter()
            .flat_map(|&u| (0..terms).map(move |p| libm::pow(u, p as f64)))
            .collect();
        let mut gram = vec![0.0; terms * terms];
        for r in 0..window {
            for p in 0..terms {
                for q in 0..terms {
                    gram[p * terms + q] += vander[r * terms + p] * vander[r * terms + q];
                }
            }
        }
        let gram_inv = invert_symmetric(&gram, terms)
            .ok_or_else(|| invalid!("ill-conditioned Savitzky–Golay design ({window}, {order})"))?;
        // pinv = gram⁻¹ Vᵀ, shape terms × window
        let mut pinv = vec![0.0; terms * window];
        for p in 0..terms {
            for r in 0..window {
                pinv[p * window + r] =
                    (0..terms).map(|q| gram_inv[p * terms + q] * vander[r * terms + q]).sum();
            }
        }
        let mut rows = vec![0.0; window * window];
        for s in 0..window {
            for r in 0..window {
                rows[s * window + r] =
                    (0..terms).map(|p| vander[s * terms + p] * pinv[p * window + r]).sum();
            }
        }
        Ok(CoefficientTable { window, rows })
    }

    fn row(&self, offset: usize) -> &[f64] {
        &self.rows[offset * self.window..(offset + 1) * self.window]
    }
}
