//! Arbitrary-length DFT: iterative radix-2 for powers of two, Bluestein's
//! chirp-z reduction onto a radix-2 transform otherwise.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::Signal;
use crate::error::{invalid, Result};

/// Unnormalized forward transform: `X[k] = Σ x[n] e^{-2πi kn/N}`.
pub fn dft_forward(signal: &Signal) -> Result<Vec<Complex64>> {
    signal.require_spectral()?;
    let data: Vec<Complex64> = signal.samples().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Ok(transform(&data))
}

/// Inverse transform including the `1/N` factor, so that
/// `dft_inverse(dft_forward(x)) == x` up to rounding.
pub fn dft_inverse(coefficients: &[Complex64]) -> Result<Vec<Complex64>> {
    if coefficients.len() < 2 {
        return Err(invalid!("inverse DFT needs at least 2 coefficients"));
    }
    Ok(inverse(coefficients))
}

pub(crate) fn transform(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    if n <= 1 {
        return input.to_vec();
    }
    if n.is_power_of_two() {
        let mut data = input.to_vec();
        radix2_in_place(&mut data);
        data
    } else {
        bluestein(input)
    }
}

pub(crate) fn inverse(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    let conj: Vec<Complex64> = input.iter().map(|c| c.conj()).collect();
    let scale = 1.0 / n as f64;
    transform(&conj).into_iter().map(|c| c.conj() * scale).collect()
}

/// `e^{-2πi k/n}`.
fn twiddle(k: usize, n: usize) -> Complex64 {
    let angle = -2.0 * PI * k as f64 / n as f64;
    let (s, c) = libm::sincos(angle);
    Complex64::new(c, s)
}

fn radix2_in_place(data: &mut [Complex64]) {
    let n = data.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let twiddles: Vec<Complex64> = (0..n / 2).map(|k| twiddle(k, n)).collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = data[start + k];
                let b = data[start + k + half] * w;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

fn bluestein(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    let m = (2 * n - 1).next_power_of_two();
    // chirp[k] = e^{-iπ k²/n}; k² is reduced mod 2n to keep the angle small.
    let chirp: Vec<Complex64> = (0..n)
        .map(|k| {
            let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
            let (s, c) = libm::sincos(-PI * k2 / n as f64);
            Complex64::new(c, s)
        })
        .collect();

    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = input[k] * chirp[k];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..n {
        b[k] = chirp[k].conj();
        b[m - k] = chirp[k].conj();
    }
    radix2_in_place(&mut a);
    radix2_in_place(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    // inverse radix-2 via conjugation
    for x in a.iter_mut() {
        *x = x.conj();
    }
    radix2_in_place(&mut a);
    let scale = 1.0 / m as f64;
    (0..n).map(|k| a[k].conj() * scale * chirp[k]).collect()
}
