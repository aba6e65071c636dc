//! Frequency-conditioned spectral gait priors.
//!
//! The crate is `no_std` (with `alloc`) and carries only the numerical core:
//!
//! - [`dsp`]: DFT, one-sided PSD, Fourier resampling, Savitzky–Golay smoothing
//!   and tone measurements (frequency, phase, amplitude).
//! - [`reflib`]: joint selection, normalization, spectral profiling, the
//!   velocity→frequency map and a synthetic reference generator.
//! - [`harmonics`]: the multi-harmonic phase vector fed to the decoder.
//! - [`prior`]: VAE encoder over frequency, bounded FiLM generator and SiLU
//!   decoder producing 10-DoF joint trajectories.
//! - [`train`]: composite loss, analytic gradients, Adam and the training loop.
//! - [`metrics`]: reconstruction, boundary amplitude, Fréchet distance,
//!   imitation and velocity tracking errors.
//! - [`rewards`]: the locomotion reward stack evaluated over recorded frames.
//!
//! File formats, checkpoints and the CLI live in the `gaitprior` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dsp;
mod error;
pub mod harmonics;
pub mod joints;
pub mod metrics;
pub mod prior;
pub mod reflib;
pub mod rewards;
pub mod train;

pub use error::{Error, Result};
pub use joints::{JointId, JOINT_COUNT};
