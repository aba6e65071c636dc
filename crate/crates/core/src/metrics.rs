//! Quantitative metrics over generated trajectories and velocity traces.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dsp::{amplitude_at, estimate_frequency, Signal};
use crate::error::{invalid, Error, Result};
use crate::joints::{JointId, JOINT_COUNT};
use crate::prior::{GenerationMode, PriorModel, TrajectoryBatch};
use crate::reflib::{MotionSequence, ReferenceLibrary};
use crate::train::reconstruction_loss;

/// Extreme frequencies of the operating band probed for extrapolation.
pub const EXTREME_FREQUENCIES: [f64; 2] = [0.6, 2.3];

/// Anything that maps a frequency to joint trajectories on a uniform grid.
pub trait TrajectoryGenerator {
    fn generate(&self, frequency: f64, duration: f64, rate: f64) -> Result<TrajectoryBatch>;
}

impl TrajectoryGenerator for PriorModel {
    fn generate(&self, frequency: f64, duration: f64, rate: f64) -> Result<TrajectoryBatch> {
        self.generate_trajectory(frequency, duration, rate, GenerationMode::Mean)
    }
}

/// Mean-mode generation at every library frequency on the library grid.
pub fn generate_library_grid<G: TrajectoryGenerator + ?Sized>(generator: &G, library: &ReferenceLibrary) -> Result<Vec<TrajectoryBatch>> {
    library
        .frequencies()
        .into_iter()
        .map(|f| generator.generate(f, library.duration(), library.sample_rate()))
        .collect()
}

/// Mean squared error against every library sequence, averaged over joints
/// and library frequencies.
pub fn l_rec_metric(generated: &[TrajectoryBatch], library: &ReferenceLibrary) -> Result<f64> {
    let mut sum = 0.0;
    for (f, seq) in library.entries() {
        let batch = generated
            .iter()
            .find(|b| libm::fabs(b.frequency - f) <= 1e-9)
            .ok_or_else(|| invalid!("no generated trajectory at library frequency {f} Hz"))?;
        sum += reconstruction_loss(batch, seq)?;
    }
    Ok(sum / library.len() as f64)
}

/// How the in-library reference frequency for an extreme is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundaryReference {
    /// The library frequency closest to each extreme.
    #[default]
    Nearest,
    /// One fixed reference frequency for every extreme.
    Fixed(f64),
}

impl BoundaryReference {
    pub fn resolve(self, library: &ReferenceLibrary, extreme: f64) -> f64 {
        match self {
            Self::Nearest => library.frequencies()[library.nearest(extreme)],
            Self::Fixed(f) => f,
        }
    }
}

/// Per-joint amplitudes at one extreme frequency and at its boundary
/// reference.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryAmplitudes {
    pub extreme: f64,
    pub boundary: f64,
    pub at_extreme: [f64; JOINT_COUNT],
    pub at_boundary: [f64; JOINT_COUNT],
}

/// Amplitude of each joint at its own dominant frequency; flat joints
/// report 0.
pub fn joint_amplitudes(batch: &TrajectoryBatch, min_hz: f64) -> Result<[f64; JOINT_COUNT]> {
    let rate = batch.sample_rate().ok_or_else(|| invalid!("trajectory needs a uniform grid of at least two samples"))?;
    let mut out = [0.0; JOINT_COUNT];
    for (amp, samples) in out.iter_mut().zip(&batch.joints) {
        let signal = Signal::new(samples.clone(), rate)?;
        *amp = match estimate_frequency(&signal, min_hz) {
            Ok(f) => amplitude_at(&signal, f)?,
            Err(Error::NoDominantFrequency { .. }) => 0.0,
            Err(e) => return Err(e),
        };
    }
    Ok(out)
}

pub fn boundary_amplitudes<G: TrajectoryGenerator + ?Sized>(
    generator: &G,
    library: &ReferenceLibrary,
    extremes: &[f64],
    reference: BoundaryReference,
) -> Result<Vec<BoundaryAmplitudes>> {
    let (duration, rate) = (library.duration(), library.sample_rate());
    let min_hz = 0.25;
    extremes
        .iter()
        .map(|&extreme| {
            let boundary = reference.resolve(library, extreme);
            let at_extreme = joint_amplitudes(&generator.generate(extreme, duration, rate)?, min_hz)?;
            let at_boundary = joint_amplitudes(&generator.generate(boundary, duration, rate)?, min_hz)?;
            Ok(BoundaryAmplitudes { extreme, boundary, at_extreme, at_boundary })
        })
        .collect()
}

/// Mean absolute amplitude change between each extreme frequency and its
/// boundary reference, over joints and extremes.
pub fn boundary_amplitude_error<G: TrajectoryGenerator + ?Sized>(
    generator: &G,
    library: &ReferenceLibrary,
    extremes: &[f64],
    reference: BoundaryReference,
) -> Result<f64> {
    if extremes.is_empty() {
        return Err(invalid!("no extreme frequencies given"));
    }
    let rows = boundary_amplitudes(generator, library, extremes, reference)?;
    let total: f64 = rows
        .iter()
        .flat_map(|r| r.at_extreme.iter().zip(&r.at_boundary).map(|(a, b)| libm::fabs(a - b)))
        .sum();
    Ok(total / (rows.len() * JOINT_COUNT) as f64)
}

/// First two moments of a set of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionStats {
    pub mean: Vec<f64>,
    /// Row-major `dim × dim` unbiased sample covariance.
    pub covariance: Vec<f64>,
    pub dim: usize,
    pub count: usize,
}

impl MotionStats {
    pub fn covariance_at(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.dim + j]
    }
}

/// Sample mean and unbiased covariance by Welford's one-pass update.
pub fn motion_stats<F: AsRef<[f64]>>(frames: &[F]) -> Result<MotionStats> {
    if frames.len() < 2 {
        return Err(invalid!("motion statistics need at least two frames, got {}", frames.len()));
    }
    let dim = frames[0].as_ref().len();
    if dim == 0 || frames.iter().any(|f| f.as_ref().len() != dim) {
        return Err(invalid!("frames must share one positive dimension"));
    }
    let mut mean = vec![0.0; dim];
    let mut comoment = vec![0.0; dim * dim];
    let mut delta = vec![0.0; dim];
    for (n, frame) in frames.iter().enumerate() {
        let x = frame.as_ref();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("frame {n} holds non-finite values"));
        }
        let count = (n + 1) as f64;
        for i in 0..dim {
            delta[i] = x[i] - mean[i];
            mean[i] += delta[i] / count;
        }
        for i in 0..dim {
            let after = x[i] - mean[i];
            for j in 0..dim {
                comoment[i * dim + j] += after * delta[j];
            }
        }
    }
    let denom = (frames.len() - 1) as f64;
    let mut covariance = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let c = 0.5 * (comoment[i * dim + j] + comoment[j * dim + i]) / denom;
            covariance[i * dim + j] = c;
            covariance[j * dim + i] = c;
        }
        covariance[i * dim + i] = covariance[i * dim + i].max(0.0);
    }
    Ok(MotionStats { mean, covariance, dim, count: frames.len() })
}

pub fn batch_frames(batches: &[TrajectoryBatch]) -> Vec<[f64; JOINT_COUNT]> {
    batches.iter().flat_map(|b| (0..b.len()).map(move |i| b.frame(i))).collect()
}

pub fn sequence_frames<'a>(sequences: impl IntoIterator<Item = &'a MotionSequence>) -> Vec<[f64; JOINT_COUNT]> {
    sequences.into_iter().flat_map(|s| (0..s.len()).map(move |i| s.frame(i))).collect()
}

const PSD_TOLERANCE: f64 = 1e-10;

fn clipped_eigen(m: DMatrix<f64>, what: &str) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let mut eig = SymmetricEigen::new(m);
    for v in eig.eigenvalues.iter_mut() {
        if *v < -PSD_TOLERANCE {
            return Err(invalid!("{what} is not positive semidefinite (eigenvalue {v})"));
        }
        *v = v.max(0.0);
    }
    Ok(eig)
}

/// Fréchet distance between the Gaussians summarized by `a` and `b`:
/// `‖μa − μb‖² + tr(Σa + Σb − 2 (Σa Σb)^½)`.
///
/// The cross term is `tr((Σa^½ Σb Σa^½)^½)`, evaluated by symmetric
/// eigendecomposition with round-off negatives clipped to 0.
pub fn fid(a: &MotionStats, b: &MotionStats) -> Result<f64> {
    if a.dim != b.dim {
        return Err(invalid!("statistics have dimensions {} and {}", a.dim, b.dim));
    }
    let d = a.dim;
    let sa = DMatrix::from_row_slice(d, d, &a.covariance);
    let sb = DMatrix::from_row_slice(d, d, &b.covariance);
    let mean_term: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y) * (x - y)).sum();

    let ea = clipped_eigen(sa.clone(), "first covariance")?;
    clipped_eigen(sb.clone(), "second covariance")?;
    let root = ea.recompose_with(libm::sqrt);
    let inner = &root * &sb * &root;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross: f64 = clipped_eigen(inner, "covariance product")?.eigenvalues.iter().map(|&v| libm::sqrt(v)).sum();
    Ok((mean_term + sa.trace() + sb.trace() - 2.0 * cross).max(0.0))
}

trait Recompose {
    fn recompose_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64>;
}

impl Recompose for SymmetricEigen<f64, nalgebra::Dyn> {
    fn recompose_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let q = &self.eigenvectors;
        let diag = DMatrix::from_diagonal(&self.eigenvalues.map(f));
        q * diag * q.transpose()
    }
}

/// Prior-level FID between all mean-mode frames generated on the library
/// grid and all library frames.
pub fn prior_fid<G: TrajectoryGenerator + ?Sized>(generator: &G, library: &ReferenceLibrary) -> Result<f64> {
    let generated = motion_stats(&batch_frames(&generate_library_grid(generator, library)?))?;
    let reference = motion_stats(&sequence_frames(library.sequences()))?;
    fid(&reference, &generated)
}

/// Command velocities 0, 0.1, …, 6.0 m/s.
pub fn default_command_grid() -> Vec<f64> {
    (0..=60).map(|i| i as f64 / 10.0).collect()
}

/// Mean absolute joint deviation of `actual` from `reference`, paired by
/// command, over joints, commands and timesteps.
pub fn imitation_error(actual: &[TrajectoryBatch], reference: &[TrajectoryBatch]) -> Result<f64> {
    if actual.is_empty() || actual.len() != reference.len() {
        return Err(invalid!("command grids differ: {} actual vs {} reference", actual.len(), reference.len()));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (k, (a, r)) in actual.iter().zip(reference).enumerate() {
        if a.times != r.times || a.is_empty() {
            return Err(invalid!("time grids differ at command {k}"));
        }
        for j in JointId::ALL {
            sum += a.joint(j).iter().zip(r.joint(j)).map(|(x, y)| libm::fabs(x - y)).sum::<f64>();
        }
        count += a.len() * JOINT_COUNT;
    }
    Ok(sum / count as f64)
}

/// Commanded and measured forward velocities, paired.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityTrace {
    commanded: Vec<f64>,
    measured: Vec<f64>,
}

impl VelocityTrace {
    pub fn new(commanded: Vec<f64>, measured: Vec<f64>) -> Result<Self> {
        if commanded.len() != measured.len() {
            return Err(invalid!("{} commands but {} measurements", commanded.len(), measured.len()));
        }
        if commanded.iter().chain(&measured).any(|v| !v.is_finite()) {
            return Err(invalid!("velocity trace holds non-finite values"));
        }
        Ok(Self { commanded, measured })
    }

    pub fn commanded(&self) -> &[f64] {
        &self.commanded
    }

    pub fn measured(&self) -> &[f64] {
        &self.measured
    }

    pub fn len(&self) -> usize {
        self.commanded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commanded.is_empty()
    }
}

pub fn velocity_tracking_error(trace: &VelocityTrace) -> Result<f64> {
    if trace.is_empty() {
        return Err(invalid!("empty velocity trace"));
    }
    let sum: f64 = trace.commanded.iter().zip(&trace.measured).map(|(c, v)| libm::fabs(c - v)).sum();
    Ok(sum / trace.len() as f64)
}
