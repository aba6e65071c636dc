//! Training of the prior on a reference library: composite loss, analytic
//! gradients, Adam and the epoch loop.

mod adam;
mod backward;

use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::harmonics::harmonic_encode;
use crate::joints::JOINT_COUNT;
use crate::prior::{reparameterize, Architecture, PriorModel, TrajectoryBatch};
use crate::reflib::{MotionSequence, ReferenceLibrary};

pub use adam::{clip_global_norm, AdamState};
pub use backward::loss_and_gradients;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub beta_kl: f64,
    pub learning_rate: f64,
    /// Final learning rate as a fraction of `learning_rate` under cosine
    /// decay; 1 keeps the rate constant.
    pub final_lr_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub epochs: usize,
    /// Timesteps per optimizer step.
    pub batch_size: usize,
    pub seed: u64,
    pub clip_norm: f64,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta_kl: 1e-3,
            learning_rate: 1e-3,
            final_lr_fraction: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            epochs: 2000,
            batch_size: 256,
            seed: 0,
            clip_norm: 5.0,
            architecture: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("adam_epsilon", self.adam_epsilon),
            ("clip_norm", self.clip_norm),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid!("{name} must be positive, got {v}"));
            }
        }
        if !(self.beta_kl.is_finite() && self.beta_kl >= 0.0) {
            return Err(invalid!("beta_kl must be non-negative, got {}", self.beta_kl));
        }
        if !(0.0..=1.0).contains(&self.final_lr_fraction) {
            return Err(invalid!("final_lr_fraction must lie in [0, 1]"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(invalid!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if self.batch_size == 0 {
            return Err(invalid!("batch_size must be positive"));
        }
        self.architecture.validate()
    }

    /// Learning rate for optimizer step `step` of `total`.
    pub fn learning_rate_at(&self, step: usize, total: usize) -> f64 {
        if self.final_lr_fraction >= 1.0 || total <= 1 {
            return self.learning_rate;
        }
        let progress = step as f64 / (total - 1) as f64;
        let cosine = 0.5 * (1.0 + libm::cos(core::f64::consts::PI * progress));
        self.learning_rate * (self.final_lr_fraction + (1.0 - self.final_lr_fraction) * cosine)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

impl LossBreakdown {
    pub fn new(reconstruction: f64, kl: f64, beta_kl: f64) -> Self {
        Self { total: reconstruction + beta_kl * kl, reconstruction, kl }
    }

    fn mean(items: &[LossBreakdown]) -> Self {
        let n = items.len() as f64;
        let mut out = Self::default();
        for l in items {
            out.total += l.total / n;
            out.reconstruction += l.reconstruction / n;
            out.kl += l.kl / n;
        }
        out
    }
}

/// Mean squared joint error between a generated batch and a reference on the
/// same time grid.
pub fn reconstruction_loss(generated: &TrajectoryBatch, reference: &MotionSequence) -> Result<f64> {
    if generated.len() != reference.len() || generated.is_empty() {
        return Err(invalid!("generated ({}) and reference ({}) lengths differ", generated.len(), reference.len()));
    }
    let rate = reference.sample_rate();
    for (i, &t) in generated.times.iter().enumerate() {
        let expected = i as f64 / rate;
        if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(invalid!("timestamp {i} is {t}, reference grid has {expected}"));
        }
    }
    let mut sum = 0.0;
    for (g, r) in generated.joints.iter().zip(reference.channels()) {
        sum += g.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(sum / (generated.len() * JOINT_COUNT) as f64)
}

/// Closed-form KL divergence of `N(μ, diag σ²)` from `N(0, I)`.
pub fn kl_loss(mu: &[f64], logvar: &[f64]) -> Result<f64> {
    if mu.len() != logvar.len() {
        return Err(invalid!("mu has {} entries, logvar {}", mu.len(), logvar.len()));
    }
    Ok(0.5 * mu.iter().zip(logvar).map(|(m, lv)| m * m + libm::exp(*lv) - lv - 1.0).sum::<f64>())
}

/// One optimizer step's worth of supervision: timesteps of a single
/// reference at its primary frequency, with the step's latent noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub frequency: f64,
    pub times: Vec<f64>,
    /// Row-major `times.len() × 10` joint targets.
    pub targets: Vec<f64>,
    pub epsilon: Vec<f64>,
}

impl Batch {
    pub fn from_sequence(sequence: &MotionSequence, frequency: f64, indices: &[usize], epsilon: Vec<f64>) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= sequence.len()) {
            return Err(invalid!("sample index {i} out of range for {} samples", sequence.len()));
        }
        let rate = sequence.sample_rate();
        let times = indices.iter().map(|&i| i as f64 / rate).collect();
        let targets = indices.iter().flat_map(|&i| sequence.frame(i)).collect();
        Ok(Self { frequency, times, targets, epsilon })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn validate(&self, model: &PriorModel) -> Result<()> {
        if self.times.is_empty() {
            return Err(invalid!("empty batch"));
        }
        if self.targets.len() != self.times.len() * JOINT_COUNT {
            return Err(invalid!("batch targets do not match its timesteps"));
        }
        if self.epsilon.len() != model.architecture().latent_dim {
            return Err(invalid!("batch noise has {} entries, latent has {}", self.epsilon.len(), model.architecture().latent_dim));
        }
        Ok(())
    }
}

/// Composite loss of `batch` evaluated one timestep at a time through the
/// public model interface.
pub fn evaluate_loss(model: &PriorModel, batch: &Batch, beta_kl: f64) -> Result<LossBreakdown> {
    batch.validate(model)?;
    let p = model.encode(batch.frequency)?;
    let sample = reparameterize(&p.mu, &p.logvar, &batch.epsilon)?;
    let films = model.film_modulation(&model.context(&sample.z, batch.frequency)?)?;
    let k = model.architecture().harmonics;
    let mut sum = 0.0;
    for (&t, target) in batch.times.iter().zip(batch.targets.chunks_exact(JOINT_COUNT)) {
        let y = model.decode(&harmonic_encode(t, batch.frequency, k)?, &films)?;
        sum += y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let reconstruction = sum / (batch.len() * JOINT_COUNT) as f64;
    Ok(LossBreakdown::new(reconstruction, kl_loss(&p.mu, &p.logvar)?, beta_kl))
}

/// Parameter gradients laid out like the model they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub(crate) model: PriorModel,
}

impl Gradients {
    pub fn zeros(model: &PriorModel) -> Self {
        let mut g = model.clone();
        for t in g.tensors_mut() {
            t.fill(0.0);
        }
        Self { model: g }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.model.tensors().into_iter().map(|(_, t)| t).collect()
    }

    pub fn named(&self) -> Vec<(alloc::string::String, &[f64])> {
        self.model.tensors()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.model.tensors_mut()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.tensors().iter().flat_map(|t| t.iter()).map(|g| g * g).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.model.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: PriorModel,
    /// Mean step loss of each epoch, measured before each update.
    pub history: Vec<LossBreakdown>,
}

/// Everything needed to resume generation from a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: PriorModel,
    pub config: TrainConfig,
    pub epoch: usize,
    pub history: Vec<LossBreakdown>,
    /// Velocity → frequency knots of the library the model was trained on.
    pub velocity_frequency_pairs: Vec<(f64, f64)>,
}

impl Checkpoint {
    pub const FORMAT_VERSION: u32 = PriorModel::FORMAT_VERSION;
}

pub fn train(library: &ReferenceLibrary, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(library, config, |_, _| {})
}

/// As [`train`], reporting each finished epoch to `on_epoch`.
///
/// Every epoch takes one step per library entry in order. A step draws
/// `batch_size` distinct timesteps of that entry and fresh latent noise.
pub fn train_with(
    library: &ReferenceLibrary,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &LossBreakdown),
) -> Result<TrainOutcome> {
    config.validate()?;
    if library.is_empty() {
        return Err(invalid!("cannot train on an empty library"));
    }
    let mut model = PriorModel::new(config.architecture.clone(), config.seed)?;
    let mut adam = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let dz = config.architecture.latent_dim;
    let total_steps = config.epochs * library.len();
    let mut history = Vec::with_capacity(config.epochs);
    let mut step = 0;
    let mut epoch_losses = Vec::with_capacity(library.len());
    for epoch in 0..config.epochs {
        epoch_losses.clear();
        for (frequency, sequence) in library.entries() {
            let n = sequence.len();
            let indices: Vec<usize> =
                if config.batch_size >= n { (0..n).collect() } else { index::sample(&mut rng, n, config.batch_size).into_vec() };
            let epsilon: Vec<f64> = (0..dz).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            let batch = Batch::from_sequence(sequence, frequency, &indices, epsilon)?;
            let (loss, mut grads) = loss_and_gradients(&model, &batch, config.beta_kl).map_err(|e| at_step(e, step))?;
            adam.step(&mut model, &mut grads, config, config.learning_rate_at(step, total_steps));
            if !model.is_finite() {
                return Err(Error::Diverged { step, quantity: "parameters" });
            }
            epoch_losses.push(loss);
            step += 1;
        }
        let mean = LossBreakdown::mean(&epoch_losses);
        on_epoch(epoch, &mean);
        history.push(mean);
    }
    Ok(TrainOutcome { model, history })
}

fn at_step(err: Error, step: usize) -> Error {
    match err {
        Error::Diverged { quantity, .. } => Error::Diverged { step, quantity },
        other => other,
    }
}
