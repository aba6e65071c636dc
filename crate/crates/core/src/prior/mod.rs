//! Frequency-conditioned trajectory prior: a variational encoder over the
//! gait frequency, a FiLM generator driven by `[z, f̂]`, and a SiLU decoder
//! from harmonic features to the ten joint positions.

mod generate;
mod layers;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::harmonics::{HarmonicVector, DEFAULT_HARMONICS};
use crate::joints::JOINT_COUNT;

pub use generate::{GenerationMode, TrajectoryBatch};
pub use layers::{silu, Linear};
pub(crate) use layers::{axpy, silu_grad};

/// Centre and half-width of the operating band; `(f - F_MID) / F_HALF` maps
/// 0.6–2.3 Hz onto [-1, 1].
pub const F_MID: f64 = 1.45;
pub const F_HALF: f64 = 0.85;
pub const LOGVAR_MIN: f64 = -10.0;
pub const LOGVAR_MAX: f64 = 4.0;
/// Half-range of the FiLM scale and shift around (1, 0).
pub const FILM_BOUND: f64 = 0.1;

pub fn normalize_frequency(frequency: f64) -> Result<f64> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(invalid!("frequency must be positive, got {frequency}"));
    }
    Ok((frequency - F_MID) / F_HALF)
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Architecture {
    pub latent_dim: usize,
    pub encoder_hidden: usize,
    pub decoder_widths: Vec<usize>,
    pub harmonics: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self { latent_dim: 8, encoder_hidden: 32, decoder_widths: vec![128; 3], harmonics: DEFAULT_HARMONICS }
    }
}

impl Architecture {
    pub fn input_width(&self) -> usize {
        2 * self.harmonics
    }

    pub fn output_width(&self) -> usize {
        JOINT_COUNT
    }

    pub fn context_width(&self) -> usize {
        self.latent_dim + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.encoder_hidden == 0 || self.harmonics == 0 {
            return Err(invalid!("latent, encoder and harmonic sizes must be positive"));
        }
        if self.decoder_widths.is_empty() || self.decoder_widths.contains(&0) {
            return Err(invalid!("decoder needs at least one hidden layer of positive width"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentParams {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn reparameterize(mu: &[f64], logvar: &[f64], epsilon: &[f64]) -> Result<LatentSample> {
    if mu.len() != logvar.len() || mu.len() != epsilon.len() {
        return Err(invalid!(
            "latent shapes differ: mu {}, logvar {}, epsilon {}",
            mu.len(),
            logvar.len(),
            epsilon.len()
        ));
    }
    let z = mu
        .iter()
        .zip(logvar)
        .zip(epsilon)
        .map(|((m, lv), e)| m + libm::exp(0.5 * lv) * e)
        .collect();
    Ok(LatentSample { mu: mu.to_vec(), logvar: logvar.to_vec(), epsilon: epsilon.to_vec(), z })
}

/// Per-layer feature-wise scale and shift.
#[derive(Debug, Clone, PartialEq)]
pub struct Film {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilmGenerator {
    pub(crate) gamma: Linear,
    pub(crate) beta: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorModel {
    pub(crate) architecture: Architecture,
    pub(crate) encoder_hidden: Linear,
    pub(crate) encoder_output: Linear,
    pub(crate) films: Vec<FilmGenerator>,
    pub(crate) hidden: Vec<Linear>,
    pub(crate) output: Linear,
}

impl PriorModel {
    pub const FORMAT_VERSION: u32 = 1;

    /// All parameters zero: `μ = 0`, `logσ² = 0`, identity FiLM, zero output.
    pub fn zeros(architecture: Architecture) -> Result<Self> {
        Self::build(architecture, Linear::zeros)
    }

    /// Glorot-uniform weights and zero biases drawn from a seeded stream.
    pub fn new(architecture: Architecture, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(architecture, |i, o| Linear::glorot(i, o, &mut rng))
    }

    fn build(architecture: Architecture, mut make: impl FnMut(usize, usize) -> Linear) -> Result<Self> {
        architecture.validate()?;
        let a = &architecture;
        let encoder_hidden = make(1, a.encoder_hidden);
        let encoder_output = make(a.encoder_hidden, 2 * a.latent_dim);
        let mut films = Vec::new();
        let mut hidden = Vec::new();
        let mut width = a.input_width();
        for &w in &a.decoder_widths {
            films.push(FilmGenerator { gamma: make(a.context_width(), w), beta: make(a.context_width(), w) });
            hidden.push(make(width, w));
            width = w;
        }
        let output = make(width, a.output_width());
        Ok(Self { architecture, encoder_hidden, encoder_output, films, hidden, output })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn format_version(&self) -> u32 {
        Self::FORMAT_VERSION
    }

    pub fn output_layer(&self) -> &Linear {
        &self.output
    }

    pub fn output_layer_mut(&mut self) -> &mut Linear {
        &mut self.output
    }

    pub fn hidden_layers_mut(&mut self) -> &mut [Linear] {
        &mut self.hidden
    }

    pub fn film_layers_mut(&mut self) -> impl Iterator<Item = (&mut Linear, &mut Linear)> {
        self.films.iter_mut().map(|f| (&mut f.gamma, &mut f.beta))
    }

    pub fn encoder_layers_mut(&mut self) -> (&mut Linear, &mut Linear) {
        (&mut self.encoder_hidden, &mut self.encoder_output)
    }

    fn layers(&self) -> Vec<(String, &Linear)> {
        let mut out = vec![
            (String::from("encoder.hidden"), &self.encoder_hidden),
            (String::from("encoder.output"), &self.encoder_output),
        ];
        for (l, (film, layer)) in self.films.iter().zip(&self.hidden).enumerate() {
            out.push((format!("film.{l}.gamma"), &film.gamma));
            out.push((format!("film.{l}.beta"), &film.beta));
            out.push((format!("decoder.{l}"), layer));
        }
        out.push((String::from("decoder.output"), &self.output));
        out
    }

    fn layers_mut(&mut self) -> Vec<&mut Linear> {
        let mut out = vec![&mut self.encoder_hidden, &mut self.encoder_output];
        for (film, layer) in self.films.iter_mut().zip(self.hidden.iter_mut()) {
            out.push(&mut film.gamma);
            out.push(&mut film.beta);
            out.push(layer);
        }
        out.push(&mut self.output);
        out
    }

    /// Named parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (name, layer) in self.layers() {
            out.push((format!("{name}.weight"), layer.weight.as_slice()));
            out.push((format!("{name}.bias"), layer.bias.as_slice()));
        }
        out
    }

    /// Mutable views in the same order as [`tensors`](Self::tensors).
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in self.layers_mut() {
            out.push(layer.weight.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out
    }

    /// Rebuilds a model from tensors listed as by [`tensors`](Self::tensors).
    pub fn from_tensors(architecture: Architecture, tensors: &[(String, Vec<f64>)]) -> Result<Self> {
        let mut model = Self::zeros(architecture)?;
        let expected: Vec<(String, usize)> = model.tensors().into_iter().map(|(n, t)| (n, t.len())).collect();
        if tensors.len() != expected.len() {
            return Err(invalid!("expected {} tensors, got {}", expected.len(), tensors.len()));
        }
        for ((name, len), (given, values)) in expected.iter().zip(tensors) {
            if name != given || *len != values.len() {
                return Err(invalid!("tensor `{given}` ({} values) does not match `{name}` ({len})", values.len()));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(invalid!("tensor `{given}` holds non-finite values"));
            }
        }
        for (slot, (_, values)) in model.tensors_mut().into_iter().zip(tensors) {
            slot.copy_from_slice(values);
        }
        Ok(model)
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    pub fn encode(&self, frequency: f64) -> Result<LatentParams> {
        let f = normalize_frequency(frequency)?;
        let mut h = vec![0.0; self.architecture.encoder_hidden];
        self.encoder_hidden.apply(&[f], &mut h);
        h.iter_mut().for_each(|v| *v = silu(*v));
        let mut out = vec![0.0; 2 * self.architecture.latent_dim];
        self.encoder_output.apply(&h, &mut out);
        let logvar = out.split_off(self.architecture.latent_dim);
        let logvar = logvar.into_iter().map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX)).collect();
        let params = LatentParams { mu: out, logvar };
        if params.mu.iter().chain(&params.logvar).any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: 0, quantity: "latent parameters" });
        }
        Ok(params)
    }

    pub fn film_modulation(&self, context: &[f64]) -> Result<Vec<Film>> {
        if context.len() != self.architecture.context_width() {
            return Err(invalid!(
                "FiLM context has {} entries, expected {}",
                context.len(),
                self.architecture.context_width()
            ));
        }
        Ok(self
            .films
            .iter()
            .map(|g| {
                let mut gamma = vec![0.0; g.gamma.outputs];
                let mut beta = vec![0.0; g.beta.outputs];
                g.gamma.apply(context, &mut gamma);
                g.beta.apply(context, &mut beta);
                gamma.iter_mut().for_each(|v| *v = 1.0 + FILM_BOUND * libm::tanh(*v));
                beta.iter_mut().for_each(|v| *v = FILM_BOUND * libm::tanh(*v));
                Film { gamma, beta }
            })
            .collect())
    }

    /// Context `[z, f̂]` for the FiLM generator.
    pub fn context(&self, z: &[f64], frequency: f64) -> Result<Vec<f64>> {
        if z.len() != self.architecture.latent_dim {
            return Err(invalid!("latent has {} entries, expected {}", z.len(), self.architecture.latent_dim));
        }
        let mut c = z.to_vec();
        c.push(normalize_frequency(frequency)?);
        Ok(c)
    }

    pub fn decode(&self, x: &HarmonicVector, films: &[Film]) -> Result<[f64; JOINT_COUNT]> {
        self.decode_features(&x.values, films)
    }

    pub fn decode_features(&self, x: &[f64], films: &[Film]) -> Result<[f64; JOINT_COUNT]> {
        if x.len() != self.architecture.input_width() {
            return Err(invalid!("decoder input has {} entries, expected {}", x.len(), self.architecture.input_width()));
        }
        if films.len() != self.hidden.len()
            || films.iter().zip(&self.hidden).any(|(f, l)| f.gamma.len() != l.outputs || f.beta.len() != l.outputs)
        {
            return Err(invalid!("FiLM parameters do not match the decoder layers"));
        }
        let mut h = x.to_vec();
        for (layer, film) in self.hidden.iter().zip(films) {
            let mut next = vec![0.0; layer.outputs];
            layer.apply(&h, &mut next);
            for ((v, g), b) in next.iter_mut().zip(&film.gamma).zip(&film.beta) {
                *v = silu(g * *v + b);
            }
            h = next;
        }
        let mut y = [0.0; JOINT_COUNT];
        self.output.apply(&h, &mut y);
        Ok(y)
    }

    /// The latent used by `mode` at `frequency`: `μ` in mean mode, otherwise
    /// one seeded standard-normal draw through the reparameterization.
    pub fn latent(&self, frequency: f64, mode: GenerationMode) -> Result<LatentSample> {
        let p = self.encode(frequency)?;
        let epsilon = match mode {
            GenerationMode::Mean => vec![0.0; p.mu.len()],
            GenerationMode::Sample { seed } => standard_normal(seed, p.mu.len()),
        };
        reparameterize(&p.mu, &p.logvar, &epsilon)
    }
}

pub(crate) fn standard_normal(seed: u64, n: usize) -> Vec<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
}
