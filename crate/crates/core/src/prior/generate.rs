use alloc::vec;
use alloc::vec::Vec;

use super::PriorModel;
use crate::error::{invalid, Result};
use crate::harmonics::encode_into;
use crate::joints::{JointId, JOINT_COUNT};
use crate::reflib::MotionSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum GenerationMode {
    /// `z = μ`.
    Mean,
    Sample { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub frequency: f64,
    pub times: Vec<f64>,
    pub joints: [Vec<f64>; JOINT_COUNT],
    pub mode: GenerationMode,
    /// The single latent shared by every timestep.
    pub latent: Vec<f64>,
}

impl TrajectoryBatch {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn joint(&self, joint: JointId) -> &[f64] {
        &self.joints[joint.index()]
    }

    pub fn frame(&self, i: usize) -> [f64; JOINT_COUNT] {
        core::array::from_fn(|j| self.joints[j][i])
    }

    /// Sample rate implied by a uniform time grid.
    pub fn sample_rate(&self) -> Option<f64> {
        match self.times.as_slice() {
            [a, b, ..] if b > a => Some(1.0 / (b - a)),
            _ => None,
        }
    }

    pub fn to_sequence(&self, name: &str, velocity: f64) -> Result<MotionSequence> {
        let rate = self.sample_rate().ok_or_else(|| invalid!("trajectory needs two increasing timestamps"))?;
        MotionSequence::new(name, velocity, rate, self.joints.clone())
    }
}

impl PriorModel {
    /// Trajectory on the grid `t_i = i / rate`, `i < round(duration · rate)`.
    pub fn generate_trajectory(&self, frequency: f64, duration: f64, rate: f64, mode: GenerationMode) -> Result<TrajectoryBatch> {
        if !(duration.is_finite() && duration > 0.0 && rate.is_finite() && rate > 0.0) {
            return Err(invalid!("duration and rate must be positive"));
        }
        let len = libm::round(duration * rate) as usize;
        let times: Vec<f64> = (0..len).map(|i| i as f64 / rate).collect();
        self.generate_at(frequency, &times, mode)
    }

    pub fn generate_at(&self, frequency: f64, times: &[f64], mode: GenerationMode) -> Result<TrajectoryBatch> {
        let latent = self.latent(frequency, mode)?;
        let mut batch = self.generate_with_latent(frequency, times, &latent.z)?;
        batch.mode = mode;
        Ok(batch)
    }

    /// Decodes with an explicit latent `z`; reported as mean mode.
    pub fn generate_with_latent(&self, frequency: f64, times: &[f64], z: &[f64]) -> Result<TrajectoryBatch> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(invalid!("timestamps must be finite"));
        }
        let context = self.context(z, frequency)?;
        let films = self.film_modulation(&context)?;
        let mut joints: [Vec<f64>; JOINT_COUNT] = Default::default();
        joints.iter_mut().for_each(|j| j.reserve(times.len()));
        let mut x = vec![0.0; self.architecture.input_width()];
        for &t in times {
            encode_into(t, frequency, &mut x);
            let y = self.decode_features(&x, &films)?;
            for (channel, v) in joints.iter_mut().zip(y) {
                channel.push(v);
            }
        }
        Ok(TrajectoryBatch { frequency, times: times.to_vec(), joints, mode: GenerationMode::Mean, latent: z.to_vec() })
    }
}
