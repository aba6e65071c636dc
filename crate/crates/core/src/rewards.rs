//! Policy reward stack evaluated offline over recorded robot state frames.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::joints::{JointId, JOINT_COUNT};
use crate::reflib::FrequencyMap;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FootState {
    pub contact: bool,
    /// Height above ground (m).
    pub height: f64,
    /// Magnitude of the velocity tangent to the ground (m/s).
    pub tangential_speed: f64,
    /// Lateral position in the base frame (m).
    pub lateral: f64,
    /// Time since the last lift-off, reset on touchdown (s).
    pub air_time: f64,
    /// Gravity projected into the foot frame, x and y components.
    pub gravity_xy: [f64; 2],
}

impl FootState {
    pub fn airborne(&self) -> bool {
        !self.contact
    }
}

/// One control tick of robot state; joint arrays follow [`JointId`] order
/// and feet are `[left, right]`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RobotStateFrame {
    pub q: [f64; JOINT_COUNT],
    pub qd: [f64; JOINT_COUNT],
    pub qdd: [f64; JOINT_COUNT],
    pub torque: [f64; JOINT_COUNT],
    pub base_angular_velocity: [f64; 3],
    /// Body-frame gravity components `g_x`, `g_y`.
    pub projected_gravity: [f64; 2],
    pub base_height: f64,
    pub feet: [FootState; 2],
    /// Measured forward velocity (m/s).
    pub planar_velocity: f64,
    pub terminated: bool,
}

impl RobotStateFrame {
    pub const MIN_FOOT_HEIGHT: f64 = -0.01;

    pub fn validate(&self) -> Result<()> {
        let scalars = self
            .q
            .iter()
            .chain(&self.qd)
            .chain(&self.qdd)
            .chain(&self.torque)
            .chain(&self.base_angular_velocity)
            .chain(&self.projected_gravity)
            .chain([&self.base_height, &self.planar_velocity]);
        let feet = self.feet.iter().flat_map(|f| [f.height, f.tangential_speed, f.lateral, f.air_time, f.gravity_xy[0], f.gravity_xy[1]]);
        if scalars.copied().chain(feet).any(|v| !v.is_finite()) {
            return Err(invalid!("state frame holds non-finite values"));
        }
        if let Some(f) = self.feet.iter().find(|f| f.height < Self::MIN_FOOT_HEIGHT) {
            return Err(invalid!("foot height {} m is below ground tolerance", f.height));
        }
        if self.feet.iter().any(|f| f.air_time < 0.0) {
            return Err(invalid!("air time must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CommandState {
    /// Raw forward command (m/s).
    pub raw_velocity: f64,
    /// Acceleration-limited command (m/s).
    pub filtered_velocity: f64,
    /// Yaw-rate command (rad/s).
    pub angular_velocity: f64,
    /// Gait frequency of the filtered command (Hz).
    pub frequency: f64,
}

impl CommandState {
    pub fn new(raw_velocity: f64, filtered_velocity: f64, angular_velocity: f64, map: &FrequencyMap) -> Self {
        Self { raw_velocity, filtered_velocity, angular_velocity, frequency: map.frequency(filtered_velocity) }
    }
}

/// Printed weights of the supplementary feet and regularization terms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableWeights {
    pub close_feet: f64,
    pub feet_air_height: f64,
    pub low_speed_air: f64,
    pub high_speed_ground: f64,
    pub feet_ground_parallel: f64,
    pub feet_slide: f64,
    pub alive: f64,
    pub torque: f64,
    pub joint_accel: f64,
    pub joint_limits: f64,
    pub joint_vel: f64,
    pub roll_pitch_ang_vel: f64,
    pub base_height: f64,
}

impl Default for TableWeights {
    fn default() -> Self {
        Self {
            close_feet: -100.0,
            feet_air_height: 5.0,
            low_speed_air: -6.0,
            high_speed_ground: -3.0,
            feet_ground_parallel: 1.0,
            feet_slide: -10.0,
            alive: 1.0,
            torque: -5e-6,
            joint_accel: -2e-8,
            joint_limits: -10.0,
            joint_vel: -5e-4,
            roll_pitch_ang_vel: -0.5,
            base_height: -30.0,
        }
    }
}

/// Joint position limits `(min, max)` in radians.
pub fn default_joint_limits() -> [(f64, f64); JOINT_COUNT] {
    JointId::ALL.map(|j| match j {
        JointId::LeftHipPitch | JointId::RightHipPitch => (-2.5, 2.9),
        JointId::LeftKnee | JointId::RightKnee => (-0.09, 2.9),
        JointId::LeftAnklePitch | JointId::RightAnklePitch => (-0.87, 0.52),
        JointId::LeftShoulderPitch | JointId::RightShoulderPitch => (-3.0, 2.6),
        JointId::LeftElbow | JointId::RightElbow => (-1.0, 2.1),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardConfig {
    pub w_v: f64,
    pub w_omega: f64,
    pub w_p: f64,
    pub w_a: f64,
    pub w_t: f64,
    pub sigma_v: f64,
    pub sigma_omega: f64,
    pub sigma_q: f64,
    /// Command acceleration limit (m/s²).
    pub accel_limit: f64,
    pub dt: f64,
    /// Residual action gain.
    pub alpha: f64,
    pub swing_duty: f64,
    pub d_min: f64,
    pub h_ref: f64,
    pub sigma_feet: f64,
    pub z_target: f64,
    pub low_speed: f64,
    pub high_speed: f64,
    pub table: TableWeights,
    pub joint_limits: [(f64, f64); JOINT_COUNT],
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_v: 3.0,
            w_omega: 1.0,
            w_p: 2.0,
            w_a: 2.0,
            w_t: -1.0,
            sigma_v: 0.25,
            sigma_omega: 0.25,
            sigma_q: 0.25,
            accel_limit: 2.0,
            dt: 0.02,
            alpha: 0.25,
            swing_duty: 0.4,
            d_min: 0.10,
            h_ref: 0.12,
            sigma_feet: 0.05,
            z_target: 0.72,
            low_speed: 1.5,
            high_speed: 3.0,
            table: TableWeights::default(),
            joint_limits: default_joint_limits(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_v", self.sigma_v),
            ("sigma_omega", self.sigma_omega),
            ("sigma_q", self.sigma_q),
            ("sigma_feet", self.sigma_feet),
            ("accel_limit", self.accel_limit),
            ("dt", self.dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.swing_duty) {
            return Err(invalid!("swing_duty must lie in [0, 1]"));
        }
        if self.joint_limits.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(invalid!("every joint limit needs min <= max"));
        }
        Ok(())
    }
}

/// Acceleration-limited command: moves `previous` toward `command` by at
/// most `accel_limit · dt`.
pub fn filter_command(previous: f64, command: f64, accel_limit: f64, dt: f64) -> f64 {
    let step = accel_limit * dt;
    previous + (command - previous).clamp(-step, step)
}

fn kernel(weight: f64, error_sq: f64, sigma: f64) -> f64 {
    weight * libm::exp(-error_sq / sigma)
}

pub fn lin_vel_reward(filtered_command: f64, velocity: f64, w_v: f64, sigma_v: f64) -> f64 {
    let e = filtered_command - velocity;
    kernel(w_v, e * e, sigma_v)
}

pub fn ang_vel_reward(command: f64, yaw_rate: f64, w_omega: f64, sigma_omega: f64) -> f64 {
    let e = command - yaw_rate;
    kernel(w_omega, e * e, sigma_omega)
}

pub fn prior_guidance_reward(q: &[f64], q_ref: &[f64], w_p: f64, sigma_q: f64) -> Result<f64> {
    if q.len() != JOINT_COUNT || q_ref.len() != JOINT_COUNT {
        return Err(invalid!("prior guidance needs {JOINT_COUNT} joints, got {} and {}", q.len(), q_ref.len()));
    }
    Ok(w_p * q.iter().zip(q_ref).map(|(a, b)| libm::exp(-(a - b) * (a - b) / sigma_q)).sum::<f64>())
}

/// Minimum swing time `D_swing / f_cmd`.
pub fn target_air_time(frequency: f64, swing_duty: f64) -> Result<f64> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(invalid!("command frequency must be positive, got {frequency}"));
    }
    Ok(swing_duty / frequency)
}

pub fn feet_air_reward(frame: &RobotStateFrame, target: f64, w_a: f64) -> f64 {
    w_a * frame.feet.iter().filter(|f| f.airborne()).map(|f| (target - f.air_time).max(0.0)).sum::<f64>()
}

/// Squared excursion of `g_x` outside `[0, 0.1 + 0.05 v_cmd]`, weighted.
pub fn torso_pitch_penalty(g_x: f64, command_velocity: f64, w_t: f64) -> f64 {
    let forward = 0.1 + 0.05 * command_velocity;
    let backward = 0.0;
    let excess = (g_x - forward).max(0.0) + (backward - g_x).max(0.0);
    w_t * excess * excess
}

/// Weighted value of every supplementary feet and regularization term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableTerms {
    pub close_feet: f64,
    pub feet_air_height: f64,
    pub low_speed_air: f64,
    pub high_speed_ground: f64,
    pub feet_ground_parallel: f64,
    pub feet_slide: f64,
    pub alive: f64,
    pub torque: f64,
    pub joint_accel: f64,
    pub joint_limits: f64,
    pub joint_vel: f64,
    pub roll_pitch_ang_vel: f64,
    pub base_height: f64,
}

impl TableTerms {
    pub const NAMES: [&'static str; 13] = [
        "close_feet",
        "feet_air_height",
        "low_speed_air",
        "high_speed_ground",
        "feet_ground_parallel",
        "feet_slide",
        "alive",
        "torque",
        "joint_accel",
        "joint_limits",
        "joint_vel",
        "roll_pitch_ang_vel",
        "base_height",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.close_feet,
            self.feet_air_height,
            self.low_speed_air,
            self.high_speed_ground,
            self.feet_ground_parallel,
            self.feet_slide,
            self.alive,
            self.torque,
            self.joint_accel,
            self.joint_limits,
            self.joint_vel,
            self.roll_pitch_ang_vel,
            self.base_height,
        ]
    }
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn table_rewards(frame: &RobotStateFrame, config: &RewardConfig) -> TableTerms {
    let w = &config.table;
    let [left, right] = &frame.feet;
    let gap = libm::fabs(left.lateral - right.lateral);
    let both_air = left.airborne() && right.airborne();
    let both_ground = left.contact && right.contact;
    let v = frame.planar_velocity;
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };

    let air_height: f64 = frame
        .feet
        .iter()
        .filter(|f| f.airborne())
        .map(|f| libm::exp(-libm::fabs(f.height - config.h_ref) / config.sigma_feet))
        .sum();
    let parallel: f64 = frame
        .feet
        .iter()
        .filter(|f| f.contact)
        .map(|f| libm::exp(-libm::hypot(f.gravity_xy[0], f.gravity_xy[1])))
        .sum();
    let slide: f64 = frame.feet.iter().filter(|f| f.contact).map(|f| f.tangential_speed).sum();
    let outside = frame
        .q
        .iter()
        .zip(&config.joint_limits)
        .filter(|(q, (lo, hi))| !(lo..=hi).contains(q))
        .count() as f64;
    let dz = frame.base_height - config.z_target;
    let [wx, wy, _] = frame.base_angular_velocity;

    TableTerms {
        close_feet: w.close_feet * (config.d_min - gap).max(0.0),
        feet_air_height: w.feet_air_height * air_height,
        low_speed_air: w.low_speed_air * indicator(v < config.low_speed && both_air),
        high_speed_ground: w.high_speed_ground * indicator(v > config.high_speed && both_ground),
        feet_ground_parallel: w.feet_ground_parallel * parallel,
        feet_slide: w.feet_slide * slide,
        alive: w.alive * (1.0 - indicator(frame.terminated)),
        torque: w.torque * sum_sq(&frame.torque),
        joint_accel: w.joint_accel * sum_sq(&frame.qdd),
        joint_limits: w.joint_limits * outside,
        joint_vel: w.joint_vel * sum_sq(&frame.qd),
        roll_pitch_ang_vel: w.roll_pitch_ang_vel * (wx * wx + wy * wy),
        base_height: w.base_height * dz * dz,
    }
}

/// `q_ref + α · a_res`.
pub fn compose_target(q_ref: &[f64], residual: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if q_ref.len() != residual.len() {
        return Err(invalid!("reference has {} joints, residual {}", q_ref.len(), residual.len()));
    }
    Ok(q_ref.iter().zip(residual).map(|(q, a)| q + alpha * a).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardBreakdown {
    pub lin_vel: f64,
    pub ang_vel: f64,
    pub prior: f64,
    pub feet_air_time: f64,
    pub torso_pitch: f64,
    pub table: TableTerms,
    pub total: f64,
}

impl RewardBreakdown {
    pub const NAMES: [&'static str; 18] = [
        "lin_vel",
        "ang_vel",
        "prior",
        "feet_air_time",
        "torso_pitch",
        "close_feet",
        "feet_air_height",
        "low_speed_air",
        "high_speed_ground",
        "feet_ground_parallel",
        "feet_slide",
        "alive",
        "torque",
        "joint_accel",
        "joint_limits",
        "joint_vel",
        "roll_pitch_ang_vel",
        "base_height",
    ];

    /// Term values in [`NAMES`](Self::NAMES) order, excluding the total.
    pub fn terms(&self) -> [f64; 18] {
        let t = self.table.values();
        core::array::from_fn(|i| match i {
            0 => self.lin_vel,
            1 => self.ang_vel,
            2 => self.prior,
            3 => self.feet_air_time,
            4 => self.torso_pitch,
            _ => t[i - 5],
        })
    }
}

/// Every reward term for one frame, and their sum.
pub fn total_reward(frame: &RobotStateFrame, command: &CommandState, q_ref: &[f64], config: &RewardConfig) -> Result<RewardBreakdown> {
    frame.validate()?;
    config.validate()?;
    let target = target_air_time(command.frequency, config.swing_duty)?;
    let mut out = RewardBreakdown {
        lin_vel: lin_vel_reward(command.filtered_velocity, frame.planar_velocity, config.w_v, config.sigma_v),
        ang_vel: ang_vel_reward(command.angular_velocity, frame.base_angular_velocity[2], config.w_omega, config.sigma_omega),
        prior: prior_guidance_reward(&frame.q, q_ref, config.w_p, config.sigma_q)?,
        feet_air_time: feet_air_reward(frame, target, config.w_a),
        torso_pitch: torso_pitch_penalty(frame.projected_gravity[0], command.raw_velocity, config.w_t),
        table: table_rewards(frame, config),
        total: 0.0,
    };
    out.total = out.terms().iter().sum();
    Ok(out)
}
