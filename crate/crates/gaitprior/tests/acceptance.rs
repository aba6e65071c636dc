//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are fixed here and never loosened at runtime.

use std::f64::consts::{E, TAU};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gaitprior::checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
use gaitprior::library::save_library;
use gaitprior::sequence::read_meta;
use gaitprior_core::dsp::{
    dft_forward, dft_inverse, dominant_frequency, fourier_resample, phase_offset, power_spectral_density, savitzky_golay,
    Complex64, Signal,
};
use gaitprior_core::metrics::{
    boundary_amplitude_error, boundary_amplitudes, fid, generate_library_grid, imitation_error, l_rec_metric, motion_stats,
    prior_fid, velocity_tracking_error, BoundaryReference, MotionStats, TrajectoryGenerator, VelocityTrace,
    EXTREME_FREQUENCIES,
};
use gaitprior_core::prior::{Architecture, GenerationMode, PriorModel, TrajectoryBatch, FILM_BOUND};
use gaitprior_core::reflib::{canonical_library, canonical_specs, synth_reference, CurationConfig, ReferenceLibrary};
use gaitprior_core::rewards::{
    compose_target, feet_air_reward, filter_command, lin_vel_reward, ang_vel_reward, prior_guidance_reward, table_rewards,
    target_air_time, torso_pitch_penalty, total_reward, CommandState, FootState, RewardConfig, RobotStateFrame,
};
use gaitprior_core::train::{evaluate_loss, loss_and_gradients, train, Batch, Checkpoint, TrainConfig};
use gaitprior_core::{JointId, JOINT_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {:.1} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// 1. gradient oracle

fn tiny_architecture() -> Architecture {
    Architecture { latent_dim: 2, encoder_hidden: 8, decoder_widths: vec![8, 8], harmonics: 3 }
}

fn random_tiny_model(seed: u64) -> PriorModel {
    let mut model = PriorModel::new(tiny_architecture(), seed).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    for t in model.tensors_mut() {
        t.iter_mut().for_each(|v| *v += r.random_range(-0.3..0.3));
    }
    model
}

fn random_batch(seed: u64, rows: usize) -> Batch {
    let mut r = rng(seed);
    Batch {
        frequency: r.random_range(0.6..2.3),
        times: (0..rows).map(|_| r.random_range(0.0..5.0)).collect(),
        targets: (0..rows * JOINT_COUNT).map(|_| r.random_range(-1.0..1.0)).collect(),
        epsilon: (0..2).map(|_| standard_normal(&mut r)).collect(),
    }
}

/// Box–Muller standard normal.
fn standard_normal(r: &mut ChaCha8Rng) -> f64 {
    let (u1, u2): (f64, f64) = (r.random(), r.random());
    (-2.0 * (1.0 - u1).ln()).sqrt() * (TAU * u2).cos()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (h, rel, abs): (f64, f64, f64) = (1e-5, 1e-4, 1e-6);
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut model = random_tiny_model(seed);
        let batch = random_batch(1000 + seed, 6);
        let beta = 0.1 + 0.05 * seed as f64;
        let (_, grads) = loss_and_gradients(&model, &batch, beta).map_err(|e| e.to_string())?;
        let analytic: Vec<(String, Vec<f64>)> = grads.named().into_iter().map(|(n, t)| (n, t.to_vec())).collect();
        for (ti, (name, g)) in analytic.iter().enumerate() {
            for (i, &a) in g.iter().enumerate() {
                let orig = model.tensors()[ti].1[i];
                model.tensors_mut()[ti][i] = orig + h;
                let up = evaluate_loss(&model, &batch, beta).map_err(|e| e.to_string())?.total;
                model.tensors_mut()[ti][i] = orig - h;
                let down = evaluate_loss(&model, &batch, beta).map_err(|e| e.to_string())?.total;
                model.tensors_mut()[ti][i] = orig;
                let numeric = (up - down) / (2.0 * h);
                let err = (a - numeric).abs();
                let scale = a.abs().max(numeric.abs());
                worst = worst.max(err / abs.max(rel * scale));
                ensure(err <= abs || err <= rel * scale, || {
                    format!("model {seed} {name}[{i}]: analytic {a:e}, numeric {numeric:e}")
                })?;
                checked += 1;
            }
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{checked} parameters over 20 models, worst error {worst:.1e} of tolerance"))
}

// ---------------------------------------------------------------------------
// 2 and 3. default training run

struct Trained {
    library: ReferenceLibrary,
    model: PriorModel,
    elapsed: Duration,
}

fn default_training() -> Result<Trained, String> {
    let start = Instant::now();
    let library = canonical_library(&CurationConfig::default()).map_err(|e| e.to_string())?;
    let outcome = train(&library, &TrainConfig::default()).map_err(|e| e.to_string())?;
    Ok(Trained { library, model: outcome.model, elapsed: start.elapsed() })
}

fn criterion_2(trained: &Result<Trained, String>) -> Outcome {
    let t = trained.as_ref().map_err(|e| format!("training failed: {e}"))?;
    ensure(t.library.frequencies() == [0.68, 0.86, 1.25, 1.36, 1.58], || format!("library frequencies {:?}", t.library.frequencies()))?;
    let l_rec = l_rec_metric(&generate_library_grid(&t.model, &t.library).map_err(|e| e.to_string())?, &t.library)
        .map_err(|e| e.to_string())?;
    let fid = prior_fid(&t.model, &t.library).map_err(|e| e.to_string())?;
    let e_ba = boundary_amplitude_error(&t.model, &t.library, &EXTREME_FREQUENCIES, BoundaryReference::Nearest)
        .map_err(|e| e.to_string())?;
    let summary = format!("L_rec {l_rec:.3e}, FID {fid:.3e}, E_BA {e_ba:.3e}, {:.0} s", t.elapsed.as_secs_f64());
    ensure(l_rec <= 2e-3 && fid <= 5e-3 && e_ba <= 0.10, || summary.clone())?;
    within_budget(t.elapsed, Duration::from_secs(600))?;
    Ok(summary)
}

fn criterion_3(trained: &Result<Trained, String>) -> Outcome {
    let t = trained.as_ref().map_err(|e| format!("training failed: {e}"))?;
    let mut worst_rms = 0.0f64;
    for (f, seq) in t.library.entries() {
        let batch = t.model.generate(f, t.library.duration(), t.library.sample_rate()).map_err(|e| e.to_string())?;
        for joint in JointId::ALL {
            let (g, r) = (batch.joint(joint), seq.channel(joint));
            let rms = (g.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / g.len() as f64).sqrt();
            worst_rms = worst_rms.max(rms);
            ensure(rms <= 0.05, || format!("{joint} at {f} Hz: RMS {rms:.4} rad"))?;
        }
    }
    let rows = boundary_amplitudes(&t.model, &t.library, &EXTREME_FREQUENCIES, BoundaryReference::Nearest)
        .map_err(|e| e.to_string())?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for row in &rows {
        for (j, (&a, &b)) in row.at_extreme.iter().zip(&row.at_boundary).enumerate() {
            let ratio = a / b;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            ensure(b > 0.0 && (0.5..=2.0).contains(&ratio), || {
                format!("{} at {} Hz: amplitude {a:.4} vs {b:.4} at {} Hz", JointId::ALL[j], row.extreme, row.boundary)
            })?;
        }
    }
    Ok(format!("worst RMS {worst_rms:.4} rad; extreme/boundary amplitude ratios in [{lo:.3}, {hi:.3}]"))
}

// ---------------------------------------------------------------------------
// 4. DSP

fn random_signal(seed: u64, n: usize, rate: f64) -> Signal {
    let mut r = rng(seed);
    Signal::new((0..n).map(|_| r.random_range(-1.0..1.0)).collect(), rate).unwrap()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut roundtrip = 0.0f64;
    let mut parseval = 0.0f64;
    for (k, &n) in [2usize, 3, 7, 16, 60, 97, 128, 300, 600, 1000, 1023].iter().enumerate() {
        let s = random_signal(k as u64, n, 60.0);
        let spectrum = dft_forward(&s).map_err(|e| e.to_string())?;
        let back = dft_inverse(&spectrum).map_err(|e| e.to_string())?;
        for (x, y) in s.samples().iter().zip(&back) {
            roundtrip = roundtrip.max((x - y.re).abs()).max(y.im.abs());
        }
        let energy: f64 = s.samples().iter().map(|x| x * x).sum();
        let spectral: f64 = spectrum.iter().map(Complex64::norm_sqr).sum::<f64>() / n as f64;
        parseval = parseval.max((energy - spectral).abs() / energy);
        let psd = power_spectral_density(&s).map_err(|e| e.to_string())?;
        parseval = parseval.max((psd.total_power() - s.mean_square()).abs() / s.mean_square());
    }
    ensure(roundtrip <= 1e-10, || format!("DFT roundtrip error {roundtrip:e}"))?;
    ensure(parseval <= 1e-9, || format!("Parseval relative error {parseval:e}"))?;

    let mut sg = 0.0f64;
    let mut r = rng(44);
    for (window, order) in [(5usize, 2usize), (7, 3), (11, 3), (11, 4), (21, 5), (9, 0), (15, 2)] {
        for _ in 0..5 {
            let degree = r.random_range(0..=order);
            let coeffs: Vec<f64> = (0..=degree).map(|_| r.random_range(-1.0..1.0)).collect();
            let poly = |t: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
            let s = Signal::from_fn(200, 60.0, |t| poly(t - 1.5)).unwrap();
            let smoothed = savitzky_golay(&s, window, order).map_err(|e| e.to_string())?;
            for (x, y) in s.samples().iter().zip(smoothed.samples()) {
                sg = sg.max((x - y).abs());
            }
        }
    }
    ensure(sg <= 1e-9, || format!("Savitzky–Golay polynomial error {sg:e}"))?;

    let mut resample = 0.0f64;
    for (n, rate, target, tones) in [
        (300usize, 30.0, 60.0, vec![(0.7, 0.3, 0.2), (2.1, 0.1, 1.0), (9.5, 0.05, 2.0)]),
        (250, 25.0, 60.0, vec![(1.2, 0.5, 0.0), (3.6, 0.2, 0.7)]),
        (45, 9.0, 20.0, vec![(0.2, 1.0, 0.1), (4.0, 0.25, 0.4)]),
        (600, 60.0, 120.0, vec![(1.6, 0.4, 0.9), (4.7, 0.1, 0.2), (25.0, 0.02, 1.0)]),
    ] {
        let f = |t: f64| 0.25 + tones.iter().map(|&(fr, a, p)| a * (TAU * fr * t + p).sin()).sum::<f64>();
        let s = Signal::from_fn(n, rate, f).unwrap();
        let up = fourier_resample(&s, target).map_err(|e| e.to_string())?;
        for (i, y) in up.samples().iter().enumerate() {
            resample = resample.max((y - f(i as f64 / target)).abs());
        }
    }
    ensure(resample <= 1e-9, || format!("Fourier resampling error {resample:e}"))?;

    let mut worst_freq = 0.0f64;
    let mut r = rng(7);
    for _ in 0..200 {
        let f0 = r.random_range(0.6..3.0);
        let phase = r.random_range(0.0..TAU);
        let s = Signal::from_fn(600, 60.0, |t| 0.1 + 0.4 * (TAU * f0 * t + phase).sin()).unwrap();
        let got = dominant_frequency(&power_spectral_density(&s).map_err(|e| e.to_string())?, 0.25).map_err(|e| e.to_string())?;
        worst_freq = worst_freq.max((got - f0).abs());
    }
    ensure(worst_freq <= 0.03, || format!("dominant frequency error {worst_freq:.4} Hz"))?;

    let mut worst_phase = 0.0f64;
    for seed in 0..5 {
        let mut specs = canonical_specs(seed);
        for spec in &mut specs {
            spec.noise_amplitude = 0.01;
        }
        for spec in &specs {
            let seq = synth_reference(spec).map_err(|e| e.to_string())?;
            for (left, right) in JointId::CONTRALATERAL_PAIRS {
                let offset = phase_offset(&seq.signal(left), &seq.signal(right), spec.frequency).map_err(|e| e.to_string())?;
                worst_phase = worst_phase.max((offset - 0.5).abs());
            }
        }
    }
    ensure(worst_phase <= 0.02, || format!("contralateral offset error {worst_phase:.4} cycles"))?;
    within_budget(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "roundtrip {roundtrip:.1e}, Parseval {parseval:.1e}, SG {sg:.1e}, resample {resample:.1e}, \
         frequency {worst_freq:.4} Hz, phase {worst_phase:.4} cycles"
    ))
}

// ---------------------------------------------------------------------------
// 5. metrics

fn random_frames(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let mix: Vec<f64> = (0..d * d).map(|_| r.random_range(-1.0..1.0)).collect();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
            (0..d).map(|i| 0.3 * i as f64 + (0..d).map(|k| mix[i * d + k] * z[k]).sum::<f64>() + 0.3 * r.random_range(-1.0..1.0)).collect()
        })
        .collect()
}

fn invert(m: &[f64], d: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    let mut inv: Vec<f64> = (0..d * d).map(|i| if i / d == i % d { 1.0 } else { 0.0 }).collect();
    for c in 0..d {
        let p = (c..d).max_by(|&x, &y| a[x * d + c].abs().total_cmp(&a[y * d + c].abs())).unwrap();
        for k in 0..d {
            a.swap(c * d + k, p * d + k);
            inv.swap(c * d + k, p * d + k);
        }
        let pivot = a[c * d + c];
        for k in 0..d {
            a[c * d + k] /= pivot;
            inv[c * d + k] /= pivot;
        }
        for row in 0..d {
            if row != c {
                let factor = a[row * d + c];
                for k in 0..d {
                    a[row * d + k] -= factor * a[c * d + k];
                    inv[row * d + k] -= factor * inv[c * d + k];
                }
            }
        }
    }
    inv
}

fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = (0..d).map(|k| a[i * d + k] * b[k * d + j]).sum();
        }
    }
    out
}

/// Fréchet distance with `tr((Σa Σb)^½)` from Denman–Beavers iteration.
fn fid_oracle(a: &MotionStats, b: &MotionStats) -> f64 {
    let d = a.dim;
    let mut y = matmul(&a.covariance, &b.covariance, d);
    let mut z: Vec<f64> = (0..d * d).map(|i| if i / d == i % d { 1.0 } else { 0.0 }).collect();
    for _ in 0..100 {
        let (yi, zi) = (invert(&y, d), invert(&z, d));
        y = y.iter().zip(&zi).map(|(p, q)| 0.5 * (p + q)).collect();
        z = z.iter().zip(&yi).map(|(p, q)| 0.5 * (p + q)).collect();
    }
    let trace_root: f64 = (0..d).map(|i| y[i * d + i]).sum();
    let mean: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y).powi(2)).sum();
    let tr = |s: &MotionStats| (0..d).map(|i| s.covariance[i * d + i]).sum::<f64>();
    mean + tr(a) + tr(b) - 2.0 * trace_root
}

fn random_batch_like(seq_times: &[f64], frequency: f64, seed: u64) -> TrajectoryBatch {
    let mut r = rng(seed);
    TrajectoryBatch {
        frequency,
        times: seq_times.to_vec(),
        joints: std::array::from_fn(|_| seq_times.iter().map(|_| r.random_range(-1.0..1.0)).collect()),
        mode: GenerationMode::Mean,
        latent: vec![],
    }
}

struct ToneGenerator(fn(f64, usize) -> f64);

impl TrajectoryGenerator for ToneGenerator {
    fn generate(&self, frequency: f64, duration: f64, rate: f64) -> gaitprior_core::Result<TrajectoryBatch> {
        let n = (duration * rate).round() as usize;
        let times: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
        let joints = std::array::from_fn(|j| {
            let a = (self.0)(frequency, j);
            times.iter().map(|t| 0.05 * j as f64 + a * (TAU * frequency * t + 0.3 * j as f64).sin()).collect()
        });
        Ok(TrajectoryBatch { frequency, times, joints, mode: GenerationMode::Mean, latent: vec![] })
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut self_fid = 0.0f64;
    let mut fid_err = 0.0f64;
    for seed in 0..10 {
        let a = motion_stats(&random_frames(seed, 400, 10)).map_err(|e| e.to_string())?;
        let b = motion_stats(&random_frames(seed + 100, 300, 10)).map_err(|e| e.to_string())?;
        self_fid = self_fid.max(fid(&a, &a).map_err(|e| e.to_string())?.abs());
        let got = fid(&a, &b).map_err(|e| e.to_string())?;
        fid_err = fid_err.max((got - fid_oracle(&a, &b)).abs());
    }
    ensure(self_fid <= 1e-8, || format!("fid(a, a) = {self_fid:e}"))?;
    ensure(fid_err <= 1e-8, || format!("FID vs iterative oracle {fid_err:e}"))?;

    let mut closed = 0.0f64;
    for (m1, v1, m2, v2) in [(0.0, 1.0, 0.0, 1.0), (1.0, 4.0, -2.0, 9.0), (0.5, 0.25, 0.5, 1.0), (3.0, 2.0, 1.0, 0.5)] {
        let s1 = MotionStats { mean: vec![m1], covariance: vec![v1], dim: 1, count: 2 };
        let s2 = MotionStats { mean: vec![m2], covariance: vec![v2], dim: 1, count: 2 };
        let expected = (m1 - m2).powi(2) + (f64::sqrt(v1) - f64::sqrt(v2)).powi(2);
        closed = closed.max((fid(&s1, &s2).map_err(|e| e.to_string())? - expected).abs());
    }
    ensure(closed <= 1e-10, || format!("1-D closed-form FID error {closed:e}"))?;

    let library = canonical_library(&CurationConfig::default()).map_err(|e| e.to_string())?;
    let times = library.times();
    let batches: Vec<_> = library.entries().enumerate().map(|(k, (f, _))| random_batch_like(&times, f, 50 + k as u64)).collect();
    let got = l_rec_metric(&batches, &library).map_err(|e| e.to_string())?;
    let mut naive = 0.0;
    let mut per_seq = 0.0;
    for (b, seq) in batches.iter().zip(library.sequences()) {
        let mut s = 0.0;
        for j in 0..JOINT_COUNT {
            for i in 0..times.len() {
                s += (b.joints[j][i] - seq.channels()[j][i]).powi(2);
            }
        }
        per_seq += s / (JOINT_COUNT * times.len()) as f64;
    }
    naive += per_seq / library.len() as f64;
    let l_rec_err = (got - naive).abs();
    ensure(l_rec_err <= 1e-12, || format!("L_rec vs loop {l_rec_err:e}"))?;

    let actual: Vec<_> = (0..7).map(|k| random_batch_like(&times[..120], 1.0, 200 + k)).collect();
    let reference: Vec<_> = (0..7).map(|k| random_batch_like(&times[..120], 1.0, 300 + k)).collect();
    let got = imitation_error(&actual, &reference).map_err(|e| e.to_string())?;
    let mut sum = 0.0;
    for (a, r) in actual.iter().zip(&reference) {
        for j in 0..JOINT_COUNT {
            for i in 0..120 {
                sum += (a.joints[j][i] - r.joints[j][i]).abs();
            }
        }
    }
    let qpos_err = (got - sum / (7 * 120 * JOINT_COUNT) as f64).abs();
    ensure(qpos_err <= 1e-12, || format!("E_qpos vs loop {qpos_err:e}"))?;

    let mut r = rng(9);
    let cmd: Vec<f64> = (0..500).map(|_| r.random_range(0.0..6.0)).collect();
    let meas: Vec<f64> = cmd.iter().map(|c| c + r.random_range(-0.5..0.5)).collect();
    let got = velocity_tracking_error(&VelocityTrace::new(cmd.clone(), meas.clone()).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut sum = 0.0;
    for i in 0..500 {
        sum += (cmd[i] - meas[i]).abs();
    }
    let vel_err = (got - sum / 500.0).abs();
    ensure(vel_err <= 1e-12, || format!("E_vel vs loop {vel_err:e}"))?;

    let generator = ToneGenerator(|f, j| 0.2 + 0.01 * j as f64 + 0.05 * f);
    let got = boundary_amplitude_error(&generator, &library, &EXTREME_FREQUENCIES, BoundaryReference::Nearest)
        .map_err(|e| e.to_string())?;
    let rows = boundary_amplitudes(&generator, &library, &EXTREME_FREQUENCIES, BoundaryReference::Nearest)
        .map_err(|e| e.to_string())?;
    let mut sum = 0.0;
    let mut count = 0;
    let mut amplitude_err = 0.0f64;
    for (row, (extreme, boundary)) in rows.iter().zip([(0.6, 0.68), (2.3, 1.58)]) {
        ensure(row.extreme == extreme && row.boundary == boundary, || format!("boundary pairing {} -> {}", row.extreme, row.boundary))?;
        for j in 0..JOINT_COUNT {
            sum += (row.at_extreme[j] - row.at_boundary[j]).abs();
            count += 1;
            amplitude_err = amplitude_err
                .max((row.at_extreme[j] - (generator.0)(extreme, j)).abs())
                .max((row.at_boundary[j] - (generator.0)(boundary, j)).abs());
        }
    }
    let ba_err = (got - sum / count as f64).abs();
    ensure(ba_err <= 1e-12, || format!("E_BA vs loop {ba_err:e}"))?;
    ensure(amplitude_err <= 1e-9, || format!("tone amplitude measurement error {amplitude_err:e}"))?;
    within_budget(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "fid(a,a) {self_fid:.1e}, FID {fid_err:.1e}, 1-D {closed:.1e}, L_rec {l_rec_err:.1e}, \
         E_BA {ba_err:.1e} (amplitudes {amplitude_err:.1e}), E_qpos {qpos_err:.1e}, E_vel {vel_err:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 6. rewards

fn grounded(lateral: f64) -> FootState {
    FootState { contact: true, lateral, ..FootState::default() }
}

fn ideal_frame(c: &RewardConfig) -> RobotStateFrame {
    RobotStateFrame {
        q: std::array::from_fn(|j| 0.5 * (c.joint_limits[j].0 + c.joint_limits[j].1)),
        base_height: c.z_target,
        feet: [grounded(0.1), grounded(-0.1)],
        planar_velocity: 2.0,
        projected_gravity: [0.05, 0.0],
        ..RobotStateFrame::default()
    }
}

fn random_frame(r: &mut ChaCha8Rng) -> RobotStateFrame {
    let mut arr = |lo: f64, hi: f64| -> [f64; 10] { std::array::from_fn(|_| r.random_range(lo..hi)) };
    let (q, qd, qdd, torque) = (arr(-3.0, 3.0), arr(-10.0, 10.0), arr(-100.0, 100.0), arr(-50.0, 50.0));
    let mut foot = || FootState {
        contact: r.random_bool(0.5),
        height: r.random_range(0.0..0.3),
        tangential_speed: r.random_range(0.0..2.0),
        lateral: r.random_range(-0.2..0.2),
        air_time: r.random_range(0.0..0.6),
        gravity_xy: [r.random_range(-0.3..0.3), r.random_range(-0.3..0.3)],
    };
    let feet = [foot(), foot()];
    RobotStateFrame {
        q,
        qd,
        qdd,
        torque,
        base_angular_velocity: [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)],
        projected_gravity: [r.random_range(-0.5..0.5), r.random_range(-0.5..0.5)],
        base_height: r.random_range(0.4..0.9),
        feet,
        planar_velocity: r.random_range(0.0..6.5),
        terminated: r.random_bool(0.05),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let c = RewardConfig::default();
    let mut checks = 0usize;
    let mut check = |ok: bool, what: &str| -> Result<(), String> {
        checks += 1;
        ensure(ok, || format!("failed: {what}"))
    };

    check(filter_command(0.0, 6.0, 2.0, 0.02) == 0.04, "filter clip active")?;
    check(filter_command(5.99, 6.0, 2.0, 0.02) == 6.0, "filter clip inactive")?;
    check(filter_command(1.3, 1.3, 2.0, 0.02) == 1.3, "filter fixed point")?;
    for (v0, cmd) in [(0.0f64, 6.0f64), (6.0, 0.5), (1.0, 1.05)] {
        let expected = (cmd - v0).abs() / 0.04;
        let expected = (expected - 1e-9).ceil() as usize;
        let (mut v, mut n) = (v0, 0);
        while v != cmd && n <= expected {
            v = filter_command(v, cmd, 2.0, 0.02);
            n += 1;
        }
        check(n == expected && v == cmd, "filter converges in ceil(|dv| / a dt) steps")?;
    }

    check(lin_vel_reward(1.7, 1.7, c.w_v, c.sigma_v) == c.w_v, "r_v peak")?;
    check(ang_vel_reward(0.3, 0.3, c.w_omega, c.sigma_omega) == c.w_omega, "r_omega peak")?;
    check(close(lin_vel_reward(0.5, 0.0, 3.0, 0.25), 3.0 / E), "r_v e-folding")?;
    check(close(ang_vel_reward(0.0, 0.5, 1.0, 0.25), 1.0 / E), "r_omega e-folding")?;
    check(close(lin_vel_reward(3.0, 2.5, 3.0, 0.25), 3.0 * (-1.0f64).exp()), "r_v direct")?;
    check((lin_vel_reward(3.0, 2.5, 3.0, 0.25) - 1.103638).abs() < 1e-6, "r_v ≈ 1.103638")?;

    let q = [0.1; 10];
    check(prior_guidance_reward(&q, &q, c.w_p, c.sigma_q).unwrap() == 10.0 * c.w_p, "prior peak")?;
    let mut off = q;
    off[4] += c.sigma_q.sqrt();
    check(close(prior_guidance_reward(&off, &q, c.w_p, c.sigma_q).unwrap(), c.w_p * (9.0 + 1.0 / E)), "prior one joint off")?;
    check(prior_guidance_reward(&q[..9], &q, c.w_p, c.sigma_q).is_err(), "prior joint mismatch")?;
    let mut r = rng(3);
    for _ in 0..100 {
        let a: Vec<f64> = (0..10).map(|_| r.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..10).map(|_| r.random_range(-2.0..2.0)).collect();
        let mut naive = 0.0;
        for j in 0..10 {
            naive += (-(a[j] - b[j]).powi(2) / c.sigma_q).exp();
        }
        check(close(prior_guidance_reward(&a, &b, c.w_p, c.sigma_q).unwrap(), c.w_p * naive), "prior loop oracle")?;
    }

    check(close(target_air_time(2.0, 0.4).unwrap(), 0.2), "t_target at 2 Hz")?;
    check(close(target_air_time(0.8, 0.4).unwrap(), 0.5), "t_target at 0.8 Hz")?;
    check(target_air_time(1.0, 0.0).unwrap() == 0.0, "t_target degenerate")?;
    check(target_air_time(0.0, 0.4).is_err(), "t_target rejects f <= 0")?;

    let ideal = ideal_frame(&c);
    check(feet_air_reward(&ideal, 0.2, 2.0) == 0.0, "feet air grounded")?;
    let mut air = ideal.clone();
    air.feet[0] = FootState { contact: false, air_time: 0.05, height: 0.1, ..air.feet[0] };
    check(close(feet_air_reward(&air, 0.2, 2.0), 0.3), "feet air one airborne")?;
    air.feet[0].air_time = 0.25;
    check(feet_air_reward(&air, 0.2, 2.0) == 0.0, "feet air clamp")?;

    check(torso_pitch_penalty(0.05, 0.0, c.w_t) == 0.0, "torso dead zone")?;
    check(close(torso_pitch_penalty(0.5, 6.0, c.w_t), c.w_t * 0.01), "torso forward")?;
    check(close(torso_pitch_penalty(-0.1, 1.0, c.w_t), c.w_t * 0.01), "torso backward")?;

    check(compose_target(&[0.3; 10], &[0.0; 10], 0.25).unwrap() == vec![0.3; 10], "compose zero residual")?;
    check(compose_target(&[0.3; 10], &[0.7; 10], 0.0).unwrap() == vec![0.3; 10], "compose alpha 0")?;
    check(compose_target(&[0.3], &[0.2], 0.25).unwrap().iter().all(|v| close(*v, 0.35)), "compose arithmetic")?;
    check(compose_target(&[0.3; 10], &[0.2; 9], 0.25).is_err(), "compose shape mismatch")?;

    let w = c.table;
    let base = table_rewards(&ideal, &c);
    check(base.close_feet == 0.0, "close feet apart")?;
    let mut f = ideal.clone();
    f.feet[0].lateral = 0.025;
    f.feet[1].lateral = -0.025;
    check(close(table_rewards(&f, &c).close_feet, -5.0), "close feet -100 * 0.05")?;
    let mut f = ideal.clone();
    f.feet[0] = FootState { contact: false, height: c.h_ref, ..f.feet[0] };
    check(table_rewards(&f, &c).feet_air_height == w.feet_air_height, "feet air height peak")?;
    f.feet[0].height = c.h_ref + c.sigma_feet;
    check(close(table_rewards(&f, &c).feet_air_height, w.feet_air_height / E), "feet air height kernel")?;
    let mut f = ideal.clone();
    f.planar_velocity = 1.0;
    f.feet.iter_mut().for_each(|ft| *ft = FootState { contact: false, height: 0.1, ..*ft });
    check(table_rewards(&f, &c).low_speed_air == -6.0, "low speed air -6")?;
    let mut f = ideal.clone();
    f.planar_velocity = 3.5;
    check(table_rewards(&f, &c).high_speed_ground == w.high_speed_ground, "high speed ground")?;
    check(base.feet_ground_parallel == 2.0 * w.feet_ground_parallel, "feet ground parallel level")?;
    let mut f = ideal.clone();
    f.feet[0].gravity_xy = [0.3, 0.4];
    check(close(table_rewards(&f, &c).feet_ground_parallel, w.feet_ground_parallel * (1.0 + (-0.5f64).exp())), "feet ground parallel tilt")?;
    let mut f = ideal.clone();
    f.feet[0].tangential_speed = 1.0;
    check(table_rewards(&f, &c).feet_slide == w.feet_slide, "feet slide")?;
    check(base.alive == w.alive, "alive")?;
    let mut f = ideal.clone();
    f.terminated = true;
    check(table_rewards(&f, &c).alive == 0.0, "alive on termination")?;
    let mut f = ideal.clone();
    f.torque[2] = 1.0;
    check(table_rewards(&f, &c).torque == w.torque, "torque")?;
    let mut f = ideal.clone();
    f.qdd[7] = 1.0;
    check(table_rewards(&f, &c).joint_accel == w.joint_accel, "joint accel")?;
    let mut f = ideal.clone();
    f.q[2] = c.joint_limits[2].1 + 0.01;
    check(table_rewards(&f, &c).joint_limits == w.joint_limits, "joint limits")?;
    let mut f = ideal.clone();
    f.qd[0] = 1.0;
    check(table_rewards(&f, &c).joint_vel == w.joint_vel, "joint vel")?;
    let mut f = ideal.clone();
    f.base_angular_velocity = [0.6, 0.8, 5.0];
    check(close(table_rewards(&f, &c).roll_pitch_ang_vel, w.roll_pitch_ang_vel), "roll pitch ang vel")?;
    let mut f = ideal.clone();
    f.base_height = 0.62;
    check(close(table_rewards(&f, &c).base_height, -0.3), "base height -30 * 0.01")?;

    let cmd = CommandState { raw_velocity: 2.0, filtered_velocity: 2.0, angular_velocity: 0.0, frequency: 1.2 };
    let total = total_reward(&ideal, &cmd, &ideal.q, &c).unwrap();
    let expected = c.w_v + c.w_omega + 10.0 * c.w_p + 2.0 * w.feet_ground_parallel + w.alive;
    check(close(total.total, expected), "ideal frame total")?;
    let mut dead = ideal.clone();
    dead.terminated = true;
    check(total_reward(&dead, &cmd, &ideal.q, &c).unwrap().table.alive == 0.0, "terminated frame")?;

    let mut r = rng(99);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let frame = random_frame(&mut r);
        let q_ref: [f64; 10] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
        let v = r.random_range(0.0..6.0);
        let cmd = CommandState { raw_velocity: v, filtered_velocity: v, angular_velocity: 0.0, frequency: r.random_range(0.6..2.3) };
        let b = total_reward(&frame, &cmd, &q_ref, &c).unwrap();
        worst = worst.max((b.total - b.terms().iter().sum::<f64>()).abs());
    }
    check(worst <= 1e-12, "total = sum of terms on 10^4 random frames")?;
    within_budget(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{checks} checks; worst sum identity error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 7. FiLM bounds

fn criterion_7() -> Outcome {
    let mut model = PriorModel::new(Architecture::default(), 1).unwrap();
    let width = model.architecture().context_width();
    let mut r = rng(77);
    let (mut g_lo, mut g_hi, mut b_max) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for draw in 0..10_000 {
        let scale = [0.1, 1.0, 10.0, 1e3][draw % 4];
        for (gamma, beta) in model.film_layers_mut() {
            for layer in [gamma, beta] {
                layer.weight_mut().iter_mut().for_each(|v| *v = scale * r.random_range(-1.0..1.0));
                layer.bias_mut().iter_mut().for_each(|v| *v = scale * r.random_range(-1.0..1.0));
            }
        }
        let context: Vec<f64> = (0..width).map(|_| scale * r.random_range(-10.0..10.0)).collect();
        for film in model.film_modulation(&context).map_err(|e| e.to_string())? {
            for (&g, &b) in film.gamma.iter().zip(&film.beta) {
                g_lo = g_lo.min(g);
                g_hi = g_hi.max(g);
                b_max = b_max.max(b.abs());
            }
        }
    }
    let summary = format!("10^4 draws: gamma in [{g_lo:.6}, {g_hi:.6}], |beta| <= {b_max:.6}");
    ensure(g_lo >= 1.0 - FILM_BOUND && g_hi <= 1.0 + FILM_BOUND && b_max <= FILM_BOUND, || summary.clone())?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// 8. determinism

fn run(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gaitprior")).args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn criterion_8(trained: &Result<Trained, String>) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name);
    let s = |path: &Path| path.to_str().unwrap().to_string();
    let lib = p("lib");
    run(&["synth", "--out", &s(&lib)])?;
    for name in ["a.spm", "b.spm"] {
        run(&["train", "--library", &s(&lib), "--out", &s(&p(name)), "--seed", "11", "--set", "train.epochs=20"])?;
    }
    ensure(read(&p("a.spm"))? == read(&p("b.spm"))?, || "checkpoints differ".into())?;
    ensure(read(&p("a.loss.csv"))? == read(&p("b.loss.csv"))?, || "loss histories differ".into())?;
    for (name, mode) in [("m1.csv", "mean"), ("m2.csv", "mean"), ("s1.csv", "sample"), ("s2.csv", "sample")] {
        run(&["generate", "--checkpoint", &s(&p("a.spm")), "--freq", "1.1", "--mode", mode, "--seed", "5", "--out", &s(&p(name))])?;
    }
    ensure(read(&p("m1.csv"))? == read(&p("m2.csv"))?, || "mean generation differs".into())?;
    ensure(read(&p("s1.csv"))? == read(&p("s2.csv"))?, || "sampled generation differs".into())?;

    let bytes = read(&p("a.spm"))?;
    let ckpt = decode_checkpoint(&p("a.spm"), &bytes).map_err(|e| e.to_string())?;
    ensure(encode_checkpoint(&ckpt) == bytes, || "re-encoded checkpoint differs".into())?;

    let t = trained.as_ref().map_err(|e| format!("training failed: {e}"))?;
    let original = Checkpoint {
        model: t.model.clone(),
        config: TrainConfig::default(),
        epoch: TrainConfig::default().epochs,
        history: vec![],
        velocity_frequency_pairs: t.library.velocity_frequency_pairs().to_vec(),
    };
    save_checkpoint(&p("full.spm"), &original).map_err(|e| e.to_string())?;
    let loaded = load_checkpoint(&p("full.spm")).map_err(|e| e.to_string())?;
    ensure(loaded == original, || "loaded checkpoint differs".into())?;
    let bits = |m: &PriorModel| -> Result<Vec<u64>, String> {
        let b = m.generate_trajectory(1.33, 5.0, 60.0, GenerationMode::Mean).map_err(|e| e.to_string())?;
        Ok(b.joints.iter().flatten().map(|v| v.to_bits()).collect())
    };
    ensure(bits(&loaded.model)? == bits(&original.model)?, || "generation after reload differs".into())?;
    Ok("train, generate (mean and sampled) and checkpoint roundtrip are bit-identical".into())
}

// ---------------------------------------------------------------------------
// 9. velocity map

fn criterion_9() -> Outcome {
    let library = canonical_library(&CurationConfig::default()).map_err(|e| e.to_string())?;
    let map = library.frequency_map();
    ensure(map.frequency(2.29) == 1.25, || format!("f(2.29) = {}", map.frequency(2.29)))?;
    for v in [6.0, 6.5, 7.0, 20.0] {
        ensure(map.frequency(v) == 2.3, || format!("f({v}) = {}", map.frequency(v)))?;
    }
    let sweep: Vec<f64> = (0..=700).map(|i| map.frequency(i as f64 / 100.0)).collect();
    ensure(sweep.windows(2).all(|w| w[1] >= w[0]), || "map is not monotone".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    save_library(&dir.path().join("lib"), &library).map_err(|e| e.to_string())?;
    let model = PriorModel::new(Architecture::default(), 0).unwrap();
    let ckpt = Checkpoint {
        model,
        config: TrainConfig::default(),
        epoch: 0,
        history: vec![],
        velocity_frequency_pairs: library.velocity_frequency_pairs().to_vec(),
    };
    let spm = dir.path().join("m.spm");
    save_checkpoint(&spm, &ckpt).map_err(|e| e.to_string())?;
    for (v, f) in [("2.29", 1.25), ("6.0", 2.3)] {
        let out = dir.path().join(format!("{v}.csv"));
        run(&["generate", "--checkpoint", spm.to_str().unwrap(), "--velocity", v, "--duration", "1", "--out", out.to_str().unwrap()])?;
        let meta = read_meta(&out).map_err(|e| e.to_string())?;
        ensure(meta.frequency_hz == Some(f), || format!("--velocity {v} recorded {:?}", meta.frequency_hz))?;
    }
    Ok(format!("f(2.29) = 1.25 Hz, f(>=6) = 2.3 Hz, monotone over {} sweep points", sweep.len()))
}

// ---------------------------------------------------------------------------

fn report(number: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS criterion {number}: {name} ({detail}) [{secs:.1} s]");
            true
        }
        Err(detail) => {
            println!("FAIL criterion {number}: {name} ({detail}) [{secs:.1} s]");
            false
        }
    }
}

fn main() {
    let mut passed = Vec::new();
    passed.push(report(1, "gradient oracle", criterion_1));
    let mut trained = Err("not run".to_string());
    passed.push(report(2, "default training run", || {
        trained = default_training();
        criterion_2(&trained)
    }));
    passed.push(report(3, "reconstruction and extrapolation shape", || criterion_3(&trained)));
    passed.push(report(4, "DSP property suite", criterion_4));
    passed.push(report(5, "metric identities", criterion_5));
    passed.push(report(6, "reward stack", criterion_6));
    passed.push(report(7, "FiLM bound fuzzing", criterion_7));
    passed.push(report(8, "determinism", || criterion_8(&trained)));
    passed.push(report(9, "velocity map", criterion_9));
    let failed = passed.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", passed.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
