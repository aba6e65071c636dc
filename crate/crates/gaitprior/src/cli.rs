//! The `gaitprior` command line.
//!
//! Global `--set key=value` overrides address [`RunConfig`]; `--seed`, when
//! given, takes precedence over `train.seed` and seeds synthesis and sampled
//! generation.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use gaitprior_core::metrics::{
    boundary_amplitude_error, generate_library_grid, l_rec_metric, prior_fid, BoundaryReference, TrajectoryGenerator,
    EXTREME_FREQUENCIES,
};
use gaitprior_core::prior::{GenerationMode, PriorModel, TrajectoryBatch};
use gaitprior_core::reflib::{
    build_library, canonical_single_cycle_specs, canonical_specs, synth_reference, FrequencyMap, ReferenceLibrary, SynthSpec,
};
use gaitprior_core::rewards::{filter_command, total_reward, CommandState};
use gaitprior_core::train::{train_with, Checkpoint};
use gaitprior_core::JointId;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::library::{self, load_library, save_library};
use crate::logs::{self, MetricRow};
use crate::plot::{Chart, Series};
use crate::sequence::{self, save_sequence};

#[derive(Debug, Clone, Parser)]
#[command(name = "gaitprior", version, about = "Frequency-conditioned spectral gait priors")]
pub struct CliConfig {
    /// Seed for synthesis, training and sampled generation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (synth, curate) or file (train, generate, eval, reward-audit).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Configuration override, e.g. `train.epochs=500`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Mean,
    Sample,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Render and curate the synthetic reference library.
    Synth {
        /// JSON list of sequence specs; defaults to the five canonical gaits.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Write the uncurated sequences only, without library.json.
        #[arg(long)]
        raw: bool,
        /// With --raw and no --spec, render one gait cycle per gait at 30 Hz.
        #[arg(long, requires = "raw")]
        single_cycle: bool,
    },
    /// Curate raw sequence files into a library.
    Curate {
        /// Raw sequence CSV files, each with a `.meta.json` sidecar.
        #[arg(required = true)]
        raw: Vec<PathBuf>,
    },
    /// Train a prior on a library.
    Train {
        #[arg(long)]
        library: PathBuf,
        /// Also write the loss curve as SVG.
        #[arg(long)]
        plot: bool,
    },
    /// Generate a trajectory at a frequency or commanded velocity.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Gait frequency in Hz.
        #[arg(long, conflicts_with = "velocity", required_unless_present = "velocity")]
        freq: Option<f64>,
        /// Commanded forward velocity in m/s, mapped to a frequency.
        #[arg(long)]
        velocity: Option<f64>,
        /// Length in seconds.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        /// Output sample rate in Hz.
        #[arg(long, default_value_t = 60.0)]
        rate: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Mean)]
        mode: ModeArg,
        /// Library for the velocity map and plot overlays.
        #[arg(long)]
        library: Option<PathBuf>,
        /// Write one SVG per joint next to the output.
        #[arg(long)]
        plot: bool,
    },
    /// Report reconstruction, boundary amplitude and Fréchet metrics.
    Eval {
        #[arg(long, required_unless_present = "bypass_model")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        library: PathBuf,
        /// Evaluate the library against itself.
        #[arg(long)]
        bypass_model: bool,
    },
    /// Recompute per-frame rewards over a robot log.
    RewardAudit {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Library whose velocity map converts commands to frequencies;
        /// defaults to the checkpoint's.
        #[arg(long)]
        library: Option<PathBuf>,
    },
}

impl CliConfig {
    /// Defaults, then `--set` overrides, then `--seed`.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default().with_overrides(&self.overrides)?;
        if let Some(seed) = self.seed {
            config.train.seed = seed;
        }
        Ok(config)
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

/// Runs one subcommand, returning a short human-readable summary.
pub fn run(cli: &CliConfig) -> Result<String> {
    let config = cli.run_config()?;
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Synth { spec, raw, single_cycle } => {
            let specs = match spec {
                Some(path) => read_specs(path)?,
                None if *single_cycle => canonical_single_cycle_specs(seed),
                None => canonical_specs(seed),
            };
            cmd_synth(&specs, &cli.out_or("library"), *raw, &config)
        }
        Command::Curate { raw } => cmd_curate(raw, &cli.out_or("library"), &config),
        Command::Train { library, plot } => cmd_train(library, &cli.out_or("prior.spm"), &config, *plot),
        Command::Generate { checkpoint, freq, velocity, duration, rate, mode, library, plot } => {
            let target = match (freq, velocity) {
                (Some(f), None) => Target::Frequency(*f),
                (None, Some(v)) => Target::Velocity(*v),
                _ => return Err(Error::Config("give exactly one of --freq and --velocity".into())),
            };
            let mode = match mode {
                ModeArg::Mean => GenerationMode::Mean,
                ModeArg::Sample => GenerationMode::Sample { seed },
            };
            let request = GenerateRequest { target, duration: *duration, rate: *rate, mode };
            cmd_generate(checkpoint, &request, library.as_deref(), &cli.out_or("trajectory.csv"), *plot)
        }
        Command::Eval { checkpoint, library, bypass_model } => {
            let checkpoint = if *bypass_model { None } else { checkpoint.as_deref() };
            cmd_eval(checkpoint, library, &cli.out_or("metrics.csv"), &config)
        }
        Command::RewardAudit { log, checkpoint, library } => {
            cmd_reward_audit(log, checkpoint, library.as_deref(), &cli.out_or("rewards.csv"), &config)
        }
    }
}

fn read_specs(path: &Path) -> Result<Vec<SynthSpec>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, Some(e.line()), e.to_string()))
}

pub fn cmd_synth(specs: &[SynthSpec], out: &Path, raw: bool, config: &RunConfig) -> Result<String> {
    let sequences = specs.iter().map(synth_reference).collect::<gaitprior_core::Result<Vec<_>>>()?;
    if raw {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        for seq in &sequences {
            save_sequence(&out.join(library::member_file(&seq.name)), seq, Some(spec_frequency(specs, &seq.name)))?;
        }
        return Ok(format!("wrote {} raw sequences to {}", sequences.len(), out.display()));
    }
    let library = build_library(&sequences, &config.curation)?;
    save_library(out, &library)?;
    Ok(library_summary(&library, out))
}

fn spec_frequency(specs: &[SynthSpec], name: &str) -> f64 {
    specs.iter().find(|s| s.name == name).map_or(f64::NAN, |s| s.frequency)
}

fn library_summary(library: &ReferenceLibrary, out: &Path) -> String {
    let freqs: Vec<String> = library.frequencies().iter().map(|f| f.to_string()).collect();
    format!("wrote {} sequences to {} (frequencies {} Hz)", library.len(), out.display(), freqs.join(", "))
}

pub fn cmd_curate(raw: &[PathBuf], out: &Path, config: &RunConfig) -> Result<String> {
    let sequences = raw.iter().map(|p| sequence::load_sequence(p)).collect::<Result<Vec<_>>>()?;
    let library = build_library(&sequences, &config.curation)?;
    save_library(out, &library)?;
    let rows = library::report_rows(&library, &config.curation);
    library::save_report(&out.join(library::REPORT_FILE), &rows)?;
    Ok(library_summary(&library, out))
}

/// `prior.spm` → `prior.loss.csv`.
pub fn loss_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("loss.csv")
}

pub fn cmd_train(library_dir: &Path, out: &Path, config: &RunConfig, plot: bool) -> Result<String> {
    let library = load_library(library_dir)?;
    let train = &config.train;
    let outcome = train_with(&library, train, |epoch, loss| {
        if (epoch + 1) % 100 == 0 {
            eprintln!("epoch {:>5}  total {:.6e}  rec {:.6e}  kl {:.6e}", epoch + 1, loss.total, loss.reconstruction, loss.kl);
        }
    })?;
    let checkpoint = Checkpoint {
        model: outcome.model,
        config: train.clone(),
        epoch: train.epochs,
        history: outcome.history,
        velocity_frequency_pairs: library.velocity_frequency_pairs().to_vec(),
    };
    save_checkpoint(out, &checkpoint)?;
    logs::save_loss_history(&loss_path(out), &checkpoint.history)?;
    if plot {
        let epochs: Vec<f64> = (0..checkpoint.history.len()).map(|e| e as f64).collect();
        let log10 = |v: f64| v.max(1e-300).log10();
        let series = |name: &str, f: fn(&gaitprior_core::train::LossBreakdown) -> f64| {
            Series::new(name, &epochs, &checkpoint.history.iter().map(|l| log10(f(l))).collect::<Vec<_>>())
        };
        let chart = Chart {
            title: "training loss".into(),
            x_label: "epoch".into(),
            y_label: "log10 loss".into(),
            series: vec![series("total", |l| l.total), series("reconstruction", |l| l.reconstruction), series("kl", |l| l.kl)],
        };
        chart.save(&out.with_extension("loss.svg"))?;
    }
    let last = checkpoint.history.last().map_or_else(|| "untrained".to_string(), |l| format!("final L_rec {:.3e}", l.reconstruction));
    Ok(format!("wrote {} after {} epochs ({last})", out.display(), train.epochs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Frequency(f64),
    Velocity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateRequest {
    pub target: Target,
    pub duration: f64,
    pub rate: f64,
    pub mode: GenerationMode,
}

fn checkpoint_map(checkpoint: &Checkpoint, library: Option<&ReferenceLibrary>) -> Result<FrequencyMap> {
    match library {
        Some(lib) => Ok(lib.frequency_map().clone()),
        None => Ok(FrequencyMap::with_default_band(checkpoint.velocity_frequency_pairs.clone())?),
    }
}

/// Velocity implied by `frequency` under the piecewise-linear map through
/// `pairs`, extended linearly past the end knots and kept non-negative.
pub fn velocity_for_frequency(pairs: &[(f64, f64)], frequency: f64) -> f64 {
    let segment = pairs
        .windows(2)
        .position(|w| frequency <= w[1].1)
        .unwrap_or(pairs.len().saturating_sub(2));
    match pairs.get(segment..segment + 2) {
        Some([(v0, f0), (v1, f1)]) => (v0 + (frequency - f0) * (v1 - v0) / (f1 - f0)).max(0.0),
        _ => 0.0,
    }
}

pub fn cmd_generate(checkpoint_path: &Path, request: &GenerateRequest, library_dir: Option<&Path>, out: &Path, plot: bool) -> Result<String> {
    let checkpoint = load_checkpoint(checkpoint_path)?;
    let library = library_dir.map(load_library).transpose()?;
    let map = checkpoint_map(&checkpoint, library.as_ref())?;
    let (frequency, velocity) = match request.target {
        Target::Frequency(f) => (f, velocity_for_frequency(map.pairs(), f)),
        Target::Velocity(v) => {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("velocity must be non-negative, got {v}")));
            }
            (map.frequency(v), v)
        }
    };
    let batch = checkpoint.model.generate_trajectory(frequency, request.duration, request.rate, request.mode)?;
    let name = format!("generated_{frequency}hz");
    let seq = batch.to_sequence(&name, velocity)?;
    save_sequence(out, &seq, Some(frequency))?;
    let mut summary = format!("wrote {} samples at {frequency} Hz to {}", seq.len(), out.display());
    if plot {
        let reference = library.as_ref().map(|lib| &lib.sequences()[lib.nearest(frequency)]);
        for joint in JointId::ALL {
            let mut series = vec![Series::new("generated", &batch.times, batch.joint(joint))];
            if let Some(r) = reference {
                let times = r.times();
                let n = times.iter().take_while(|&&t| t <= request.duration).count();
                series.push(Series::new(format!("reference {}", r.name), &times[..n], &r.channel(joint)[..n]));
            }
            let chart = Chart {
                title: format!("{joint} at {frequency} Hz"),
                x_label: "time (s)".into(),
                y_label: "angle (rad)".into(),
                series,
            };
            chart.save(&out.with_extension(format!("{joint}.svg")))?;
        }
        summary.push_str(" with 10 plots");
    }
    Ok(summary)
}

/// Replays library sequences as if generated: each frequency yields its
/// nearest library entry.
pub struct LibraryReplay<'a>(pub &'a ReferenceLibrary);

impl TrajectoryGenerator for LibraryReplay<'_> {
    fn generate(&self, frequency: f64, duration: f64, rate: f64) -> gaitprior_core::Result<TrajectoryBatch> {
        let lib = self.0;
        if duration != lib.duration() || rate != lib.sample_rate() {
            return Err(gaitprior_core::Error::InvalidInput(format!(
                "library replay only covers {} s at {} Hz",
                lib.duration(),
                lib.sample_rate()
            )));
        }
        let seq = &lib.sequences()[lib.nearest(frequency)];
        Ok(TrajectoryBatch {
            frequency,
            times: seq.times(),
            joints: seq.channels().clone(),
            mode: GenerationMode::Mean,
            latent: Vec::new(),
        })
    }
}

pub fn evaluate<G: TrajectoryGenerator + ?Sized>(generator: &G, library: &ReferenceLibrary) -> Result<[(&'static str, f64); 3]> {
    let l_rec = l_rec_metric(&generate_library_grid(generator, library)?, library)?;
    let e_ba = boundary_amplitude_error(generator, library, &EXTREME_FREQUENCIES, BoundaryReference::Nearest)?;
    let fid = prior_fid(generator, library)?;
    Ok([("l_rec", l_rec), ("e_ba", e_ba), ("fid", fid)])
}

pub fn cmd_eval(checkpoint_path: Option<&Path>, library_dir: &Path, out: &Path, config: &RunConfig) -> Result<String> {
    let library = load_library(library_dir)?;
    let (metrics, hashed) = match checkpoint_path {
        Some(path) => {
            let checkpoint = load_checkpoint(path)?;
            let hashed = RunConfig { train: checkpoint.config.clone(), ..config.clone() };
            (evaluate(&checkpoint.model, &library)?, hashed)
        }
        None => (evaluate(&LibraryReplay(&library), &library)?, config.clone()),
    };
    let hash = hashed.hash();
    let rows: Vec<MetricRow> =
        metrics.iter().map(|&(metric, value)| MetricRow { metric: metric.into(), value, config_hash: hash.clone() }).collect();
    logs::save_metrics(out, &rows)?;
    let text: Vec<String> = metrics.iter().map(|(m, v)| format!("{m} {v:.4e}")).collect();
    Ok(text.join("  "))
}

pub fn cmd_reward_audit(log: &Path, checkpoint_path: &Path, library_dir: Option<&Path>, out: &Path, config: &RunConfig) -> Result<String> {
    let frames = logs::load_log(log)?;
    let checkpoint = load_checkpoint(checkpoint_path)?;
    let library = library_dir.map(load_library).transpose()?;
    let map = checkpoint_map(&checkpoint, library.as_ref())?;
    let reward = &config.reward;
    reward.validate()?;
    let model: &PriorModel = &checkpoint.model;
    let mut previous = 0.0;
    let mut rows = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let filtered = frame
            .filtered_velocity
            .unwrap_or_else(|| filter_command(previous, frame.command_velocity, reward.accel_limit, reward.dt));
        previous = filtered;
        let command = CommandState::new(frame.command_velocity, filtered, frame.command_yaw_rate, &map);
        let q_ref = model.generate_at(command.frequency, &[frame.time], GenerationMode::Mean)?.frame(0);
        let breakdown = total_reward(&frame.state, &command, &q_ref, reward)
            .map_err(|e| Error::format(log, None, format!("frame {i}: {e}")))?;
        rows.push((frame.time, breakdown));
    }
    logs::save_audit(out, &rows)?;
    let mean = rows.iter().map(|r| r.1.total).sum::<f64>() / rows.len().max(1) as f64;
    Ok(format!("audited {} frames to {} (mean total {mean:.4})", rows.len(), out.display()))
}
