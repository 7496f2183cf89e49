//! Experiment harness.
//!
//! * [`run_scratch`]: repeated evolution from a random population towards
//!   the output of a known shaper; convergence statistics.
//! * [`run_degeneration`]: degrade an event set, recalibrate on one event,
//!   and compare original, damaged and restored pulse-height histograms.
//! * [`run_sweep`]: vary amplitude and decay constant of the synthetic
//!   reference pulse, recalibrate for each variation, and measure the peak
//!   error of the restored output.

pub mod histogram;
pub mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{Evaluator, FitnessKind, FitnessValue};
use crate::ga::{self, EvolutionResult, GaConfig};
use crate::params::ShaperParams;
use crate::shaper::{self, ArithmeticPolicy};
use crate::signal::{self, DegradationSpec, PulseSpec};
use crate::waveform::{IntWaveform, RealWaveform, BUS_MAX};

pub use histogram::{build_histogram, Histogram};
pub use stats::{linear_fit, LinearFit, Summary};

/// Default bus full scale, volts.
pub const DEFAULT_FULL_SCALE: f64 = 20.0;

/// Per-run seed derived from a master seed (splitmix64 of `master + index`).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Signed peak error of `restored` against `reference`, in percent.
pub fn relative_error(restored: &[i64], reference: &[i64]) -> Result<f64> {
    let (_, peak) = shaper::peak(restored).ok_or(Error::NoSamples)?;
    let (_, ref_peak) = shaper::peak(reference).ok_or(Error::NoSamples)?;
    if ref_peak == 0 {
        return Err(Error::ZeroReferencePeak);
    }
    Ok(100.0 * (peak - ref_peak) as f64 / ref_peak as f64)
}

/// Raw bus-unit fitness mapped back to input volts.
pub fn rescale_fitness(raw: FitnessValue, full_scale: f64) -> f64 {
    raw as f64 * full_scale / BUS_MAX as f64
}

fn synthetic_reference() -> ShaperParams {
    ShaperParams::new(63, 31, 19, 2).expect("valid")
}

fn event_reference() -> ShaperParams {
    ShaperParams::new(31, 15, 57, 13).expect("valid")
}

fn default_full_scale() -> f64 {
    DEFAULT_FULL_SCALE
}

fn default_true() -> bool {
    true
}

/// Aggregate of repeated GA runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStats {
    pub runs: usize,
    pub successes: usize,
    /// Over all runs; unsuccessful runs count with their final generation.
    pub generations: Summary,
    /// Seconds.
    pub wall_time: Summary,
}

impl ConvergenceStats {
    pub fn from_results(results: &[EvolutionResult]) -> Result<Self> {
        let gens: Vec<f64> = results.iter().map(|r| r.generations as f64).collect();
        let times: Vec<f64> = results.iter().map(|r| r.wall_time).collect();
        Ok(ConvergenceStats {
            runs: results.len(),
            successes: results.iter().filter(|r| r.converged).count(),
            generations: Summary::of(&gens).ok_or(Error::Config("no runs".into()))?,
            wall_time: Summary::of(&times).ok_or(Error::Config("no runs".into()))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScratchConfig {
    #[serde(default = "synthetic_reference")]
    pub reference_params: ShaperParams,
    #[serde(default = "PulseSpec::reference")]
    pub pulse: PulseSpec,
    #[serde(default = "default_full_scale")]
    pub full_scale: f64,
    #[serde(default)]
    pub fitness: FitnessKind,
    #[serde(default)]
    pub policy: ArithmeticPolicy,
    /// `ga.seed` is the master seed; every run gets a derived one.
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default = "default_runs")]
    pub runs: usize,
}

fn default_runs() -> usize {
    20
}

impl Default for ScratchConfig {
    fn default() -> Self {
        ScratchConfig {
            reference_params: synthetic_reference(),
            pulse: PulseSpec::reference(),
            full_scale: DEFAULT_FULL_SCALE,
            fitness: FitnessKind::F2,
            policy: ArithmeticPolicy::default(),
            ga: GaConfig::default(),
            runs: default_runs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScratchReport {
    pub stats: ConvergenceStats,
    pub runs: Vec<EvolutionResult>,
}

/// Builds the quantized reference input and its reference output.
pub fn reference_pair(
    pulse: &PulseSpec,
    params: &ShaperParams,
    full_scale: f64,
    policy: &ArithmeticPolicy,
) -> Result<(IntWaveform, IntWaveform)> {
    let v = signal::gen_exponential(pulse)?.quantize(full_scale)?;
    let s = shaper::shape(&v, params, policy)?;
    Ok((v, s))
}

pub fn run_scratch(config: &ScratchConfig) -> Result<ScratchReport> {
    if config.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    config.ga.validate()?;
    let (v, s_ref) = reference_pair(
        &config.pulse,
        &config.reference_params,
        config.full_scale,
        &config.policy,
    )?;
    let evaluator = Evaluator::new(&v, &s_ref, config.fitness, config.policy)?;
    let runs = (0..config.runs)
        .into_par_iter()
        .map(|i| {
            let ga = config
                .ga
                .clone()
                .with_seed(derive_seed(config.ga.seed, i as u64));
            ga::evolve(&ga, |p| evaluator.evaluate(p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScratchReport {
        stats: ConvergenceStats::from_results(&runs)?,
        runs,
    })
}

/// Synthetic stand-in for a recorded event set: exponential pulses whose
/// amplitudes scatter around a nominal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub count: usize,
    /// Volts.
    pub nominal_amplitude: f64,
    /// Standard deviation of the amplitude relative to the nominal value.
    pub amplitude_rel_sigma: f64,
    pub tau: f64,
    pub t_clk: f64,
    pub n_samples: usize,
    pub onset: usize,
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        let t_clk = 20e-6;
        let ratio = 57.0 / 13.0;
        EnsembleSpec {
            count: 1000,
            nominal_amplitude: 12.0,
            amplitude_rel_sigma: 0.03,
            // decay constant the (31,15,57,13) shaper is matched to
            tau: shaper::tau_for_ratio(ratio, t_clk).expect("positive"),
            t_clk,
            n_samples: 96,
            onset: 8,
            seed: 1,
        }
    }
}

pub fn gen_ensemble(spec: &EnsembleSpec) -> Result<Vec<RealWaveform>> {
    if spec.count == 0 {
        return Err(Error::Config("ensemble needs at least one event".into()));
    }
    if !(spec.amplitude_rel_sigma >= 0.0) {
        return Err(Error::Config(
            "amplitude_rel_sigma must be non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let pulse = PulseSpec {
                amplitude: spec.nominal_amplitude * (1.0 + spec.amplitude_rel_sigma * z),
                tau: spec.tau,
                t_clk: spec.t_clk,
                n_samples: spec.n_samples,
                onset: spec.onset,
            };
            signal::gen_exponential(&pulse)
        })
        .collect()
}

/// Where the degeneration experiment takes its events from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum EventSource {
    Synthetic(EnsembleSpec),
    /// Directory of waveform files or a single file with `event_id`.
    Files {
        path: std::path::PathBuf,
    },
}

impl Default for EventSource {
    fn default() -> Self {
        EventSource::Synthetic(EnsembleSpec::default())
    }
}

impl EventSource {
    pub fn load(&self) -> Result<Vec<RealWaveform>> {
        match self {
            EventSource::Synthetic(spec) => gen_ensemble(spec),
            EventSource::Files { path } => crate::io::load_events(path),
        }
    }
}

/// Degradation settings; unset noise magnitudes default to 1 % (serial) and
/// 0.5 % (parallel) of the calibration event's peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationSettings {
    pub delta: f64,
    #[serde(default)]
    pub serial_sigma: Option<f64>,
    #[serde(default)]
    pub parallel_amp: Option<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_threshold() -> f64 {
    1.0
}

impl DegradationSettings {
    pub fn with_default_noise(delta: f64, seed: u64) -> Self {
        DegradationSettings {
            delta,
            serial_sigma: None,
            parallel_amp: None,
            threshold: default_threshold(),
            seed,
        }
    }

    pub fn noiseless(delta: f64) -> Self {
        DegradationSettings {
            serial_sigma: Some(0.0),
            parallel_amp: Some(0.0),
            ..Self::with_default_noise(delta, 0)
        }
    }

    /// Concrete spec for a signal whose amplitude is `amplitude`.
    pub fn resolve(&self, amplitude: f64) -> DegradationSpec {
        let defaults = DegradationSpec::with_default_noise(self.delta, amplitude, self.seed);
        DegradationSpec {
            delta: self.delta,
            serial_sigma: self.serial_sigma.unwrap_or(defaults.serial_sigma),
            parallel_amp: self.parallel_amp.unwrap_or(defaults.parallel_amp),
            threshold: self.threshold,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegenerationConfig {
    #[serde(default = "event_reference")]
    pub reference_params: ShaperParams,
    #[serde(default)]
    pub events: EventSource,
    /// Event used for recalibration.
    #[serde(default)]
    pub calibration_index: usize,
    pub degradation: DegradationSettings,
    #[serde(default = "default_full_scale")]
    pub full_scale: f64,
    #[serde(default)]
    pub fitness: FitnessKind,
    #[serde(default)]
    pub policy: ArithmeticPolicy,
    #[serde(default)]
    pub ga: GaConfig,
    /// Start the GA from the deployed parameters instead of from scratch.
    #[serde(default = "default_true")]
    pub seed_with_reference: bool,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Histogram range; defaults to `[0, 1.2 × max original peak]`.
    #[serde(default)]
    pub histogram_range: Option<(f64, f64)>,
}

fn default_bins() -> usize {
    128
}

impl DegenerationConfig {
    pub fn new(degradation: DegradationSettings) -> Self {
        DegenerationConfig {
            reference_params: event_reference(),
            events: EventSource::default(),
            calibration_index: 0,
            degradation,
            full_scale: DEFAULT_FULL_SCALE,
            fitness: FitnessKind::F2,
            policy: ArithmeticPolicy::default(),
            ga: GaConfig::default(),
            seed_with_reference: true,
            bins: default_bins(),
            histogram_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerationHistograms {
    pub original: Histogram,
    pub damaged: Histogram,
    pub restored: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerationReport {
    pub reference_params: ShaperParams,
    pub regenerated_params: ShaperParams,
    pub degradation: DegradationSpec,
    /// Fitness in raw bus units.
    pub fitness: FitnessValue,
    /// Fitness rescaled to input volts.
    pub fitness_rescaled: f64,
    /// Peak error of the restored calibration output, percent.
    pub relative_error: f64,
    /// Peak error of the damaged calibration output before recalibration.
    pub damaged_relative_error: f64,
    pub events: usize,
    pub evolution: EvolutionResult,
    pub histograms: DegenerationHistograms,
    /// Restored outputs of every event.
    #[serde(skip)]
    pub restored: Vec<IntWaveform>,
    /// Reference output of the calibration event.
    #[serde(skip)]
    pub reference_output: IntWaveform,
}

/// Degrades every event, recalibrates on the designated one, and reshapes
/// all damaged events with the recalibrated parameters.
pub fn run_degeneration(
    events: &[RealWaveform],
    config: &DegenerationConfig,
) -> Result<DegenerationReport> {
    if events.is_empty() {
        return Err(Error::NoSamples);
    }
    let calib = config.calibration_index;
    if calib >= events.len() {
        return Err(Error::Config(format!(
            "calibration_index {calib} out of range for {} events",
            events.len()
        )));
    }
    let policy = &config.policy;
    let reference = &config.reference_params;
    let amplitude = shaper::peak(&events[calib].samples).map_or(0.0, |(_, a)| a);
    let deg = config.degradation.resolve(amplitude);
    deg.validate()?;

    let original: Vec<IntWaveform> = events
        .iter()
        .map(|e| e.quantize(config.full_scale))
        .collect::<Result<_>>()?;
    let damaged: Vec<IntWaveform> = events
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let spec = DegradationSpec {
                seed: derive_seed(deg.seed, i as u64),
                ..deg
            };
            signal::degrade(e, &spec)?.quantize(config.full_scale)
        })
        .collect::<Result<_>>()?;

    let s_ref = shaper::shape(&original[calib], reference, policy)?;
    let evaluator = Evaluator::new(&damaged[calib], &s_ref, config.fitness, *policy)?;
    let mut ga = config.ga.clone();
    if config.seed_with_reference && ga.initial_population.is_empty() {
        ga.initial_population = vec![*reference];
    }
    let evolution = ga::evolve_parallel(&ga, |p| evaluator.evaluate(p))?;
    let best = evolution.best_params;

    let restored: Vec<IntWaveform> = damaged
        .par_iter()
        .map(|e| shaper::shape(e, &best, policy))
        .collect::<Result<_>>()?;
    let damaged_out = shaper::shape(&damaged[calib], reference, policy)?;

    let original_peaks = histogram::peak_heights(&original, reference, policy)?;
    let damaged_peaks = histogram::peak_heights(&damaged, reference, policy)?;
    let restored_peaks: Vec<i64> = restored
        .iter()
        .map(|s| s.peak().map_or(0, |(_, p)| p))
        .collect();
    let (lo, hi) = config
        .histogram_range
        .unwrap_or_else(|| histogram::default_range(&original_peaks));
    let hist = |peaks: &[i64]| {
        let values: Vec<f64> = peaks.iter().map(|&p| p as f64).collect();
        Histogram::from_values(&values, lo, hi, config.bins)
    };

    Ok(DegenerationReport {
        reference_params: *reference,
        regenerated_params: best,
        degradation: deg,
        fitness: evolution.best_fitness,
        fitness_rescaled: rescale_fitness(evolution.best_fitness, config.full_scale),
        relative_error: relative_error(&restored[calib].samples, &s_ref.samples)?,
        damaged_relative_error: relative_error(&damaged_out.samples, &s_ref.samples)?,
        events: events.len(),
        histograms: DegenerationHistograms {
            original: hist(&original_peaks)?,
            damaged: hist(&damaged_peaks)?,
            restored: hist(&restored_peaks)?,
        },
        evolution,
        restored,
        reference_output: s_ref,
    })
}

/// One grid point of a sweep, as percentage changes of the reference pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub amplitude_pct: f64,
    pub tau_pct: f64,
}

/// Full grid over `steps` (percent) in both amplitude and decay constant.
pub fn variation_grid(steps: &[f64]) -> Vec<Variation> {
    steps
        .iter()
        .flat_map(|&a| {
            steps.iter().map(move |&t| Variation {
                amplitude_pct: a,
                tau_pct: t,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "synthetic_reference")]
    pub reference_params: ShaperParams,
    #[serde(default = "PulseSpec::reference")]
    pub pulse: PulseSpec,
    /// Must leave room for the largest amplitude in the sweep.
    #[serde(default = "sweep_full_scale")]
    pub full_scale: f64,
    #[serde(default)]
    pub fitness: FitnessKind,
    #[serde(default)]
    pub policy: ArithmeticPolicy,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default = "default_true")]
    pub seed_with_reference: bool,
    #[serde(default = "default_variations")]
    pub variations: Vec<Variation>,
}

fn sweep_full_scale() -> f64 {
    26.0
}

fn default_variations() -> Vec<Variation> {
    variation_grid(&[-30.0, -15.0, 0.0, 15.0, 30.0])
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            reference_params: synthetic_reference(),
            pulse: PulseSpec::reference(),
            full_scale: sweep_full_scale(),
            fitness: FitnessKind::F2,
            policy: ArithmeticPolicy::default(),
            ga: GaConfig::default(),
            seed_with_reference: true,
            variations: default_variations(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub amplitude_pct: f64,
    pub tau_pct: f64,
    /// Volts.
    pub amplitude: f64,
    /// Seconds.
    pub tau: f64,
    pub relative_error: f64,
    pub params: ShaperParams,
    pub fitness: FitnessValue,
    pub generations: usize,
    pub fitness_trace: Vec<FitnessValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub mean_error: f64,
    pub std_error: f64,
    pub max_abs_error: f64,
    /// Error against amplitude change, decay constant held.
    pub amplitude_fit: Option<LinearFit>,
    /// Error against decay-constant change, amplitude held.
    pub tau_fit: Option<LinearFit>,
    /// Error along equal changes of both.
    pub combined_fit: Option<LinearFit>,
}

fn slice_fit(
    points: &[SweepPoint],
    keep: impl Fn(&SweepPoint) -> bool,
    x: impl Fn(&SweepPoint) -> f64,
) -> Option<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| keep(p))
        .map(|p| (x(p), p.relative_error))
        .unzip();
    linear_fit(&xs, &ys).ok()
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    if config.variations.is_empty() {
        return Err(Error::Config("sweep needs at least one variation".into()));
    }
    config.ga.validate()?;
    let reference = &config.reference_params;
    let (_, s_ref) = reference_pair(&config.pulse, reference, config.full_scale, &config.policy)?;

    let points = config
        .variations
        .par_iter()
        .enumerate()
        .map(|(i, var)| {
            let pulse = PulseSpec {
                amplitude: config.pulse.amplitude * (1.0 + var.amplitude_pct / 100.0),
                tau: config.pulse.tau * (1.0 + var.tau_pct / 100.0),
                ..config.pulse
            };
            let v = signal::gen_exponential(&pulse)?.quantize(config.full_scale)?;
            let evaluator = Evaluator::new(&v, &s_ref, config.fitness, config.policy)?;
            let mut ga = config
                .ga
                .clone()
                .with_seed(derive_seed(config.ga.seed, i as u64));
            if config.seed_with_reference && ga.initial_population.is_empty() {
                ga.initial_population = vec![*reference];
            }
            let r = ga::evolve(&ga, |p| evaluator.evaluate(p))?;
            let restored = shaper::shape(&v, &r.best_params, &config.policy)?;
            Ok(SweepPoint {
                amplitude_pct: var.amplitude_pct,
                tau_pct: var.tau_pct,
                amplitude: pulse.amplitude,
                tau: pulse.tau,
                relative_error: relative_error(&restored.samples, &s_ref.samples)?,
                params: r.best_params,
                fitness: r.best_fitness,
                generations: r.generations,
                fitness_trace: r.fitness_trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let errors: Vec<f64> = points.iter().map(|p| p.relative_error).collect();
    Ok(SweepReport {
        mean_error: stats::mean(&errors),
        std_error: stats::std_dev(&errors),
        max_abs_error: errors.iter().fold(0.0, |m, e| e.abs().max(m)),
        amplitude_fit: slice_fit(&points, |p| p.tau_pct == 0.0, |p| p.amplitude_pct),
        tau_fit: slice_fit(&points, |p| p.amplitude_pct == 0.0, |p| p.tau_pct),
        combined_fit: slice_fit(
            &points,
            |p| p.amplitude_pct == p.tau_pct,
            |p| p.amplitude_pct,
        ),
        points,
    })
}
