//! `cuspevo`: shape, degrade and recalibrate pulse waveforms from the shell.
//!
//! Exit status is 0 on success, 2 when a calibration ends without reaching
//! its target fitness, and 1 for every usage, I/O or validation error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cuspevo_core::{ArithmeticPolicy, FitnessKind, OverflowMode, ShaperParams};

#[derive(Parser, Debug)]
#[command(name = "cuspevo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a waveform through the shaper.
    Shape(ShapeArgs),
    /// Evolve shaper parameters that map an input onto a reference output.
    Calibrate(CalibrateArgs),
    /// Attenuate a waveform and add serial and parallel noise.
    Degrade(DegradeArgs),
    /// Run one of the experiment sets from a JSON config.
    Experiment(ExperimentArgs),
    /// Pulse-height histogram of an event set.
    Histogram(HistogramArgs),
    /// Write synthetic pulses.
    #[command(subcommand)]
    Generate(GenerateCommand),
}

#[derive(Args, Debug, Clone, Copy)]
struct PolicyArgs {
    /// Accumulator width in bits.
    #[arg(long, default_value_t = 48)]
    bits: u32,
    #[arg(long, value_enum, default_value_t = Overflow::Trap)]
    overflow: Overflow,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Overflow {
    Trap,
    Saturate,
    Wrap,
}

impl PolicyArgs {
    fn policy(&self) -> cuspevo_core::Result<ArithmeticPolicy> {
        let mode = match self.overflow {
            Overflow::Trap => OverflowMode::Trap,
            Overflow::Saturate => OverflowMode::Saturate,
            Overflow::Wrap => OverflowMode::Wrap,
        };
        ArithmeticPolicy::new(self.bits, mode)
    }
}

#[derive(Args, Debug)]
struct ShapeArgs {
    /// Waveform CSV (`n,value`).
    #[arg(long)]
    input: PathBuf,
    /// Shaper parameters as `k,l,m1,m2`.
    #[arg(long, allow_hyphen_values = true)]
    params: ShaperParams,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Treat input values as volts and quantize them with this full scale.
    /// Without it the input must hold integer bus codes.
    #[arg(long)]
    full_scale: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Integer shaper output the evolved parameters should reproduce.
    #[arg(long)]
    reference_output: PathBuf,
    #[arg(long, default_value_t = FitnessKind::F2)]
    fitness: FitnessKind,
    /// GA settings as JSON; missing keys take their defaults.
    #[arg(long)]
    ga_config: Option<PathBuf>,
    /// Overrides the seed in the GA config.
    #[arg(long)]
    seed: Option<u64>,
    /// Parameters placed in the initial population.
    #[arg(long, allow_hyphen_values = true)]
    start_from: Vec<ShaperParams>,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    full_scale: Option<f64>,
    /// Evolution result JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DegradeArgs {
    /// Waveform CSV in volts.
    #[arg(long)]
    input: PathBuf,
    /// Attenuation factor in (0, 1].
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    serial_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    parallel_amp: f64,
    /// Only samples above this level are degraded.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ExperimentKind {
    Scratch,
    Degeneration,
    Sweep,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// Experiment config JSON. Scratch and sweep run with defaults when
    /// omitted; degeneration needs at least a `degradation.delta`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the GA master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct HistogramArgs {
    /// Directory of waveform CSVs or one CSV with an `event_id` column.
    #[arg(long)]
    events: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    params: ShaperParams,
    #[arg(long, default_value_t = 128)]
    bins: usize,
    /// Histogram range as `lo,hi`; defaults to zero up to 1.2 times the
    /// largest peak.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    range: Option<(f64, f64)>,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    full_scale: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum GenerateCommand {
    /// One exponential pulse.
    Pulse(PulseArgs),
    /// Pulses with Gaussian-scattered amplitudes, one file with `event_id`.
    Ensemble(EnsembleArgs),
}

#[derive(Args, Debug)]
struct PulseArgs {
    /// Volts.
    #[arg(long, default_value_t = 20.0)]
    amplitude: f64,
    /// Decay constant in seconds.
    #[arg(long, default_value_t = 200e-6)]
    tau: f64,
    /// Sample period in seconds.
    #[arg(long, default_value_t = 20e-6)]
    t_clk: f64,
    #[arg(long, default_value_t = 72)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    onset: usize,
    /// Write bus codes quantized with this full scale instead of volts.
    #[arg(long)]
    full_scale: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    rel_sigma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    onset: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected lo,hi but got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

/// How a successful command ended.
pub enum Status {
    Done,
    NotConverged,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
