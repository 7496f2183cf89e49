use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use cuspevo_core::experiments::{
    self, DegenerationConfig, EnsembleSpec, Histogram, ScratchConfig, SweepConfig,
};
use cuspevo_core::fitness::Evaluator;
use cuspevo_core::{ga, io, shaper, signal};
use cuspevo_core::{
    DegradationSpec, EvolutionResult, GaConfig, IntWaveform, PulseSpec, RealWaveform, Waveform,
};
use serde_json::json;

use crate::manifest::{write_json, RunManifest};
use crate::{
    CalibrateArgs, Command, DegradeArgs, EnsembleArgs, ExperimentArgs, ExperimentKind,
    GenerateCommand, HistogramArgs, PulseArgs, ShapeArgs, Status,
};

pub fn run(command: Command) -> Result<Status> {
    match command {
        Command::Shape(a) => shape(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Degrade(a) => degrade(a),
        Command::Experiment(a) => experiment(a),
        Command::Histogram(a) => histogram(a),
        Command::Generate(GenerateCommand::Pulse(a)) => pulse(a),
        Command::Generate(GenerateCommand::Ensemble(a)) => ensemble(a),
    }
}

/// Uses the given seed or draws a fresh one and reports it.
fn resolve_seed(explicit: Option<u64>) -> u64 {
    explicit.unwrap_or_else(|| {
        let seed = rand::random();
        eprintln!("seed: {seed}");
        seed
    })
}

/// Bus codes from a file of volts (with a full scale) or of integers.
fn to_bus(w: RealWaveform, full_scale: Option<f64>, path: &Path) -> Result<IntWaveform> {
    if let Some(fs) = full_scale {
        return Ok(w.quantize(fs)?);
    }
    let samples = w
        .samples
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            if x.fract() != 0.0 || !x.is_finite() {
                bail!(
                    "{}: sample {n} is {x}, not an integer bus code (pass --full-scale for volts)",
                    path.display()
                );
            }
            Ok(x as i64)
        })
        .collect::<Result<Vec<_>>>()?;
    let w = Waveform::new(samples, w.sample_period);
    w.check_bus_range()?;
    Ok(w)
}

fn load_bus(path: &Path, full_scale: Option<f64>) -> Result<IntWaveform> {
    to_bus(io::load_waveform::<f64>(path)?, full_scale, path)
}

fn finish_file(mut manifest: RunManifest, out: &Path) -> Result<Status> {
    manifest.output(out);
    manifest.write(&RunManifest::path_for(out))?;
    Ok(Status::Done)
}

fn shape(a: ShapeArgs) -> Result<Status> {
    let policy = a.policy.policy()?;
    let v = load_bus(&a.input, a.full_scale)?;
    let s = shaper::shape(&v, &a.params, &policy)?;
    io::save_waveform(&s, &a.out)?;
    let manifest = RunManifest::new(
        "shape",
        json!({ "params": a.params, "policy": policy, "full_scale": a.full_scale }),
    )?
    .input(&a.input);
    finish_file(manifest, &a.out)
}

fn load_ga_config(path: Option<&Path>) -> Result<(GaConfig, bool)> {
    let Some(path) = path else {
        return Ok((GaConfig::default(), false));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let has_seed = value.get("seed").is_some();
    let config: GaConfig =
        serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?;
    Ok((config, has_seed))
}

fn calibrate(a: CalibrateArgs) -> Result<Status> {
    let policy = a.policy.policy()?;
    let v = load_bus(&a.input, a.full_scale)?;
    let s_ref = io::load_waveform::<i64>(&a.reference_output)?;
    let evaluator = Evaluator::new(&v, &s_ref, a.fitness, policy)?;

    let (mut config, config_seed) = load_ga_config(a.ga_config.as_deref())?;
    let seed = resolve_seed(a.seed.or(config_seed.then_some(config.seed)));
    config.seed = seed;
    if !a.start_from.is_empty() {
        config.initial_population = a.start_from.clone();
    }
    config.validate()?;

    let result = ga::evolve_parallel(&config, |p| evaluator.evaluate(p))?;
    write_json(&a.out, &result)?;
    eprintln!(
        "best {} fitness {} after {} generations",
        result.best_params, result.best_fitness, result.generations
    );

    let mut manifest = RunManifest::new(
        "calibrate",
        json!({ "fitness": a.fitness, "policy": policy, "ga": config, "full_scale": a.full_scale }),
    )?
    .input(&a.input)
    .input(&a.reference_output)
    .seed(seed);
    manifest.output(&a.out);
    manifest.write(&RunManifest::path_for(&a.out))?;
    Ok(if result.converged {
        Status::Done
    } else {
        Status::NotConverged
    })
}

fn degrade(a: DegradeArgs) -> Result<Status> {
    let v = io::load_waveform::<f64>(&a.input)?;
    let noisy = a.serial_sigma != 0.0 || a.parallel_amp != 0.0;
    let seed = if noisy {
        resolve_seed(a.seed)
    } else {
        a.seed.unwrap_or(0)
    };
    let spec = DegradationSpec {
        delta: a.delta,
        serial_sigma: a.serial_sigma,
        parallel_amp: a.parallel_amp,
        threshold: a.threshold,
        seed,
    };
    let out = signal::degrade(&v, &spec)?;
    io::save_waveform(&out, &a.out)?;
    let manifest = RunManifest::new("degrade", spec)?
        .input(&a.input)
        .seed(seed);
    finish_file(manifest, &a.out)
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn csv_file(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_traces<'a>(
    path: &Path,
    label: &str,
    traces: impl Iterator<Item = (String, &'a [u64])>,
) -> Result<()> {
    let mut out = csv_file(path)?;
    writeln!(out, "{label},generation,best_fitness")?;
    for (id, trace) in traces {
        for (g, f) in trace.iter().enumerate() {
            writeln!(out, "{id},{},{f}", g + 1)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_runs(path: &Path, runs: &[EvolutionResult]) -> Result<()> {
    let mut out = csv_file(path)?;
    writeln!(
        out,
        "run,seed,converged,generations,evaluations,wall_time,k,l,m1,m2,best_fitness"
    )?;
    for (i, r) in runs.iter().enumerate() {
        let p = r.best_params;
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.converged,
            r.generations,
            r.evaluations,
            r.wall_time,
            p.k(),
            p.l(),
            p.m1(),
            p.m2(),
            r.best_fitness
        )?;
    }
    out.flush()?;
    Ok(())
}

fn save_histogram(h: &Histogram, path: &Path) -> Result<()> {
    h.write_csv(csv_file(path)?)
        .with_context(|| format!("writing {}", path.display()))
}

fn experiment(a: ExperimentArgs) -> Result<Status> {
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let dir = a.out_dir.as_path();
    let mut outputs = Vec::new();
    let mut out = |name: &str| {
        let p = dir.join(name);
        outputs.push(p.clone());
        p
    };

    let (name, config, seed) = match a.kind {
        ExperimentKind::Scratch => {
            let mut config: ScratchConfig = match &a.config {
                Some(p) => read_config(p)?,
                None => ScratchConfig::default(),
            };
            config.ga.seed = a.seed.unwrap_or(config.ga.seed);
            let report = experiments::run_scratch(&config)?;
            eprintln!(
                "{}/{} runs converged, median {} generations",
                report.stats.successes, report.stats.runs, report.stats.generations.median
            );
            write_json(&out("stats.json"), &report.stats)?;
            write_json(&out("runs.json"), &report.runs)?;
            write_runs(&out("runs.csv"), &report.runs)?;
            write_traces(
                &out("traces.csv"),
                "run",
                report
                    .runs
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (i.to_string(), r.fitness_trace.as_slice())),
            )?;
            (
                "experiment scratch",
                serde_json::to_value(&config)?,
                config.ga.seed,
            )
        }
        ExperimentKind::Degeneration => {
            let Some(path) = &a.config else {
                bail!("degeneration needs --config with at least degradation.delta");
            };
            let mut config: DegenerationConfig = read_config(path)?;
            config.ga.seed = a.seed.unwrap_or(config.ga.seed);
            let events = config.events.load()?;
            let report = experiments::run_degeneration(&events, &config)?;
            eprintln!(
                "regenerated {} (fitness {}), peak error {:+.2}%",
                report.regenerated_params, report.fitness, report.relative_error
            );
            write_json(&out("report.json"), &report)?;
            save_histogram(&report.histograms.original, &out("histogram_original.csv"))?;
            save_histogram(&report.histograms.damaged, &out("histogram_damaged.csv"))?;
            save_histogram(&report.histograms.restored, &out("histogram_restored.csv"))?;
            write_traces(
                &out("trace.csv"),
                "run",
                std::iter::once(("0".to_string(), report.evolution.fitness_trace.as_slice())),
            )?;
            (
                "experiment degeneration",
                serde_json::to_value(&config)?,
                config.ga.seed,
            )
        }
        ExperimentKind::Sweep => {
            let mut config: SweepConfig = match &a.config {
                Some(p) => read_config(p)?,
                None => SweepConfig::default(),
            };
            config.ga.seed = a.seed.unwrap_or(config.ga.seed);
            let report = experiments::run_sweep(&config)?;
            eprintln!(
                "{} points, mean error {:+.2}% (std {:.2}%), max |error| {:.2}%",
                report.points.len(),
                report.mean_error,
                report.std_error,
                report.max_abs_error
            );
            write_json(&out("report.json"), &report)?;
            let mut csv = csv_file(&out("points.csv"))?;
            writeln!(
                csv,
                "amplitude_pct,tau_pct,amplitude,tau,relative_error,k,l,m1,m2,fitness,generations"
            )?;
            for p in &report.points {
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    p.amplitude_pct,
                    p.tau_pct,
                    p.amplitude,
                    p.tau,
                    p.relative_error,
                    p.params.k(),
                    p.params.l(),
                    p.params.m1(),
                    p.params.m2(),
                    p.fitness,
                    p.generations
                )?;
            }
            csv.flush()?;
            write_traces(
                &out("traces.csv"),
                "point",
                report
                    .points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i.to_string(), p.fitness_trace.as_slice())),
            )?;
            (
                "experiment sweep",
                serde_json::to_value(&config)?,
                config.ga.seed,
            )
        }
    };
    eprintln!("seed: {seed}");

    let mut manifest = RunManifest::new(name, config)?.seed(seed);
    if let Some(p) = &a.config {
        manifest = manifest.input(p);
    }
    for p in &outputs {
        manifest.output(p);
    }
    manifest.write(&dir.join("manifest.json"))?;
    Ok(Status::Done)
}

fn histogram(a: HistogramArgs) -> Result<Status> {
    let policy = a.policy.policy()?;
    let events = io::load_events(&a.events)?;
    let events = events
        .into_iter()
        .map(|e| to_bus(e, a.full_scale, &a.events))
        .collect::<Result<Vec<_>>>()?;
    let h = experiments::build_histogram(&events, &a.params, a.bins, a.range, &policy)?;
    save_histogram(&h, &a.out)?;
    let manifest = RunManifest::new(
        "histogram",
        json!({
            "params": a.params,
            "bins": a.bins,
            "range": h.range(),
            "policy": policy,
            "full_scale": a.full_scale,
            "events": events.len(),
        }),
    )?
    .input(&a.events);
    finish_file(manifest, &a.out)
}

fn pulse(a: PulseArgs) -> Result<Status> {
    let spec = PulseSpec {
        amplitude: a.amplitude,
        tau: a.tau,
        t_clk: a.t_clk,
        n_samples: a.samples,
        onset: a.onset,
    };
    let v = signal::gen_exponential(&spec)?;
    match a.full_scale {
        Some(fs) => io::save_waveform(&v.quantize(fs)?, &a.out)?,
        None => io::save_waveform(&v, &a.out)?,
    }
    let manifest = RunManifest::new(
        "generate pulse",
        json!({ "pulse": spec, "full_scale": a.full_scale }),
    )?;
    finish_file(manifest, &a.out)
}

fn ensemble(a: EnsembleArgs) -> Result<Status> {
    ensure!(a.count > 0, "--count must be at least 1");
    let d = EnsembleSpec::default();
    let spec = EnsembleSpec {
        count: a.count,
        nominal_amplitude: a.amplitude.unwrap_or(d.nominal_amplitude),
        amplitude_rel_sigma: a.rel_sigma.unwrap_or(d.amplitude_rel_sigma),
        tau: a.tau.unwrap_or(d.tau),
        t_clk: d.t_clk,
        n_samples: a.samples.unwrap_or(d.n_samples),
        onset: a.onset.unwrap_or(d.onset),
        seed: resolve_seed(a.seed),
    };
    let events = experiments::gen_ensemble(&spec)?;
    io::save_events(&events, &a.out)?;
    let manifest = RunManifest::new("generate ensemble", &spec)?.seed(spec.seed);
    finish_file(manifest, &a.out)
}
