//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cuspevo_core::experiments::{
    self, run_degeneration, run_scratch, run_sweep, DegenerationConfig, DegenerationReport,
    DegradationSettings, ScratchConfig, ScratchReport, SweepConfig, SweepReport,
};
use cuspevo_core::fitness::{f1, f2, Evaluator};
use cuspevo_core::ga::{self, decode, encode};
use cuspevo_core::shaper::{self, gain_ratio, shape, shape_oracle};
use cuspevo_core::signal::{gen_one_over_f2_noise, gen_white_noise};
use cuspevo_core::waveform::{BUS_MAX, BUS_MIN};
use cuspevo_core::{
    ArithmeticPolicy, Chromosome, FitnessKind, GaConfig, PulseSpec, ShaperParams, Waveform,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

const MAX_ABS_ERROR_PCT: f64 = 8.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

/// Results of the experiment criteria, reused by the GA invariant check.
#[derive(Default)]
struct Runs {
    scratch: Option<ScratchReport>,
    degeneration: Vec<DegenerationReport>,
    sweep: Option<SweepReport>,
}

fn within_budget(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let policy = ArithmeticPolicy::default();
    let (mut checked, mut mismatches, mut attempts) = (0usize, 0usize, 0usize);
    while checked < 2000 && attempts < 200_000 {
        attempts += 1;
        let len = rng.random_range(1..=128);
        let samples: Vec<i64> = (0..len)
            .map(|_| rng.random_range(BUS_MIN..=BUS_MAX))
            .collect();
        let gain = if rng.random_bool(0.5) { 8192 } else { 64 };
        let p = ShaperParams::new(
            rng.random_range(0..=63),
            rng.random_range(0..=63),
            rng.random_range(-gain..gain),
            rng.random_range(-gain..gain),
        )
        .unwrap();
        let v = Waveform::from_samples(samples);
        let Ok(s) = shape(&v, &p, &policy) else {
            continue;
        };
        checked += 1;
        let oracle = shape_oracle(&v.to_real(), &p);
        if s.samples
            .iter()
            .zip(&oracle.samples)
            .any(|(&a, &b)| a as f64 != b)
        {
            mismatches += 1;
        }
    }
    Outcome::new(
        checked >= 1000 && mismatches == 0,
        format!("{checked} pairs within 48-bit headroom, {mismatches} mismatches"),
    )
}

fn encoding_bijection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 10_000;
    let mut failures = 0;
    for _ in 0..n {
        let c = Chromosome::random(&mut rng);
        if encode(&decode(&c)) != c {
            failures += 1;
        }
        let p = ShaperParams::new(
            rng.random_range(0..=63),
            rng.random_range(0..=63),
            rng.random_range(-8192..=8191),
            rng.random_range(-8192..=8191),
        )
        .unwrap();
        if decode(&encode(&p)) != p {
            failures += 1;
        }
    }
    Outcome::new(
        failures == 0,
        format!("{n} chromosomes and {n} parameter sets, {failures} failures"),
    )
}

fn gain_ratio_check() -> Outcome {
    let r = gain_ratio(200e-6, 20e-6).unwrap();
    let reference = ShaperParams::new(63, 31, 19, 2).unwrap();
    let m_ratio = reference.m1() as f64 / reference.m2() as f64;
    let nearest_half = (r * reference.m2() as f64).round() as i64;
    Outcome::new(
        (r - 9.5083).abs() <= 1e-4 && nearest_half == reference.m1() as i64,
        format!("ratio {r:.6}, m1/m2 = {m_ratio}, nearest m1 for m2 = 2 is {nearest_half}"),
    )
}

fn scratch_convergence(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let report = run_scratch(&ScratchConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let s = &report.stats;
    let pass =
        s.successes == s.runs && s.generations.median <= 2000.0 && within_budget(elapsed, 120);
    let detail = format!(
        "{}/{} runs reached fitness 0, generations median {} (min {}, max {}), {:.1?}",
        s.successes, s.runs, s.generations.median, s.generations.min, s.generations.max, elapsed
    );
    runs.scratch = Some(report);
    Outcome::new(pass, detail)
}

fn degeneration_restoration(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for delta in [0.8, 0.6] {
        let config = DegenerationConfig::new(DegradationSettings::with_default_noise(delta, 0));
        let events = config.events.load().unwrap();
        let r = run_degeneration(&events, &config).unwrap();
        pass &= r.relative_error.abs() <= MAX_ABS_ERROR_PCT;
        parts.push(format!(
            "delta {delta}: {} error {:+.2}% (damaged {:+.2}%)",
            r.regenerated_params, r.relative_error, r.damaged_relative_error
        ));
        runs.degeneration.push(r);
    }
    let config = DegenerationConfig::new(DegradationSettings::noiseless(1.0));
    let events = config.events.load().unwrap();
    let r = run_degeneration(&events, &config).unwrap();
    pass &= r.relative_error == 0.0;
    parts.push(format!("delta 1 noiseless: error {}%", r.relative_error));
    runs.degeneration.push(r);
    let elapsed = start.elapsed();
    pass &= within_budget(elapsed, 120);
    Outcome::new(pass, format!("{}, {elapsed:.1?}", parts.join("; ")))
}

fn sweep_bound(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let report = run_sweep(&SweepConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let violations: Vec<String> = report
        .points
        .iter()
        .filter(|p| p.relative_error.abs() > MAX_ABS_ERROR_PCT)
        .map(|p| {
            format!(
                "({:+}%, {:+}%) -> {:+.2}%",
                p.amplitude_pct, p.tau_pct, p.relative_error
            )
        })
        .collect();
    let pass = report.points.len() == 25
        && violations.is_empty()
        && report.mean_error.abs() <= 5.0
        && within_budget(elapsed, 600);
    let detail = format!(
        "{} points, mean {:+.2}% std {:.2}%, max |e| {:.2}%, over bound: [{}], {elapsed:.1?}",
        report.points.len(),
        report.mean_error,
        report.std_error,
        report.max_abs_error,
        violations.join(", ")
    );
    runs.sweep = Some(report);
    Outcome::new(pass, detail)
}

fn fitness_discrimination() -> Outcome {
    let (_, s_ref) = experiments::reference_pair(
        &PulseSpec::reference(),
        &ShaperParams::new(63, 31, 19, 2).unwrap(),
        20.0,
        &ArithmeticPolicy::default(),
    )
    .unwrap();
    let shift = 3;
    let mut shifted = s_ref.samples[shift..].to_vec();
    shifted.extend(std::iter::repeat_n(0, shift));
    let same_peak = shaper::peak(&shifted).unwrap().1 == s_ref.peak().unwrap().1;
    let a = f1(&shifted, &s_ref.samples).unwrap();
    let b = f2(&shifted, &s_ref.samples).unwrap();
    Outcome::new(
        same_peak && a == 0 && b > 0,
        format!("output advanced {shift} samples: F1 = {a}, F2 = {b}"),
    )
}

fn ga_invariants(runs: &Runs) -> Outcome {
    let mut traces: Vec<&[u64]> = Vec::new();
    if let Some(s) = &runs.scratch {
        traces.extend(s.runs.iter().map(|r| r.fitness_trace.as_slice()));
    }
    traces.extend(
        runs.degeneration
            .iter()
            .map(|r| r.evolution.fitness_trace.as_slice()),
    );
    if let Some(s) = &runs.sweep {
        traces.extend(s.points.iter().map(|p| p.fitness_trace.as_slice()));
    }
    let monotone = traces.iter().all(|t| t.windows(2).all(|w| w[1] <= w[0]));

    let config = ScratchConfig {
        runs: 1,
        ga: GaConfig {
            max_generations: 500,
            seed: 99,
            ..Default::default()
        },
        ..Default::default()
    };
    let a = run_scratch(&config).unwrap();
    let b = run_scratch(&config).unwrap();
    let reproducible = a.runs[0].same_trajectory(&b.runs[0]);

    let (v, s_ref) = experiments::reference_pair(
        &config.pulse,
        &config.reference_params,
        config.full_scale,
        &config.policy,
    )
    .unwrap();
    let evaluator = Evaluator::new(&v, &s_ref, FitnessKind::F2, config.policy).unwrap();
    let mut sizes = Vec::new();
    ga::evolve_observed(
        &config.ga,
        |batch| {
            batch
                .iter()
                .map(|c| evaluator.evaluate(&decode(c)))
                .collect()
        },
        |g| sizes.push(g.population.len()),
    )
    .unwrap();
    let constant = !sizes.is_empty() && sizes.iter().all(|&n| n == config.ga.population_size);

    Outcome::new(
        traces.len() >= 20 + 3 + 25 && monotone && reproducible && constant,
        format!(
            "{} traces non-increasing: {monotone}; seeded rerun identical: {reproducible}; \
             population constant over {} generations: {constant}",
            traces.len(),
            sizes.len()
        ),
    )
}

fn histogram_restoration(runs: &Runs) -> Outcome {
    let Some(r) = runs
        .degeneration
        .iter()
        .find(|r| r.degradation.delta == 0.6)
    else {
        return Outcome::new(false, "no delta 0.6 run");
    };
    let h = &r.histograms;
    let (o, d, s) = (
        h.original.mode_bin() as i64,
        h.damaged.mode_bin() as i64,
        h.restored.mode_bin() as i64,
    );
    Outcome::new(
        r.events >= 1000 && (s - o).abs() <= 1 && (d - o).abs() >= 2,
        format!(
            "{} events, {} bins: mode bin original {o}, damaged {d}, restored {s}",
            r.events,
            h.original.bins()
        ),
    )
}

/// OLS slope of log10 power against log10 frequency.
fn spectral_slope(x: &[f64], lo: usize, hi: usize) -> f64 {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .map(|i| ((i as f64).log10(), buf[i].norm_sqr().log10()))
        .unzip();
    experiments::linear_fit(&xs, &ys).unwrap().slope
}

fn noise_properties() -> Outcome {
    let n = 100_000;
    let w = gen_white_noise(n, 1.0, 2024).unwrap();
    let mean = experiments::stats::mean(&w);
    let var = experiments::stats::std_dev(&w).powi(2);
    let mean_bound = 5.0 / (n as f64).sqrt();
    let var_bound = 5.0 * (2.0 / (n as f64 - 1.0)).sqrt();
    let moments_ok = mean.abs() <= mean_bound && (var - 1.0).abs() <= var_bound;

    let m = 1 << 14;
    let red = gen_one_over_f2_noise(m, 1.0, 2024).unwrap();
    // one decade centred geometrically between the first bin and Nyquist
    let centre = ((m / 2) as f64).sqrt();
    let lo = (centre / 10f64.sqrt()).round() as usize;
    let hi = (centre * 10f64.sqrt()).round() as usize;
    let slope = spectral_slope(&red, lo, hi);
    let slope_ok = (-2.4..=-1.6).contains(&slope);
    Outcome::new(
        moments_ok && slope_ok,
        format!(
            "white mean {mean:+.4} (bound {mean_bound:.4}), variance {var:.4} (bound 1 ± {var_bound:.4}); \
             1/f^2 slope {slope:.3} over bins {lo}..={hi}"
        ),
    )
}

type Check = Box<dyn FnOnce(&mut Runs) -> Outcome>;

fn main() -> ExitCode {
    let mut runs = Runs::default();
    let criteria: Vec<(&str, Check)> = vec![
        (
            "integer shaper equals real-valued oracle",
            Box::new(|_| oracle_equivalence()),
        ),
        (
            "chromosome encoding is a bijection",
            Box::new(|_| encoding_bijection()),
        ),
        ("gain ratio cross-check", Box::new(|_| gain_ratio_check())),
        ("convergence from scratch", Box::new(scratch_convergence)),
        (
            "degeneration restoration",
            Box::new(degeneration_restoration),
        ),
        ("amplitude and decay sweep bound", Box::new(sweep_bound)),
        (
            "fitness discrimination",
            Box::new(|_| fitness_discrimination()),
        ),
        ("GA invariants", Box::new(|r| ga_invariants(r))),
        (
            "histogram restoration",
            Box::new(|r| histogram_restoration(r)),
        ),
        (
            "noise generator properties",
            Box::new(|_| noise_properties()),
        ),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome = check(&mut runs);
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
