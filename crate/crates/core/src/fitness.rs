//! Mismatch between a candidate shaper output and the stored reference.
//!
//! * F1: difference of peak heights.
//! * F2: cumulative absolute error.
//! * F3: F1 + F2.
//!
//! Lower is better and zero means a perfect match.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ShaperParams;
use crate::shaper::{self, ArithmeticPolicy};
use crate::waveform::IntWaveform;

/// Fitness of an integer-mode shaper output. Sums saturate at `u64::MAX`,
/// which doubles as the worst fitness.
pub type FitnessValue = u64;

pub const WORST_FITNESS: FitnessValue = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessKind {
    F1,
    #[default]
    F2,
    F3,
}

impl FromStr for FitnessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(FitnessKind::F1),
            "f2" => Ok(FitnessKind::F2),
            "f3" => Ok(FitnessKind::F3),
            _ => Err(Error::Config(format!(
                "unknown fitness {s:?} (expected f1, f2 or f3)"
            ))),
        }
    }
}

impl fmt::Display for FitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitnessKind::F1 => "f1",
            FitnessKind::F2 => "f2",
            FitnessKind::F3 => "f3",
        })
    }
}

/// Sample types the fitness functions work over.
pub trait Sample: Copy + PartialOrd {
    type Fitness: Copy + PartialOrd + fmt::Debug;

    fn abs_diff(a: Self, b: Self) -> Self::Fitness;
    fn zero() -> Self::Fitness;
    fn add(a: Self::Fitness, b: Self::Fitness) -> Self::Fitness;
}

impl Sample for i64 {
    type Fitness = u64;

    fn abs_diff(a: i64, b: i64) -> u64 {
        a.abs_diff(b)
    }

    fn zero() -> u64 {
        0
    }

    fn add(a: u64, b: u64) -> u64 {
        a.saturating_add(b)
    }
}

impl Sample for f64 {
    type Fitness = f64;

    fn abs_diff(a: f64, b: f64) -> f64 {
        (a - b).abs()
    }

    fn zero() -> f64 {
        0.0
    }

    fn add(a: f64, b: f64) -> f64 {
        a + b
    }
}

fn check_lengths<T>(s: &[T], s_ref: &[T]) -> Result<()> {
    if s.len() != s_ref.len() {
        return Err(Error::LengthMismatch {
            left: s.len(),
            right: s_ref.len(),
        });
    }
    Ok(())
}

fn peak_diff<T: Sample>(s: &[T], s_ref: &[T]) -> T::Fitness {
    match (shaper::peak(s), shaper::peak(s_ref)) {
        (Some((_, a)), Some((_, b))) => T::abs_diff(a, b),
        _ => T::zero(),
    }
}

fn cumulative<T: Sample>(s: &[T], s_ref: &[T]) -> T::Fitness {
    s.iter()
        .zip(s_ref)
        .fold(T::zero(), |acc, (&a, &b)| T::add(acc, T::abs_diff(a, b)))
}

pub fn f1<T: Sample>(s: &[T], s_ref: &[T]) -> Result<T::Fitness> {
    check_lengths(s, s_ref)?;
    Ok(peak_diff(s, s_ref))
}

pub fn f2<T: Sample>(s: &[T], s_ref: &[T]) -> Result<T::Fitness> {
    check_lengths(s, s_ref)?;
    Ok(cumulative(s, s_ref))
}

pub fn f3<T: Sample>(s: &[T], s_ref: &[T]) -> Result<T::Fitness> {
    check_lengths(s, s_ref)?;
    Ok(T::add(peak_diff(s, s_ref), cumulative(s, s_ref)))
}

pub fn fitness<T: Sample>(kind: FitnessKind, s: &[T], s_ref: &[T]) -> Result<T::Fitness> {
    match kind {
        FitnessKind::F1 => f1(s, s_ref),
        FitnessKind::F2 => f2(s, s_ref),
        FitnessKind::F3 => f3(s, s_ref),
    }
}

/// Shapes `v` with `params` and scores the result against `s_ref`.
///
/// An overflowing candidate scores [`WORST_FITNESS`]. The only error is a
/// length mismatch between `v` and `s_ref`, or `v` not fitting the bus.
pub fn evaluate(
    params: &ShaperParams,
    v: &IntWaveform,
    s_ref: &IntWaveform,
    kind: FitnessKind,
    policy: &ArithmeticPolicy,
) -> Result<FitnessValue> {
    Ok(Evaluator::new(v, s_ref, kind, *policy)?.evaluate(params))
}

/// A validated input/reference pair, ready to score many candidates.
#[derive(Debug, Clone)]
pub struct Evaluator {
    input: Vec<i64>,
    reference: Vec<i64>,
    kind: FitnessKind,
    policy: ArithmeticPolicy,
}

impl Evaluator {
    pub fn new(
        v: &IntWaveform,
        s_ref: &IntWaveform,
        kind: FitnessKind,
        policy: ArithmeticPolicy,
    ) -> Result<Self> {
        check_lengths(&v.samples, &s_ref.samples)?;
        v.check_bus_range()?;
        Ok(Evaluator {
            input: v.samples.clone(),
            reference: s_ref.samples.clone(),
            kind,
            policy,
        })
    }

    pub fn evaluate(&self, params: &ShaperParams) -> FitnessValue {
        match shaper::shape_unchecked(&self.input, params, &self.policy) {
            Ok(s) => fitness(self.kind, &s, &self.reference).unwrap_or(WORST_FITNESS),
            Err(_) => WORST_FITNESS,
        }
    }

    pub fn kind(&self) -> FitnessKind {
        self.kind
    }
}
