//! Pulse-height histograms.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ShaperParams;
use crate::shaper::{self, ArithmeticPolicy};
use crate::waveform::IntWaveform;

/// Equal-width histogram. Values outside the range land in the edge bins so
/// every event is counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn empty(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Config(format!(
                "invalid histogram range [{lo}, {hi}]"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let mut bin_edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
        bin_edges.push(hi);
        Ok(Histogram {
            bin_edges,
            counts: vec![0; bins],
        })
    }

    pub fn from_values(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        let mut h = Histogram::empty(lo, hi, bins)?;
        values.iter().for_each(|&v| h.add(v));
        Ok(h)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.bin_edges[0], self.bin_edges[self.bins()])
    }

    pub fn bin_of(&self, value: f64) -> usize {
        let (lo, hi) = self.range();
        let idx = ((value - lo) / (hi - lo) * self.bins() as f64).floor();
        if idx.is_nan() || idx < 0.0 {
            0
        } else {
            (idx as usize).min(self.bins() - 1)
        }
    }

    pub fn add(&mut self, value: f64) {
        let b = self.bin_of(value);
        self.counts[b] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the fullest bin, first on ties.
    pub fn mode_bin(&self) -> usize {
        shaper::peak(&self.counts).map_or(0, |(i, _)| i)
    }

    /// `bin_lo,bin_hi,count` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{},{}", self.bin_edges[i], self.bin_edges[i + 1], c)?;
        }
        out.flush()
    }
}

/// Peak height of every event after shaping with `params`.
pub fn peak_heights(
    events: &[IntWaveform],
    params: &ShaperParams,
    policy: &ArithmeticPolicy,
) -> Result<Vec<i64>> {
    events
        .par_iter()
        .map(|e| {
            let s = shaper::shape(e, params, policy)?;
            Ok(s.peak().ok_or(Error::NoSamples)?.1)
        })
        .collect()
}

/// Range used when none is configured: `[0, 1.2 × max peak]`.
pub fn default_range(peaks: &[i64]) -> (f64, f64) {
    let max = peaks.iter().copied().max().unwrap_or(0) as f64;
    if max > 0.0 {
        (0.0, 1.2 * max)
    } else {
        let min = peaks.iter().copied().min().unwrap_or(0) as f64;
        (1.2 * min - 1.0, 1.0)
    }
}

/// Shapes every event, takes its peak height and bins the heights.
pub fn build_histogram(
    events: &[IntWaveform],
    params: &ShaperParams,
    bins: usize,
    range: Option<(f64, f64)>,
    policy: &ArithmeticPolicy,
) -> Result<Histogram> {
    if events.is_empty() {
        return Err(Error::NoSamples);
    }
    let peaks = peak_heights(events, params, policy)?;
    let (lo, hi) = range.unwrap_or_else(|| default_range(&peaks));
    let values: Vec<f64> = peaks.iter().map(|&p| p as f64).collect();
    Histogram::from_values(&values, lo, hi, bins)
}
