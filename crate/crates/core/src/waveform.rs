use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default sample period of the prototype clock, 20 µs.
pub const DEFAULT_SAMPLE_PERIOD: f64 = 20e-6;

/// Largest value on the signed 14-bit input bus.
pub const BUS_MAX: i64 = 8191;
/// Smallest value on the signed 14-bit input bus.
pub const BUS_MIN: i64 = -8192;

/// A sampled signal. Samples before index 0 are implicitly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform<T> {
    pub samples: Vec<T>,
    /// Seconds per sample.
    pub sample_period: f64,
}

/// Integer (fixed-point bus) waveform.
pub type IntWaveform = Waveform<i64>;
/// Real-valued waveform, usually volts.
pub type RealWaveform = Waveform<f64>;

impl<T> Waveform<T> {
    pub fn new(samples: Vec<T>, sample_period: f64) -> Self {
        Waveform {
            samples,
            sample_period,
        }
    }

    /// Waveform at the default prototype sample period.
    pub fn from_samples(samples: Vec<T>) -> Self {
        Self::new(samples, DEFAULT_SAMPLE_PERIOD)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.samples
    }
}

impl<T: Copy + PartialOrd> Waveform<T> {
    /// Maximum sample and its first index.
    pub fn peak(&self) -> Option<(usize, T)> {
        crate::shaper::peak(&self.samples)
    }
}

impl IntWaveform {
    /// Checks every sample fits the signed 14-bit bus.
    pub fn check_bus_range(&self) -> Result<()> {
        match self
            .samples
            .iter()
            .position(|v| !(BUS_MIN..=BUS_MAX).contains(v))
        {
            Some(index) => Err(Error::InputRange {
                index,
                value: self.samples[index],
            }),
            None => Ok(()),
        }
    }

    pub fn to_real(&self) -> RealWaveform {
        Waveform::new(
            self.samples.iter().map(|&v| v as f64).collect(),
            self.sample_period,
        )
    }
}

impl RealWaveform {
    /// Maps volts onto the 14-bit bus as `round(v / full_scale * 8191)`.
    ///
    /// Values beyond the bus range clip to the rail, as an ADC would.
    pub fn quantize(&self, full_scale: f64) -> Result<IntWaveform> {
        if !(full_scale > 0.0 && full_scale.is_finite()) {
            return Err(Error::Domain("full scale must be positive"));
        }
        let samples = self
            .samples
            .iter()
            .map(|&v| {
                let code = (v / full_scale * BUS_MAX as f64).round();
                code.clamp(BUS_MIN as f64, BUS_MAX as f64) as i64
            })
            .collect();
        Ok(Waveform::new(samples, self.sample_period))
    }
}
