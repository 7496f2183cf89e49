//! Software model of an evolvable cusp-like digital pulse shaper.
//!
//! The crate has three layers:
//!
//! * [`shaper`]: a bit-accurate integer emulation of the four-parameter
//!   recursive cusp-like shaper datapath, with a floating-point reference
//!   implementation used as an oracle.
//! * [`ga`] and [`fitness`]: the 40-bit binary genetic algorithm that
//!   re-evolves `(k, l, m1, m2)` so that a (possibly degraded) input
//!   reproduces a stored reference output.
//! * [`signal`], [`io`] and [`experiments`]: synthetic detector pulses,
//!   the sensor degradation model, waveform files, and the experiment
//!   harness (scratch convergence, degeneration restoration, amplitude and
//!   time-constant sweeps, pulse-height histograms).

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod error;
pub mod experiments;
pub mod fitness;
pub mod ga;
pub mod io;
pub mod params;
pub mod shaper;
pub mod signal;
pub mod waveform;

#[cfg(test)]
mod proptests;

pub use error::{Error, Result};
pub use fitness::{FitnessKind, FitnessValue};
pub use ga::{Chromosome, EvolutionResult, GaConfig};
pub use params::ShaperParams;
pub use shaper::{ArithmeticPolicy, OverflowMode, ShaperState};
pub use signal::{DegradationSpec, PulseSpec};
pub use waveform::{IntWaveform, RealWaveform, Waveform};
