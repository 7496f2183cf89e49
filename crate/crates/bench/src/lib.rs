//! Inputs shared by the benchmarks.

use cuspevo_core::shaper::shape;
use cuspevo_core::{ArithmeticPolicy, IntWaveform, PulseSpec, ShaperParams};

pub fn reference_params() -> ShaperParams {
    ShaperParams::new(63, 31, 19, 2).expect("valid")
}

/// Quantized reference pulse and its shaped output.
pub fn reference_pair() -> (IntWaveform, IntWaveform) {
    let v = cuspevo_core::signal::gen_exponential(&PulseSpec::reference())
        .and_then(|w| w.quantize(20.0))
        .expect("reference pulse");
    let s = shape(&v, &reference_params(), &ArithmeticPolicy::default()).expect("in range");
    (v, s)
}
