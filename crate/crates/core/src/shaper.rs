//! Cusp-like shaper datapath.
//!
//! The shaper converts an exponentially decaying pulse `v(n)` into a
//! symmetric cusp `s(n)` with two delay pipelines and three accumulators:
//!
//! ```text
//! dk(n) = v(n) - v(n-k)
//! d1(n) = v(n) - v(n-1)
//! p(n)  = p(n-1) + dk(n) - k * d1(n-l)
//! q(n)  = q(n-1) + m2 * p(n)
//! s(n)  = s(n-1) + q(n) + m1 * p(n)
//! ```
//!
//! with every signal zero for `n < 0`. [`shape`] is the batch integer
//! model, [`ShaperState::step`] the streaming one, and [`shape_oracle`]
//! evaluates the same recurrences in unbounded floating point.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Node, Result};
use crate::params::{ShaperParams, K_MAX};
use crate::waveform::{IntWaveform, RealWaveform, Waveform, BUS_MAX, BUS_MIN};

/// What to do when an intermediate value leaves the accumulator range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverflowMode {
    /// Report an error.
    #[default]
    Trap,
    /// Clamp to the most positive or most negative representable value.
    Saturate,
    /// Two's complement wrap-around.
    Wrap,
}

impl FromStr for OverflowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trap" => Ok(OverflowMode::Trap),
            "saturate" => Ok(OverflowMode::Saturate),
            "wrap" => Ok(OverflowMode::Wrap),
            other => Err(Error::Config(format!(
                "unknown overflow mode {other:?} (expected trap, saturate or wrap)"
            ))),
        }
    }
}

impl fmt::Display for OverflowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OverflowMode::Trap => "trap",
            OverflowMode::Saturate => "saturate",
            OverflowMode::Wrap => "wrap",
        })
    }
}

/// Width and overflow behaviour of the internal accumulators and products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy")]
pub struct ArithmeticPolicy {
    accumulator_bits: u32,
    overflow_mode: OverflowMode,
}

#[derive(Deserialize)]
struct RawPolicy {
    accumulator_bits: u32,
    #[serde(default)]
    overflow_mode: OverflowMode,
}

impl TryFrom<RawPolicy> for ArithmeticPolicy {
    type Error = Error;

    fn try_from(raw: RawPolicy) -> Result<Self> {
        ArithmeticPolicy::new(raw.accumulator_bits, raw.overflow_mode)
    }
}

impl Default for ArithmeticPolicy {
    fn default() -> Self {
        ArithmeticPolicy {
            accumulator_bits: Self::DEFAULT_BITS,
            overflow_mode: OverflowMode::Trap,
        }
    }
}

impl ArithmeticPolicy {
    pub const DEFAULT_BITS: u32 = 48;
    pub const MIN_BITS: u32 = 40;
    pub const MAX_BITS: u32 = 64;

    pub fn new(accumulator_bits: u32, overflow_mode: OverflowMode) -> Result<Self> {
        if !(Self::MIN_BITS..=Self::MAX_BITS).contains(&accumulator_bits) {
            return Err(Error::Config(format!(
                "accumulator width {accumulator_bits} outside {}..={}",
                Self::MIN_BITS,
                Self::MAX_BITS
            )));
        }
        Ok(ArithmeticPolicy {
            accumulator_bits,
            overflow_mode,
        })
    }

    pub fn accumulator_bits(&self) -> u32 {
        self.accumulator_bits
    }

    pub fn overflow_mode(&self) -> OverflowMode {
        self.overflow_mode
    }

    pub fn max_value(&self) -> i64 {
        ((1i128 << (self.accumulator_bits - 1)) - 1) as i64
    }

    pub fn min_value(&self) -> i64 {
        (-(1i128 << (self.accumulator_bits - 1))) as i64
    }

    /// Brings an exact intermediate back into the accumulator width.
    #[inline]
    fn reduce(&self, x: i128, index: usize, node: Node) -> Result<i64> {
        let (lo, hi) = (self.min_value(), self.max_value());
        if x >= lo as i128 && x <= hi as i128 {
            return Ok(x as i64);
        }
        match self.overflow_mode {
            OverflowMode::Trap => Err(Error::Overflow {
                index,
                node,
                bits: self.accumulator_bits,
            }),
            OverflowMode::Saturate => Ok(if x > 0 { hi } else { lo }),
            OverflowMode::Wrap => {
                let bits = self.accumulator_bits;
                let modulus = 1i128 << bits;
                let m = x.rem_euclid(modulus);
                Ok(if m > hi as i128 { m - modulus } else { m } as i64)
            }
        }
    }
}

/// One update of the three accumulators given the already-delayed taps.
#[inline]
fn accumulate(
    acc: (i64, i64, i64),
    dk: i64,
    d1_delayed: i64,
    params: &ShaperParams,
    policy: &ArithmeticPolicy,
    index: usize,
) -> Result<(i64, i64, i64)> {
    let (p, q, s) = acc;
    let k_term = policy.reduce(
        params.k() as i128 * d1_delayed as i128,
        index,
        Node::KProduct,
    )?;
    let p = policy.reduce(p as i128 + dk as i128 - k_term as i128, index, Node::P)?;
    let m2_term = policy.reduce(params.m2() as i128 * p as i128, index, Node::M2Product)?;
    let q = policy.reduce(q as i128 + m2_term as i128, index, Node::Q)?;
    let m1_term = policy.reduce(params.m1() as i128 * p as i128, index, Node::M1Product)?;
    let s = policy.reduce(s as i128 + q as i128 + m1_term as i128, index, Node::S)?;
    Ok((p, q, s))
}

/// Runs the integer datapath over a whole waveform.
///
/// Every input sample must fit the signed 14-bit bus. Under
/// [`OverflowMode::Trap`] the first intermediate that exceeds the
/// accumulator width aborts with [`Error::Overflow`].
pub fn shape(
    input: &IntWaveform,
    params: &ShaperParams,
    policy: &ArithmeticPolicy,
) -> Result<IntWaveform> {
    input.check_bus_range()?;
    shape_unchecked(&input.samples, params, policy)
        .map(|samples| Waveform::new(samples, input.sample_period))
}

/// [`shape`] over a raw slice already known to be on the bus.
pub(crate) fn shape_unchecked(
    v: &[i64],
    params: &ShaperParams,
    policy: &ArithmeticPolicy,
) -> Result<Vec<i64>> {
    let k = params.k() as usize;
    let l = params.l() as usize;
    let mut out = Vec::with_capacity(v.len());
    let mut acc = (0, 0, 0);
    for n in 0..v.len() {
        let dk = if n >= k { v[n] - v[n - k] } else { v[n] };
        let d1_delayed = if n > l {
            v[n - l] - v[n - l - 1]
        } else if n == l {
            v[0]
        } else {
            0
        };
        acc = accumulate(acc, dk, d1_delayed, params, policy, n)?;
        out.push(acc.2);
    }
    Ok(out)
}

/// Register contents of the streaming shaper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShaperState {
    /// Last `k` inputs, oldest first.
    pub delay_line_k: VecDeque<i64>,
    /// Last `l` values of `d1`, oldest first.
    pub delay_line_l: VecDeque<i64>,
    pub prev_input: i64,
    pub acc_p: i64,
    pub acc_q: i64,
    pub acc_s: i64,
    /// Number of samples consumed so far.
    pub index: usize,
}

impl ShaperState {
    /// Reset state sized for `params`.
    pub fn new(params: &ShaperParams) -> Self {
        ShaperState {
            delay_line_k: VecDeque::from(vec![0; params.k() as usize]),
            delay_line_l: VecDeque::from(vec![0; params.l() as usize]),
            prev_input: 0,
            acc_p: 0,
            acc_q: 0,
            acc_s: 0,
            index: 0,
        }
    }

    /// Consumes one input sample and returns the next state and `s(n)`.
    pub fn step(
        mut self,
        v_n: i64,
        params: &ShaperParams,
        policy: &ArithmeticPolicy,
    ) -> Result<(Self, i64)> {
        let s_n = self.advance(v_n, params, policy)?;
        Ok((self, s_n))
    }

    /// In-place form of [`ShaperState::step`].
    pub fn advance(
        &mut self,
        v_n: i64,
        params: &ShaperParams,
        policy: &ArithmeticPolicy,
    ) -> Result<i64> {
        if self.delay_line_k.len() != params.k() as usize
            || self.delay_line_l.len() != params.l() as usize
        {
            return Err(Error::Domain("shaper state not sized for these parameters"));
        }
        if !(BUS_MIN..=BUS_MAX).contains(&v_n) {
            return Err(Error::InputRange {
                index: self.index,
                value: v_n,
            });
        }

        let v_k = match self.delay_line_k.pop_front() {
            Some(old) => {
                self.delay_line_k.push_back(v_n);
                old
            }
            None => v_n,
        };
        let d1 = v_n - self.prev_input;
        let d1_delayed = match self.delay_line_l.pop_front() {
            Some(old) => {
                self.delay_line_l.push_back(d1);
                old
            }
            None => d1,
        };

        let (p, q, s) = accumulate(
            (self.acc_p, self.acc_q, self.acc_s),
            v_n - v_k,
            d1_delayed,
            params,
            policy,
            self.index,
        )?;
        self.prev_input = v_n;
        self.acc_p = p;
        self.acc_q = q;
        self.acc_s = s;
        self.index += 1;
        Ok(s)
    }
}

/// The shaper recurrences in unbounded `f64` arithmetic.
///
/// Integer inputs whose intermediates stay below 2^53 in magnitude give
/// results identical to [`shape`] under any policy that does not overflow.
pub fn shape_oracle(input: &RealWaveform, params: &ShaperParams) -> RealWaveform {
    let v = &input.samples;
    let len = v.len();
    let at = |i: isize| if i >= 0 { v[i as usize] } else { 0.0 };
    let k = params.k() as isize;
    let l = params.l() as isize;
    let kf = params.k() as f64;
    let (m1, m2) = (params.m1() as f64, params.m2() as f64);

    let d1: Vec<f64> = (0..len as isize).map(|n| at(n) - at(n - 1)).collect();
    let d1_at = |i: isize| if i >= 0 { d1[i as usize] } else { 0.0 };

    let mut p = vec![0.0; len];
    let mut q = vec![0.0; len];
    let mut s = vec![0.0; len];
    for n in 0..len {
        let ni = n as isize;
        let prev = |x: &[f64]| if n > 0 { x[n - 1] } else { 0.0 };
        let dk = at(ni) - at(ni - k);
        p[n] = prev(&p) + dk - kf * d1_at(ni - l);
        q[n] = prev(&q) + m2 * p[n];
        s[n] = prev(&s) + q[n] + m1 * p[n];
    }
    Waveform::new(s, input.sample_period)
}

/// Ideal `m1 / m2` for a decay constant `tau` sampled every `t_clk`.
pub fn gain_ratio(tau: f64, t_clk: f64) -> Result<f64> {
    if !(tau > 0.0) || !(t_clk > 0.0) {
        return Err(Error::Domain("tau and t_clk must be positive"));
    }
    Ok(1.0 / (t_clk / tau).exp_m1())
}

/// Decay constant whose ideal gain ratio is `ratio`; inverse of [`gain_ratio`].
pub fn tau_for_ratio(ratio: f64, t_clk: f64) -> Result<f64> {
    if !(ratio > 0.0) || !(t_clk > 0.0) {
        return Err(Error::Domain("ratio and t_clk must be positive"));
    }
    Ok(t_clk / (1.0 / ratio).ln_1p())
}

/// `k = 2l + 1`.
pub fn k_from_l(l: u8) -> Result<u8> {
    let k = 2 * l as u16 + 1;
    if k > K_MAX as u16 {
        return Err(Error::ParamRange("k"));
    }
    Ok(k as u8)
}

/// Maximum sample and its first index; `None` for an empty slice.
pub fn peak<T: Copy + PartialOrd>(samples: &[T]) -> Option<(usize, T)> {
    let (&first, rest) = samples.split_first()?;
    let mut best = (0, first);
    for (i, &x) in rest.iter().enumerate() {
        if x > best.1 {
            best = (i + 1, x);
        }
    }
    Some(best)
}
