//! Synthetic detector pulses and the sensor degradation model.
//!
//! A degraded sensor attenuates its pulses and adds serial (white Gaussian)
//! and parallel (1/f²) noise on top of them:
//!
//! ```text
//! v_δ(n) = δ·v(n) + (1 − δ) + κs(n) + κp(n)   if v(n) > threshold
//!        = v(n)                                otherwise
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{RealWaveform, Waveform};

/// Exponential preamplifier pulse `A·exp(−(n − n0)·t_clk/τ)` starting at `n0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Volts.
    pub amplitude: f64,
    /// Decay time constant, seconds.
    pub tau: f64,
    /// Sample period, seconds.
    pub t_clk: f64,
    pub n_samples: usize,
    /// Zero-filled samples before the pulse starts.
    #[serde(default)]
    pub onset: usize,
}

impl PulseSpec {
    /// 20 V, τ = 200 µs, T = 20 µs, N = 72.
    pub fn reference() -> Self {
        PulseSpec {
            amplitude: 20.0,
            tau: 200e-6,
            t_clk: 20e-6,
            n_samples: 72,
            onset: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::Config("pulse amplitude must be finite".into()));
        }
        if !(self.tau > 0.0) || !(self.t_clk > 0.0) {
            return Err(Error::Config("pulse tau and t_clk must be positive".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("pulse needs at least one sample".into()));
        }
        if self.onset >= self.n_samples {
            return Err(Error::Config(
                "pulse onset must precede the last sample".into(),
            ));
        }
        Ok(())
    }
}

pub fn gen_exponential(spec: &PulseSpec) -> Result<RealWaveform> {
    spec.validate()?;
    let samples = (0..spec.n_samples)
        .map(|n| {
            if n < spec.onset {
                0.0
            } else {
                let t = (n - spec.onset) as f64 * spec.t_clk;
                spec.amplitude * (-t / spec.tau).exp()
            }
        })
        .collect();
    Ok(Waveform::new(samples, spec.t_clk))
}

/// Attenuation and noise applied by [`degrade`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationSpec {
    /// Attenuation factor in (0, 1].
    pub delta: f64,
    /// Standard deviation of the serial white noise, signal units.
    #[serde(default)]
    pub serial_sigma: f64,
    /// RMS of the parallel 1/f² noise, signal units.
    #[serde(default)]
    pub parallel_amp: f64,
    /// Samples at or below this level pass through untouched.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_threshold() -> f64 {
    1.0
}

impl DegradationSpec {
    /// Attenuation only, no noise.
    pub fn attenuation(delta: f64) -> Self {
        DegradationSpec {
            delta,
            serial_sigma: 0.0,
            parallel_amp: 0.0,
            threshold: default_threshold(),
            seed: 0,
        }
    }

    /// Default noise magnitudes for a pulse of the given amplitude: serial
    /// σ = 1 % and parallel RMS = 0.5 % of the amplitude.
    pub fn with_default_noise(delta: f64, amplitude: f64, seed: u64) -> Self {
        DegradationSpec {
            delta,
            serial_sigma: 0.01 * amplitude.abs(),
            parallel_amp: 0.005 * amplitude.abs(),
            threshold: default_threshold(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Config(format!(
                "delta must be in (0, 1], got {}",
                self.delta
            )));
        }
        if !(self.serial_sigma >= 0.0) || !(self.parallel_amp >= 0.0) {
            return Err(Error::Config(
                "noise magnitudes must be non-negative".into(),
            ));
        }
        if self.threshold.is_nan() {
            return Err(Error::Config("threshold must be a number".into()));
        }
        Ok(())
    }
}

// Independent streams of one seed for the two noise sources.
const SERIAL_STREAM: u64 = 1;
const PARALLEL_STREAM: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn degrade(v: &RealWaveform, spec: &DegradationSpec) -> Result<RealWaveform> {
    spec.validate()?;
    let n = v.len();
    let serial = white_noise(
        n,
        spec.serial_sigma,
        &mut stream_rng(spec.seed, SERIAL_STREAM),
    );
    let parallel = brown_noise(
        n,
        spec.parallel_amp,
        &mut stream_rng(spec.seed, PARALLEL_STREAM),
    );
    let samples = v
        .samples
        .iter()
        .zip(serial.iter().zip(&parallel))
        .map(|(&x, (&ks, &kp))| {
            if x > spec.threshold {
                spec.delta * x + (1.0 - spec.delta) + ks + kp
            } else {
                x
            }
        })
        .collect();
    Ok(Waveform::new(samples, v.sample_period))
}

/// `n` i.i.d. samples of N(0, σ²).
pub fn gen_white_noise(n: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain("sigma must be non-negative"));
    }
    Ok(white_noise(n, sigma, &mut stream_rng(seed, SERIAL_STREAM)))
}

/// Brownian noise with PSD ∝ 1/f², mean-removed and scaled to `rms`.
pub fn gen_one_over_f2_noise(n: usize, rms: f64, seed: u64) -> Result<Vec<f64>> {
    if !(rms >= 0.0) {
        return Err(Error::Domain("rms must be non-negative"));
    }
    Ok(brown_noise(n, rms, &mut stream_rng(seed, PARALLEL_STREAM)))
}

fn white_noise(n: usize, sigma: f64, rng: &mut impl Rng) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn brown_noise(n: usize, rms: f64, rng: &mut impl Rng) -> Vec<f64> {
    if rms == 0.0 || n == 0 {
        return vec![0.0; n];
    }
    let mut level = 0.0;
    let mut walk: Vec<f64> = (0..n)
        .map(|_| {
            level += rng.sample::<f64, _>(StandardNormal);
            level
        })
        .collect();
    let mean = walk.iter().sum::<f64>() / n as f64;
    walk.iter_mut().for_each(|x| *x -= mean);
    let current = (walk.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    if current == 0.0 {
        // a single sample has no fluctuation left after mean removal
        return vec![0.0; n];
    }
    let scale = rms / current;
    walk.iter_mut().for_each(|x| *x *= scale);
    walk
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn reference_pulse_values() {
        let v = gen_exponential(&PulseSpec::reference()).unwrap();
        assert_eq!(v.len(), 72);
        assert_eq!(v.samples[0], 20.0);
        assert!((v.samples[1] - 18.096_748_360_719).abs() < 1e-9);
        assert!((v.samples[71] - 0.016_502_098_465).abs() < 1e-9);
        assert_eq!(v.sample_period, 20e-6);
    }

    #[test]
    fn zero_amplitude_and_onset() {
        let spec = PulseSpec {
            amplitude: 0.0,
            ..PulseSpec::reference()
        };
        assert!(gen_exponential(&spec)
            .unwrap()
            .samples
            .iter()
            .all(|&x| x == 0.0));

        let spec = PulseSpec {
            onset: 5,
            ..PulseSpec::reference()
        };
        let v = gen_exponential(&spec).unwrap();
        assert_eq!(&v.samples[..5], &[0.0; 5]);
        assert_eq!(v.samples[5], 20.0);
    }

    #[test]
    fn invalid_pulse_specs() {
        let r = PulseSpec::reference();
        for bad in [
            PulseSpec { tau: 0.0, ..r },
            PulseSpec { t_clk: -1.0, ..r },
            PulseSpec { n_samples: 0, ..r },
            PulseSpec { onset: 72, ..r },
        ] {
            assert!(gen_exponential(&bad).is_err());
        }
    }

    #[test]
    fn degrade_identity_and_gate() {
        let v = gen_exponential(&PulseSpec::reference()).unwrap();
        assert_eq!(degrade(&v, &DegradationSpec::attenuation(1.0)).unwrap(), v);

        let low = Waveform::from_samples(vec![0.5; 20]);
        let spec = DegradationSpec::with_default_noise(0.6, 20.0, 3);
        assert_eq!(degrade(&low, &spec).unwrap(), low);
    }

    #[test]
    fn degrade_attenuates_literally() {
        let v = Waveform::from_samples(vec![20.0, 1.0, 0.0]);
        let d = degrade(&v, &DegradationSpec::attenuation(0.8)).unwrap();
        assert!((d.samples[0] - 16.2).abs() < 1e-12);
        assert_eq!(&d.samples[1..], &[1.0, 0.0]);
    }

    #[test]
    fn degrade_rejects_bad_delta() {
        let v = Waveform::from_samples(vec![2.0]);
        for delta in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(degrade(&v, &DegradationSpec::attenuation(delta)).is_err());
        }
        let spec = DegradationSpec {
            serial_sigma: -1.0,
            ..DegradationSpec::attenuation(0.5)
        };
        assert!(degrade(&v, &spec).is_err());
    }

    #[test]
    fn degrade_is_seeded() {
        let v = gen_exponential(&PulseSpec::reference()).unwrap();
        let a = degrade(&v, &DegradationSpec::with_default_noise(0.8, 20.0, 11)).unwrap();
        let b = degrade(&v, &DegradationSpec::with_default_noise(0.8, 20.0, 11)).unwrap();
        let c = degrade(&v, &DegradationSpec::with_default_noise(0.8, 20.0, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_generators_trivial_cases() {
        assert_eq!(gen_white_noise(10, 0.0, 1).unwrap(), vec![0.0; 10]);
        assert_eq!(gen_one_over_f2_noise(10, 0.0, 1).unwrap(), vec![0.0; 10]);
        assert_eq!(gen_one_over_f2_noise(1, 1.0, 1).unwrap(), vec![0.0]);
        assert!(gen_white_noise(10, -1.0, 1).is_err());
        assert!(gen_one_over_f2_noise(10, f64::NAN, 1).is_err());
        assert_eq!(
            gen_white_noise(100, 1.0, 9).unwrap(),
            gen_white_noise(100, 1.0, 9).unwrap()
        );
    }

    #[test]
    fn brown_noise_exact_rms() {
        for rms_target in [0.1, 1.0, 37.5] {
            let x = gen_one_over_f2_noise(4096, rms_target, 5).unwrap();
            assert!((rms(&x) / rms_target - 1.0).abs() < 1e-9);
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            assert!(mean.abs() < 1e-9 * rms_target);
        }
    }
}
