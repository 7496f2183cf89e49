//! Cross-module invariants, checked over random inputs.

use crate::experiments::{histogram, relative_error};
use crate::fitness::{f1, f2, f3};
use crate::ga::{self, decode, encode};
use crate::shaper::{self, shape, shape_oracle};
use crate::signal::{degrade, DegradationSpec};
use crate::waveform::{BUS_MAX, BUS_MIN};
use crate::{
    ArithmeticPolicy, Chromosome, GaConfig, IntWaveform, OverflowMode, RealWaveform, ShaperParams,
    ShaperState, Waveform,
};
use proptest::prelude::*;

fn any_params() -> impl Strategy<Value = ShaperParams> {
    (0i64..=63, 0i64..=63, -8192i64..=8191, -8192i64..=8191)
        .prop_map(|(k, l, m1, m2)| ShaperParams::new(k, l, m1, m2).unwrap())
}

/// Gains small enough that short inputs stay inside 48-bit accumulators.
fn modest_params() -> impl Strategy<Value = ShaperParams> {
    (0i64..=63, 0i64..=63, -64i64..=64, -16i64..=16)
        .prop_map(|(k, l, m1, m2)| ShaperParams::new(k, l, m1, m2).unwrap())
}

fn bus_samples(max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(BUS_MIN..=BUS_MAX, 1..max_len)
}

fn wide() -> ArithmeticPolicy {
    ArithmeticPolicy::new(64, OverflowMode::Trap).unwrap()
}

proptest! {
    #[test]
    fn decode_inverts_encode(p in any_params()) {
        prop_assert_eq!(decode(&encode(&p)), p);
    }

    #[test]
    fn encode_inverts_decode(bits in 0u64..(1 << 40)) {
        let c = Chromosome::from_bits(bits).unwrap();
        prop_assert_eq!(encode(&decode(&c)), c);
    }

    #[test]
    fn integer_path_matches_real_oracle(v in bus_samples(96), p in modest_params()) {
        let v = Waveform::from_samples(v);
        let Ok(s) = shape(&v, &p, &ArithmeticPolicy::default()) else {
            return Err(TestCaseError::reject("outside headroom"));
        };
        let oracle = shape_oracle(&v.to_real(), &p);
        for (a, b) in s.samples.iter().zip(&oracle.samples) {
            prop_assert_eq!(*a as f64, *b);
        }
    }

    #[test]
    fn shaping_is_linear(
        a in prop::collection::vec(-4096i64..=4095, 48),
        b in prop::collection::vec(-4096i64..=4095, 48),
        p in modest_params(),
    ) {
        let sum: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let sa = shape(&Waveform::from_samples(a), &p, &wide()).unwrap();
        let sb = shape(&Waveform::from_samples(b), &p, &wide()).unwrap();
        let ssum = shape(&Waveform::from_samples(sum), &p, &wide()).unwrap();
        for i in 0..48 {
            prop_assert_eq!(ssum.samples[i], sa.samples[i] + sb.samples[i]);
        }
    }

    #[test]
    fn delayed_input_delays_output(v in bus_samples(64), p in modest_params(), d in 1usize..16) {
        let mut delayed = vec![0; d];
        delayed.extend(&v);
        let s = shape(&Waveform::from_samples(v), &p, &wide()).unwrap();
        let sd = shape(&Waveform::from_samples(delayed), &p, &wide()).unwrap();
        prop_assert!(sd.samples[..d].iter().all(|&x| x == 0));
        prop_assert_eq!(&sd.samples[d..], &s.samples[..]);
    }

    #[test]
    fn streaming_matches_batch(v in bus_samples(96), p in any_params(), bits in 40u32..=64) {
        for mode in [OverflowMode::Trap, OverflowMode::Saturate, OverflowMode::Wrap] {
            let policy = ArithmeticPolicy::new(bits, mode).unwrap();
            let batch = shape(&Waveform::from_samples(v.clone()), &p, &policy);
            let streamed: crate::Result<Vec<i64>> = v
                .iter()
                .try_fold((ShaperState::new(&p), Vec::new()), |(state, mut out), &x| {
                    let (next, s) = state.step(x, &p, &policy)?;
                    out.push(s);
                    Ok((next, out))
                })
                .map(|(_, out)| out);
            match (batch, streamed) {
                (Ok(b), Ok(s)) => prop_assert_eq!(b.samples, s),
                (Err(_), Err(_)) => prop_assert_eq!(mode, OverflowMode::Trap),
                (b, s) => prop_assert!(false, "batch {:?} vs streamed {:?}", b.is_ok(), s.is_ok()),
            }
        }
    }

    #[test]
    fn saturate_and_wrap_never_fail(v in bus_samples(64), p in any_params()) {
        for mode in [OverflowMode::Saturate, OverflowMode::Wrap] {
            let policy = ArithmeticPolicy::new(40, mode).unwrap();
            let s = shape(&Waveform::from_samples(v.clone()), &p, &policy).unwrap();
            prop_assert!(s.samples.iter().all(|&x| x >= policy.min_value() && x <= policy.max_value()));
        }
    }

    #[test]
    fn full_strength_noiseless_degrade_is_identity(v in prop::collection::vec(-20.0f64..20.0, 1..80)) {
        let w: RealWaveform = Waveform::from_samples(v);
        let spec = DegradationSpec::attenuation(1.0);
        prop_assert_eq!(degrade(&w, &spec).unwrap(), w);
    }

    #[test]
    fn degrade_leaves_subthreshold_samples(
        v in prop::collection::vec(-5.0f64..20.0, 1..80),
        delta in 0.05f64..=1.0,
        seed in any::<u64>(),
    ) {
        let w: RealWaveform = Waveform::from_samples(v);
        let spec = DegradationSpec::with_default_noise(delta, 20.0, seed);
        let d = degrade(&w, &spec).unwrap();
        for (a, b) in w.samples.iter().zip(&d.samples) {
            if *a <= spec.threshold {
                prop_assert_eq!(a, b);
            }
        }
        prop_assert_eq!(d, degrade(&w, &spec).unwrap());
    }

    #[test]
    fn fitness_algebra(
        pair in prop::collection::vec((-1_000_000i64..1_000_000, -1_000_000i64..1_000_000), 1..100),
    ) {
        let (a, b): (Vec<i64>, Vec<i64>) = pair.into_iter().unzip();
        prop_assert_eq!(f3(&a, &b).unwrap(), f1(&a, &b).unwrap() + f2(&a, &b).unwrap());
        prop_assert_eq!(f1(&a, &b).unwrap(), f1(&b, &a).unwrap());
        prop_assert_eq!(f2(&a, &b).unwrap(), f2(&b, &a).unwrap());
        prop_assert_eq!(f2(&a, &a).unwrap(), 0);
    }

    #[test]
    fn self_relative_error_is_zero(v in prop::collection::vec(-1000i64..1000, 1..50)) {
        prop_assume!(v.iter().any(|&x| x > 0));
        prop_assert_eq!(relative_error(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn histogram_counts_every_event_in_any_order(
        amps in prop::collection::vec(1i64..4000, 1..40),
        rotate in 0usize..40,
    ) {
        let events: Vec<IntWaveform> = amps
            .iter()
            .map(|&a| Waveform::from_samples((0..24).map(|n| a >> (n / 4)).collect()))
            .collect();
        let p = ShaperParams::new(9, 4, 3, 1).unwrap();
        let policy = ArithmeticPolicy::default();
        let h = histogram::build_histogram(&events, &p, 16, None, &policy).unwrap();
        prop_assert_eq!(h.total(), events.len() as u64);
        let mut rotated = events.clone();
        rotated.rotate_left(rotate % events.len());
        prop_assert_eq!(h, histogram::build_histogram(&rotated, &p, 16, None, &policy).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ga_best_fitness_never_worsens(seed in any::<u64>(), target in any_params()) {
        let goal = encode(&target);
        let config = GaConfig { max_generations: 60, seed, ..Default::default() };
        let mut sizes = Vec::new();
        let r = ga::evolve_observed(
            &config,
            |batch| batch.iter().map(|c| c.hamming(&goal) as u64).collect(),
            |g| sizes.push(g.population.len()),
        )
        .unwrap();
        prop_assert!(r.fitness_trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(sizes.iter().all(|&n| n == config.population_size));
        prop_assert_eq!(sizes.len(), r.generations);
        let again = ga::evolve_observed(
            &config,
            |batch| batch.iter().map(|c| c.hamming(&goal) as u64).collect(),
            |_| {},
        )
        .unwrap();
        prop_assert!(r.same_trajectory(&again));
    }
}

#[test]
fn peak_ties_resolve_to_first() {
    assert_eq!(shaper::peak(&[1, 5, 5, 2]), Some((1, 5)));
}
