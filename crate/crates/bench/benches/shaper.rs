use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use cuspevo_bench::{reference_pair, reference_params};
use cuspevo_core::fitness::Evaluator;
use cuspevo_core::shaper::{shape, shape_oracle};
use cuspevo_core::{ArithmeticPolicy, FitnessKind, OverflowMode, ShaperState, Waveform};
use std::hint::black_box;

fn bench_shape(c: &mut Criterion) {
    let params = reference_params();
    let mut group = c.benchmark_group("shape");
    for n in [72usize, 1024, 16384] {
        let v = Waveform::from_samples((0..n).map(|i| ((i * 37) % 8191) as i64).collect());
        group.throughput(Throughput::Elements(n as u64));
        for mode in [OverflowMode::Trap, OverflowMode::Wrap] {
            let policy = ArithmeticPolicy::new(48, mode).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("batch_{mode}"), n), &v, |b, v| {
                b.iter(|| shape(black_box(v), &params, &policy).unwrap())
            });
        }
        let policy = ArithmeticPolicy::default();
        group.bench_with_input(BenchmarkId::new("streaming", n), &v, |b, v| {
            b.iter(|| {
                let mut state = ShaperState::new(&params);
                v.samples
                    .iter()
                    .map(|&x| state.advance(x, &params, &policy).unwrap())
                    .fold(0i64, i64::wrapping_add)
            })
        });
        let real = v.to_real();
        group.bench_with_input(BenchmarkId::new("oracle", n), &real, |b, v| {
            b.iter(|| shape_oracle(black_box(v), &params))
        });
    }
    group.finish();
}

fn bench_fitness(c: &mut Criterion) {
    let (v, s) = reference_pair();
    let evaluator = Evaluator::new(&v, &s, FitnessKind::F2, ArithmeticPolicy::default()).unwrap();
    let near = cuspevo_core::ShaperParams::new(62, 31, 20, 2).unwrap();
    c.bench_function("evaluate_f2_reference_pulse", |b| {
        b.iter(|| evaluator.evaluate(black_box(&near)))
    });
}

criterion_group!(benches, bench_shape, bench_fitness);
criterion_main!(benches);
