use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use horopoints::arith::{kloosterman_sum_with, Rational};
use horopoints::observables::{Observable, Profile};
use horopoints::par::Exec;
use horopoints::points::{generate_with, verify_invariance_with, PointSetSpec};
use horopoints::stats::empirical_averages_with;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_triple");
    for n in [10_007u64, 100_003] {
        let spec = PointSetSpec::triple(n, 2, 1, 1, 1);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &spec, |b, spec| {
                b.iter(|| generate_with(black_box(spec), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn kernel_average(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_average");
    group.sample_size(10);
    let obs = [Observable::kernel(1.0, Profile::SmoothBump)];
    for n in [10_007u64, 100_003] {
        let samples = generate_with(&PointSetSpec::primitive(n, Rational::new(1, 2).unwrap()), Exec::Sequential).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &samples, |b, s| {
                b.iter(|| empirical_averages_with(exec, black_box(s), &obs).unwrap())
            });
        }
    }
    group.finish();
}

fn kloosterman(c: &mut Criterion) {
    let mut group = c.benchmark_group("kloosterman_sum");
    for n in [100_003u64, 1_000_003] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| kloosterman_sum_with(exec, 1, 1, black_box(n)))
            });
        }
    }
    group.finish();
}

fn invariance(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_invariance");
    let spec = PointSetSpec::triple(49_999, 3, 1, 1, 1);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| verify_invariance_with(black_box(&spec), 2, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, generation, kernel_average, kloosterman, invariance);
criterion_main!(benches);
