//! Throughput benchmarks: the rolling-statistics kernel, the Gaussian
//! primitives, the full per-sample detector path, and the batch replay
//! lanes (rayon `replay_many` vs the sequential reference).

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use driftband_core::batch::{replay, replay_many, replay_many_sequential};
use driftband_core::detector::DetectorConfig;
use driftband_core::gaussian::{cdf_std, erf_approx, ppf_std};
use driftband_core::rolling::{RunningGaussian, Sample};
use driftband_core::time::{Duration, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stream(seed: u64, n: i64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let x = 5.0 + rng.random_range(-0.5..0.5);
            Sample::new(Timestamp::from_secs(i * 60), x).unwrap()
        })
        .collect()
}

fn config() -> DetectorConfig {
    DetectorConfig::new(Duration::from_days(7), Duration::from_hours(5))
        .unwrap()
        .with_warmup(Duration::ZERO)
        .unwrap()
}

fn bench_rolling(c: &mut Criterion) {
    let values: Vec<f64> = stream(1, 10_000).iter().map(|s| s.value()).collect();
    let mut group = c.benchmark_group("rolling");
    group.throughput(Throughput::Elements(values.len() as u64));
    group.bench_function("welford_update_10k", |b| {
        b.iter(|| {
            let mut stats = RunningGaussian::init(values[0]).unwrap();
            for &x in &values[1..] {
                stats.update(x);
            }
            black_box(stats.variance())
        })
    });
    group.finish();
}

fn bench_gaussian(c: &mut Criterion) {
    let mut group = c.benchmark_group("gaussian");
    group.bench_function("erf_grid_1k", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..1_000 {
                acc += erf_approx(-6.0 + i as f64 * 0.012);
            }
            black_box(acc)
        })
    });
    group.bench_function("cdf_std", |b| b.iter(|| black_box(cdf_std(black_box(1.7)))));
    group.bench_function("ppf_std_0_99865", |b| {
        b.iter(|| black_box(ppf_std(black_box(0.99865)).unwrap()))
    });
    group.finish();
}

fn bench_detector(c: &mut Criterion) {
    let samples = stream(2, 10_000);
    let mut group = c.benchmark_group("detector");
    group.throughput(Throughput::Elements(samples.len() as u64));
    group.bench_function("process_10k", |b| {
        b.iter(|| black_box(replay(config(), &samples).unwrap().outputs.len()))
    });
    group.finish();
}

fn bench_batch_lanes(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_replay");
    for &streams in &[4usize, 16] {
        let runs: Vec<(DetectorConfig, Vec<Sample>)> = (0..streams)
            .map(|i| (config(), stream(i as u64 + 10, 20_000)))
            .collect();
        group.throughput(Throughput::Elements((streams * 20_000) as u64));
        group.bench_with_input(BenchmarkId::new("parallel", streams), &runs, |b, runs| {
            b.iter(|| black_box(replay_many(runs).len()))
        });
        group.bench_with_input(BenchmarkId::new("sequential", streams), &runs, |b, runs| {
            b.iter(|| black_box(replay_many_sequential(runs).len()))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_rolling,
    bench_gaussian,
    bench_detector,
    bench_batch_lanes
);
criterion_main!(benches);
