//! Booth-privacy analysis and epoch-simulation throughput.

use criterion::{criterion_group, criterion_main, Criterion};

use aov_core::booth_privacy::{pmf_curve, recommend_booth_size, UnanimityMode};
use aov_core::sim::{run_epoch_sim, AdversaryMode, ArrivalProcess, SimConfig};
use aov_core::trigger::EpochSchedule;

fn bench_pmf_curve(c: &mut Criterion) {
    c.bench_function("pmf_curve_n1000", |b| b.iter(|| pmf_curve(1000, 0.9)));
}

fn bench_recommendation(c: &mut Criterion) {
    c.bench_function("recommend_booth_size", |b| {
        b.iter(|| recommend_booth_size(1_000_000, 0.9, 1.0, UnanimityMode::WinningChoice).unwrap())
    });
}

fn bench_epoch_sim(c: &mut Criterion) {
    let config = SimConfig {
        rng_seed: 1,
        horizon_minutes: 525_600.0,
        block_time_mean: 10.0,
        schedule: EpochSchedule::new(525_600, 8, 10, 1).unwrap(),
        adversary_share: 0.0,
        adversary_mode: AdversaryMode::None,
        adversary_retries: 10,
        a_max: 10,
        prover_count: 10,
        prover_job_minutes: 100.0,
        prover_arrivals: ArrivalProcess::Deterministic,
    };
    let mut group = c.benchmark_group("epoch_sim");
    group.sample_size(10);
    group.bench_function("one_year_horizon", |b| {
        b.iter(|| run_epoch_sim(&config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_pmf_curve, bench_recommendation, bench_epoch_sim);
criterion_main!(benches);
