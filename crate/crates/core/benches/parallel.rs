use std::hint::black_box;

use cpa_auction::competition::gamma_monte_carlo;
use cpa_auction::hjb::{solve, HjbConfig};
use cpa_auction::simulator::run;
use cpa_auction::strategy::PaymentRule;
use cpa_auction::{BidStrategy, Execution, MarketConfig, ValueDistribution};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn executors() -> [(&'static str, Execution); 2] {
    [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel { workers: None }),
    ]
}

fn simulator(c: &mut Criterion) {
    let values = ValueDistribution::log_normal(0.0, 1.0).unwrap();
    let cfg = MarketConfig::symmetric(
        values,
        5,
        0.5,
        BidStrategy::linear(1.4).unwrap(),
        PaymentRule::second_price(),
        1_000_000,
        1,
    );
    let mut group = c.benchmark_group("simulator_run");
    group.sample_size(10);
    for (name, exec) in executors() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

fn gamma(c: &mut Criterion) {
    let values = ValueDistribution::exponential(1.0).unwrap();
    let mut group = c.benchmark_group("gamma_monte_carlo");
    group.sample_size(10);
    for (name, exec) in executors() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| gamma_monte_carlo(black_box(&values), 4, 1_000_000, 2, exec).unwrap())
        });
    }
    group.finish();
}

fn hjb(c: &mut Criterion) {
    let cfg = HjbConfig::default();
    let mut group = c.benchmark_group("hjb_solve");
    group.sample_size(10);
    for (name, exec) in executors() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| solve(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simulator, gamma, hjb);
criterion_main!(benches);
