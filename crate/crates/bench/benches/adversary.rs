use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pureheap::{run_adversary, AdversaryConfig, AlgorithmKind, Mode};
use pureheap_bench::ledger_config;

fn ledger(c: &mut Criterion) {
    let mut group = c.benchmark_group("adversary-ledger");
    group.sample_size(20);
    for n in [64, 256, 1024] {
        for alg in AlgorithmKind::ALL {
            let cfg = ledger_config(alg, n);
            group.bench_with_input(BenchmarkId::new(alg.to_string(), n), &cfg, |b, cfg| {
                b.iter(|| run_adversary(cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("adversary-exact");
    group.sample_size(10);
    for n in [6, 8, 10] {
        let cfg = AdversaryConfig {
            n,
            k: 3,
            q: Some(3),
            mode: Mode::Exact,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| b.iter(|| run_adversary(cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, ledger, exact);
criterion_main!(benches);
