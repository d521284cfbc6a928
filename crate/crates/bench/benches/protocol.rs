use std::sync::Arc;

use anytrust::dkg::run_honest;
use anytrust::sim::{self, PolicyKind, Scenario, SimConfig};
use anytrust_bench::dkg_nodes;
use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};

fn dkg(c: &mut Criterion) {
    let mut g = c.benchmark_group("dkg_honest");
    g.sample_size(10);
    for n in [16usize, 64] {
        let t = (n - 1) / 2;
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter_batched(|| dkg_nodes(n, t, 8, 1), |mut nodes| run_honest(&mut nodes), BatchSize::LargeInput)
        });
    }
    g.finish();
}

fn verify_round(c: &mut Criterion) {
    let (n, t) = (64, 31);
    let mut nodes = dkg_nodes(n, t, 20, 2);
    let deals: Vec<_> =
        nodes.iter_mut().filter_map(|node| node.round1_deal().expect("deal").map(Arc::new)).collect();
    c.bench_function("round2_verify/64", |b| {
        b.iter_batched(
            || {
                let mut node = dkg_nodes(n, t, 20, 2).swap_remove(0);
                node.round1_deal().expect("deal");
                node
            },
            |mut node| node.round2_verify(&deals).expect("verify"),
            BatchSize::LargeInput,
        )
    });
}

fn scenarios(c: &mut Criterion) {
    let mut g = c.benchmark_group("sim");
    g.sample_size(10);
    for kind in [PolicyKind::Honest, PolicyKind::MalformCiphertext] {
        let mut cfg = SimConfig::new(Scenario::Dkg, 32, 15, 1);
        cfg.s_expected = Some(8);
        cfg.adversary = kind;
        g.bench_function(format!("dkg/32/{kind}"), |b| b.iter(|| sim::run(&cfg)));
    }
    let cfg = SimConfig::new(Scenario::Broadcast, 16, 7, 1);
    g.bench_function("broadcast/16", |b| b.iter(|| sim::run(&cfg)));
    g.finish();
}

criterion_group!(benches, dkg, verify_round, scenarios);
criterion_main!(benches);
