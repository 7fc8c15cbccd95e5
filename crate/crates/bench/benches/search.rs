use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fmp_core::{
    branch_and_bound, evaluate_exact, gen_signal_corridor, genetic_search, local_search, random_policy, rng_from_seed,
    simulated_annealing, BnbOptions, EvalCounter, GaConfig, SaConfig,
};

fn evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_exact");
    for n in [0usize, 4, 16] {
        let p = gen_signal_corridor(n);
        let policy = random_policy(p.num_observations(), p.num_actions(), 3, &mut rng_from_seed(1));
        let counter = EvalCounter::new();
        group.bench_with_input(BenchmarkId::new("corridor_k3_h10", n), &n, |b, _| {
            b.iter(|| evaluate_exact(&p, black_box(&policy), 10, &counter).unwrap())
        });
    }
    group.finish();
}

fn heuristics(c: &mut Criterion) {
    let p = gen_signal_corridor(1);
    let mut group = c.benchmark_group("search_corridor1_k2_h3");
    let mut seed = 0u64;
    group.bench_function("local", |b| {
        b.iter(|| {
            seed += 1;
            local_search(&p, 2, 3, seed, &EvalCounter::new()).unwrap()
        })
    });
    group.bench_function("anneal", |b| {
        b.iter(|| {
            seed += 1;
            simulated_annealing(&p, 2, 3, seed, &SaConfig::default(), &EvalCounter::new()).unwrap()
        })
    });
    group.bench_function("genetic", |b| {
        b.iter(|| {
            seed += 1;
            genetic_search(&p, 2, 3, seed, &GaConfig::default(), &EvalCounter::new()).unwrap()
        })
    });
    group.finish();
}

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("branch_and_bound");
    group.sample_size(10);
    for (name, n, k, h) in [("corridor0_k2_h2", 0, 2, 2), ("corridor1_k2_h3", 1, 2, 3)] {
        let p = gen_signal_corridor(n);
        for symmetry_breaking in [false, true] {
            let id = BenchmarkId::new(name, if symmetry_breaking { "symmetry" } else { "plain" });
            group.bench_function(id, |b| {
                b.iter(|| branch_and_bound(&p, k, h, BnbOptions { seed: 0, symmetry_breaking }).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, evaluation, heuristics, exact);
criterion_main!(benches);
