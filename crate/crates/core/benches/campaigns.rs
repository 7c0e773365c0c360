//! Sequential against rayon execution of the randomized campaigns.
//!
//! With one core the two should be within noise; the gap grows with
//! the pool size since every trial is independent.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use equiaffine::invariants::analyze;
use equiaffine::par::Exec;
use equiaffine::verify::{criterion as run_criterion, VerifyConfig};
use equiaffine::FieldSpec;
use rand::Rng;

fn campaigns(c: &mut Criterion) {
    let mut group = c.benchmark_group("campaign");
    group.sample_size(10);
    // 13: adjugate identities over 1000 random matrices; 6: Gauss–Kronecker
    // on random quartic fields
    for id in [13, 6] {
        for exec in [Exec::Sequential, Exec::Parallel] {
            let cfg = VerifyConfig { seed: 7, exec };
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), id), &cfg, |b, cfg| {
                b.iter(|| run_criterion(id, cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn analyze_batch(c: &mut Criterion) {
    let field = FieldSpec::helicoid3();
    let points: Vec<Vec<f64>> = Exec::Sequential.trials(11, 2000, |_, rng| {
        (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect()
    });
    let mut group = c.benchmark_group("analyze_2000");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| exec.map(&points, |p| analyze(&field, p).unwrap().ucal))
        });
    }
    group.finish();
}

criterion_group!(benches, campaigns, analyze_batch);
criterion_main!(benches);
