use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netwit_core::classical::{classical_bound, exhaustive_classical_bound, VertexFilter};
use netwit_core::linalg::hermitian_eig;
use netwit_core::optimizer::{seesaw_maximize, SeesawConfig};
use netwit_core::random;
use netwit_core::scenario::{born_table, reference_strategy};
use netwit_core::selftest::selftest_report;
use netwit_core::witness::eval_witness;

fn tables(c: &mut Criterion) {
    let s = reference_strategy();
    c.bench_function("born_table/reference", |b| {
        b.iter(|| born_table(black_box(&s)).unwrap())
    });
    let t = born_table(&s).unwrap();
    c.bench_function("eval_witness", |b| b.iter(|| eval_witness(black_box(&t))));
}

fn eigensolver(c: &mut Criterion) {
    let mut group = c.benchmark_group("hermitian_eig");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [4, 8, 16] {
        let m = random::hermitian(&mut rng, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| hermitian_eig(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn classical(c: &mut Criterion) {
    c.bench_function("classical_bound/reduced", |b| b.iter(classical_bound));
    let mut group = c.benchmark_group("classical_bound");
    group.sample_size(10);
    group.bench_function("exhaustive", |b| {
        b.iter(|| exhaustive_classical_bound(VertexFilter::All).unwrap())
    });
    group.finish();
}

fn optimization(c: &mut Criterion) {
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    let config = SeesawConfig {
        restarts: 4,
        ..SeesawConfig::default()
    };
    group.bench_function("seesaw/4_restarts", |b| {
        b.iter(|| seesaw_maximize(black_box(&config)).unwrap())
    });
    let s = reference_strategy();
    group.bench_function("selftest_report/reference", |b| {
        b.iter(|| selftest_report(&s, 1e-9).unwrap())
    });
    group.finish();
}

criterion_group!(benches, tables, eigensolver, classical, optimization);
criterion_main!(benches);
