//! Sequential versus rayon kernels on a 5-point stencil.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pipekrylov::kernels::{self, seq, ReductionOrder};
use pipekrylov::problems::stencil_ptp1;
use std::hint::black_box;

fn spmv(c: &mut Criterion) {
    let mut g = c.benchmark_group("spmv");
    for side in [100usize, 300] {
        let a = stencil_ptp1(side, side).unwrap();
        let x = vec![1.0; a.n_rows()];
        let mut y = vec![0.0; a.n_rows()];
        g.bench_with_input(BenchmarkId::new("sequential", side), &side, |b, _| {
            b.iter(|| seq::spmv_into(&a, black_box(&x), &mut y))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("rayon", side), &side, |b, _| {
            b.iter(|| kernels::par::spmv_into(&a, black_box(&x), &mut y))
        });
    }
    g.finish();
}

fn dot(c: &mut Criterion) {
    let mut g = c.benchmark_group("dot");
    for n in [10_000usize, 1_000_000] {
        let x: Vec<f64> = (0..n).map(|i| (i % 7) as f64).collect();
        g.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| kernels::dot_with(black_box(&x), &x, ReductionOrder::Sequential).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("tree", n), &n, |b, _| {
            b.iter(|| {
                kernels::dot_with(black_box(&x), &x, ReductionOrder::Tree { chunk: 4096 }).unwrap()
            })
        });
    }
    g.finish();
}

fn update(c: &mut Criterion) {
    let mut g = c.benchmark_group("update3");
    for n in [10_000usize, 1_000_000] {
        let a = vec![1.5; n];
        let b = vec![0.5; n];
        let mut out = vec![0.0; n];
        g.bench_with_input(BenchmarkId::new("sequential", n), &n, |bch, _| {
            bch.iter(|| seq::update3(&mut out, &a, &b, |o, a, b| *o = a - 0.3 * b))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("rayon", n), &n, |bch, _| {
            bch.iter(|| kernels::par::update3(&mut out, &a, &b, |o, a, b| *o = a - 0.3 * b))
        });
    }
    g.finish();
}

criterion_group!(benches, spmv, dot, update);
criterion_main!(benches);
