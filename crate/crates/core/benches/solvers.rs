//! Whole solves: BiCGStab against p-BiCGStab under both executors.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pipekrylov::precond::Identity;
use pipekrylov::problems::{make_problem, stencil_ptp1, RhsMode};
use pipekrylov::solvers::{solve, Executor, SolveConfig, SolverVariant};

fn solves(c: &mut Criterion) {
    let a = stencil_ptp1(200, 200).unwrap();
    let prob = make_problem(a, RhsMode::InvSqrtN, "ptp1-200").unwrap();
    let m = Identity::new(prob.n());
    let x0 = vec![0.0; prob.n()];
    let mut g = c.benchmark_group("solve_ptp1_200");
    g.sample_size(10);
    for variant in [SolverVariant::bicgstab(false), SolverVariant::p_bicgstab(false)] {
        for executor in [Executor::Sequential, Executor::Overlapped] {
            let cfg = SolveConfig {
                max_iter: 50,
                record_true_residual_every: 0,
                executor,
                ..SolveConfig::default()
            };
            let id = BenchmarkId::new(variant.name(), format!("{executor:?}"));
            g.bench_with_input(id, &cfg, |b, cfg| {
                b.iter(|| solve(&prob.a, &prob.b, &x0, &m, variant, cfg).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, solves);
criterion_main!(benches);
