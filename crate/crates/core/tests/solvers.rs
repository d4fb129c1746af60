mod common;

use common::*;
use pipekrylov::kernels::{norm2, residual, spmv};
use pipekrylov::precond::{precond_apply, Identity, Ilu0, Preconditioner};
use pipekrylov::solvers::{
    new_solver, run, solve, Checkpoint, Event, Executor, Family, Form, KrylovSolver, PhaseCounts,
    SolveConfig, SolverVariant, StepOutcome, TerminalStatus,
};
use pipekrylov::{BreakdownKind, CsrMatrix};

fn cfg() -> SolveConfig {
    SolveConfig {
        replacement_period: Some(10),
        ..Default::default()
    }
}

fn test_problem(v: SolverVariant) -> pipekrylov::problems::LinearProblem {
    match v.family {
        Family::Cg => problem(laplacian(20, 20)),
        Family::Bicgstab => problem(convection_diffusion(20, 20, 0.3)),
    }
}

fn diff_norm(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[test]
fn identity_operator_converges_in_one_step() {
    let a = CsrMatrix::identity(8);
    let b: Vec<f64> = (0..8).map(|i| i as f64 - 3.5).collect();
    for v in all_variants() {
        let m = Identity::new(8);
        let (x, h) = solve(&a, &b, &[0.0; 8], &m, v, &cfg()).unwrap();
        assert_eq!(h.status, TerminalStatus::Converged, "{v}");
        assert_eq!(h.iterations(), 1, "{v}");
        assert_eq!(x, b, "{v}");
    }
}

#[test]
fn zero_rhs_needs_no_iterations() {
    let a = laplacian(4, 4);
    for v in all_variants() {
        let m = preconditioner(&a, v);
        let (x, h) = solve(&a, &[0.0; 16], &[0.0; 16], m.as_ref(), v, &cfg()).unwrap();
        assert_eq!(h.status, TerminalStatus::Converged, "{v}");
        assert_eq!(h.iterations(), 0, "{v}");
        assert!(x.iter().all(|&xi| xi == 0.0));
    }
}

#[test]
fn random_dominant_system_matches_dense_solve() {
    for seed in 0..5 {
        let a = random_dominant(10, seed);
        let b: Vec<f64> = (0..10).map(|i| 1.0 + i as f64 * 0.25).collect();
        let exact = dense_solve(&a, &b);
        let bn = norm2(&b);
        for v in bicgstab_variants() {
            let m = preconditioner(&a, v);
            let c = SolveConfig {
                rtol: 1e-12,
                replacement_period: Some(5),
                ..Default::default()
            };
            let (x, h) = solve(&a, &b, &[0.0; 10], m.as_ref(), v, &c).unwrap();
            assert_eq!(h.status, TerminalStatus::Converged, "{v} seed {seed}");
            assert!(norm2(&residual(&a, &b, &x).unwrap()) <= 1e-10 * bn, "{v} seed {seed}");
            assert!(diff_norm(&x, &exact) <= 1e-8 * norm2(&exact), "{v} seed {seed}");
        }
    }
}

#[test]
fn cg_variants_solve_the_laplacian() {
    let p = problem(laplacian(16, 16));
    let exact = p.x_exact.clone().unwrap();
    let mut counts = Vec::new();
    for v in cg_variants() {
        let m = preconditioner(&p.a, v);
        let c = SolveConfig {
            rtol: 1e-10,
            ..Default::default()
        };
        let (x, h) = solve(&p.a, &p.b, &vec![0.0; p.n()], m.as_ref(), v, &c).unwrap();
        assert_eq!(h.status, TerminalStatus::Converged, "{v}");
        assert!(diff_norm(&x, &exact) <= 1e-8, "{v}");
        counts.push((v.preconditioned, h.iterations()));
    }
    // The three forms are equivalent, so their counts agree up to rounding.
    for pre in [false, true] {
        let its: Vec<usize> = counts.iter().filter(|c| c.0 == pre).map(|c| c.1).collect();
        let (lo, hi) = (its.iter().min().unwrap(), its.iter().max().unwrap());
        assert!(hi - lo <= 2, "{its:?}");
    }
    let plain = counts.iter().find(|c| !c.0).unwrap().1;
    let ilu = counts.iter().find(|c| c.0).unwrap().1;
    assert!(ilu < plain);
}

fn expected_phases(v: SolverVariant) -> PhaseCounts {
    let pre = usize::from(v.preconditioned);
    let (spmv, glred, overlapped) = match (v.family, v.form) {
        (Family::Bicgstab, Form::Standard) => (2, 3, 0),
        (Family::Bicgstab, Form::Ca) => (2, 2, 0),
        (Family::Bicgstab, _) => (2, 2, 2),
        (Family::Cg, Form::Standard) => (1, 2, 0),
        (Family::Cg, Form::ChronoGear) => (1, 1, 0),
        (Family::Cg, _) => (1, 1, 1),
    };
    let precond = match v.family {
        Family::Bicgstab => 2 * pre,
        Family::Cg => pre,
    };
    PhaseCounts {
        spmv,
        precond,
        glred,
        glred_overlapped: overlapped,
        ..Default::default()
    }
}

#[test]
fn every_iteration_has_the_expected_phase_counts() {
    for v in all_variants() {
        let p = test_problem(v);
        let m = preconditioner(&p.a, v);
        let (_, h) = solve(&p.a, &p.b, &vec![0.0; p.n()], m.as_ref(), v, &cfg()).unwrap();
        assert!(h.converged(), "{v}");
        let want = expected_phases(v);
        let got = h.per_iteration_phases().unwrap_or_else(|| panic!("{v}: irregular phases"));
        assert_eq!(
            (got.spmv, got.precond, got.glred, got.glred_overlapped),
            (want.spmv, want.precond, want.glred, want.glred_overlapped),
            "{v}"
        );
    }
}

#[test]
fn standard_bicgstab_event_order() {
    let p = problem(convection_diffusion(8, 8, 0.3));
    let v = SolverVariant::bicgstab(false);
    let m = Identity::new(p.n());
    let mut s = new_solver(&p.a, &p.b, &vec![0.0; p.n()], &m, v, cfg()).unwrap();
    let rep = s.step().unwrap();
    let g = |dots| Event::Glred {
        dots,
        overlapped: false,
    };
    use Event::{Axpy, Spmv};
    assert_eq!(
        rep.events,
        vec![Spmv, g(1), Axpy, Spmv, g(2), Axpy, Axpy, g(2), Axpy]
    );
}

#[test]
fn pipelined_operators_run_inside_reduction_windows() {
    for v in all_variants().into_iter().filter(|v| v.form == Form::Pipelined) {
        let p = test_problem(v);
        let m = preconditioner(&p.a, v);
        let mut s = new_solver(&p.a, &p.b, &vec![0.0; p.n()], m.as_ref(), v, cfg()).unwrap();
        for _ in 0..5 {
            let rep = s.step().unwrap();
            let mut open = false;
            for e in &rep.events {
                match e {
                    Event::Glred { overlapped, .. } => open = *overlapped,
                    Event::Spmv | Event::Precond => assert!(open, "{v}: {:?}", rep.events),
                    Event::Axpy => {}
                }
            }
        }
    }
}

#[test]
fn stepping_a_converged_state_is_a_no_op() {
    for v in all_variants() {
        let p = test_problem(v);
        let m = preconditioner(&p.a, v);
        let mut s = new_solver(&p.a, &p.b, &vec![0.0; p.n()], m.as_ref(), v, cfg()).unwrap();
        let h = run(s.as_mut(), &p.a, &p.b, &cfg()).unwrap();
        assert!(h.converged());
        let x = s.x().to_vec();
        let it = s.iteration();
        let rep = s.step().unwrap();
        assert_eq!(rep.outcome, StepOutcome::AlreadyConverged, "{v}");
        assert!(rep.events.is_empty());
        assert_eq!(s.x(), &x[..]);
        assert_eq!(s.iteration(), it);
    }
}

#[test]
fn shadow_residual_is_never_modified() {
    for v in bicgstab_variants() {
        let p = test_problem(v);
        let m = preconditioner(&p.a, v);
        let mut s = new_solver(&p.a, &p.b, &vec![0.0; p.n()], m.as_ref(), v, cfg()).unwrap();
        let r0 = s.vector("r0").unwrap().to_vec();
        assert_eq!(r0, p.b);
        while !s.is_converged() {
            s.step().unwrap();
            assert_eq!(s.vector("r0").unwrap(), &r0[..], "{v}");
        }
    }
}

/// Largest of the four auxiliary drift ratios `|aux - A M^{-1} v| / tau_i`.
fn worst_drift(s: &dyn KrylovSolver<f64>, a: &CsrMatrix, m: &dyn Preconditioner<f64>, i: usize) -> f64 {
    let v = |name: &str| s.vector(name).unwrap().to_vec();
    let am = |x: &[f64]| spmv(a, &precond_apply(m, x).unwrap()).unwrap();
    let pre = s.variant().preconditioned;
    // The preconditioned form stores only p_hat, so s is checked against A p_hat.
    let s_ref = if pre { spmv(a, &v("p_hat")).unwrap() } else { am(&v("p")) };
    let gaps = [
        diff_norm(&v("w"), &am(&v("r"))),
        diff_norm(&v("s"), &s_ref),
        diff_norm(&v("z"), &am(&v("s"))),
        diff_norm(&v("t"), &am(&v("w"))),
    ];
    let p = if pre { "p_hat" } else { "p" };
    let scale = ["r", p, "s", "w"].iter().map(|n| norm2(&v(n))).fold(0.0, f64::max);
    let tau = 1e-10 * (i + 1) as f64 * a.frobenius_norm() * scale;
    gaps.iter().map(|g| g / tau).fold(0.0, f64::max)
}

#[test]
fn pipelined_auxiliary_vectors_stay_consistent() {
    for pre in [false, true] {
        let v = SolverVariant::p_bicgstab(pre);
        let p = problem(convection_diffusion(30, 30, 0.3));
        let m = preconditioner(&p.a, v);
        let mut s = new_solver(&p.a, &p.b, &vec![0.0; p.n()], m.as_ref(), v, cfg()).unwrap();
        for i in 1..=30 {
            if s.is_converged() {
                break;
            }
            s.step().unwrap();
            let d = worst_drift(s.as_ref(), &p.a, m.as_ref(), i);
            assert!(d <= 1.0, "{v} iteration {i}: drift ratio {d}");
        }
    }
}

#[test]
fn standard_and_pipelined_agree_early_on() {
    let p = problem(convection_diffusion(30, 30, 0.3));
    let norms = |v: SolverVariant| {
        let m = Ilu0::new(&p.a).unwrap();
        let (_, h) = solve(&p.a, &p.b, &vec![0.0; p.n()], &m, v, &cfg()).unwrap();
        h.records.iter().map(|r| r.recursive_residual).collect::<Vec<_>>()
    };
    let std = norms(SolverVariant::bicgstab(true));
    let pip = norms(SolverVariant::p_bicgstab(true));
    for i in 1..=5 {
        assert!((std[i] - pip[i]).abs() <= 1e-6 * std[i], "iteration {i}");
    }
}

#[test]
fn replacement_restores_the_true_residual() {
    for pre in [false, true] {
        for k in [3, 10] {
            let v = SolverVariant::p_bicgstab_rr(pre);
            let p = problem(convection_diffusion(30, 30, 0.3));
            let m = preconditioner(&p.a, v);
            let c = SolveConfig {
                replacement_period: Some(k),
                rtol: 1e-12,
                ..Default::default()
            };
            let bn = norm2(&p.b);
            let mut s = new_solver(&p.a, &p.b, &vec![0.0; p.n()], m.as_ref(), v, c).unwrap();
            let mut replaced = 0;
            while !s.is_converged() && s.breakdown().is_none() && s.iteration() < 500 {
                let mut gaps = Vec::new();
                let rep = s
                    .step_with(&mut |cp, st| {
                        assert_eq!(cp, Checkpoint::AfterReplacement);
                        let x = st.vector("x").unwrap();
                        let r = st.vector("r").unwrap();
                        gaps.push(diff_norm(&residual(&p.a, &p.b, x).unwrap(), r));
                    })
                    .unwrap();
                assert_eq!(rep.replaced, !gaps.is_empty());
                if rep.replaced {
                    replaced += 1;
                    assert!(gaps[0] <= 1e-13 * bn, "gap {}", gaps[0]);
                    let c = PhaseCounts::from_events(&rep.replacement_events);
                    assert_eq!((c.spmv, c.precond), (4, if pre { 2 } else { 0 }));
                    assert_eq!(rep.iteration % k, 0);
                }
            }
            assert!(s.is_converged(), "{v} k={k}");
            assert!(replaced >= 1);
        }
    }
}

#[test]
fn breakdown_is_reported_without_nans() {
    // (r0, A r0) = 0 for this b, so the first alpha cannot be formed.
    let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    let b = [1.0, 0.0];
    for v in bicgstab_variants() {
        let m = Identity::new(2);
        let (x, h) = solve(&a, &b, &[0.0; 2], &m, v, &cfg()).unwrap();
        match h.status {
            TerminalStatus::Breakdown { kind, .. } => assert_eq!(kind, BreakdownKind::Alpha, "{v}"),
            s => panic!("{v}: {s:?}"),
        }
        assert!(x.iter().all(|v| v.is_finite()));
        assert!(h.records.iter().all(|r| r.recursive_residual.is_finite()));
    }
}

#[test]
fn histories_are_deterministic_across_executors() {
    for v in all_variants() {
        let p = test_problem(v);
        let m = preconditioner(&p.a, v);
        let hist = |executor| {
            let c = SolveConfig { executor, ..cfg() };
            solve(&p.a, &p.b, &vec![0.0; p.n()], m.as_ref(), v, &c).unwrap()
        };
        let (x1, h1) = hist(Executor::Sequential);
        let (x2, h2) = hist(Executor::Sequential);
        let (x3, h3) = hist(Executor::Overlapped);
        assert_eq!(h1, h2, "{v}");
        assert_eq!(h1, h3, "{v}");
        let bits = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&x1), bits(&x2));
        assert_eq!(bits(&x1), bits(&x3));
    }
}

#[test]
fn max_iter_is_respected() {
    let p = problem(convection_diffusion(30, 30, 0.3));
    for v in bicgstab_variants() {
        let m = preconditioner(&p.a, v);
        let c = SolveConfig {
            max_iter: 4,
            ..cfg()
        };
        let (_, h) = solve(&p.a, &p.b, &vec![0.0; p.n()], m.as_ref(), v, &c).unwrap();
        assert_eq!(h.status, TerminalStatus::MaxIter);
        assert_eq!(h.iterations(), 4);
    }
}
