#![allow(dead_code)]

use pipekrylov::precond::{Identity, Ilu0, Preconditioner};
use pipekrylov::problems::{five_point, make_problem, FivePoint, LinearProblem, RhsMode};
use pipekrylov::solvers::SolverVariant;
use pipekrylov::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Upwind-style convection-diffusion stencil on an `nx` x `ny` grid.
pub fn convection_diffusion(nx: usize, ny: usize, c: f64) -> CsrMatrix {
    five_point(
        nx,
        ny,
        FivePoint {
            north: -1.0 - c,
            west: -1.0 - c,
            centre: 4.0,
            east: -1.0 + c,
            south: -1.0 + c,
        },
    )
    .unwrap()
}

pub fn laplacian(nx: usize, ny: usize) -> CsrMatrix {
    five_point(
        nx,
        ny,
        FivePoint {
            north: -1.0,
            west: -1.0,
            centre: 4.0,
            east: -1.0,
            south: -1.0,
        },
    )
    .unwrap()
}

pub fn problem(a: CsrMatrix) -> LinearProblem {
    make_problem(a, RhsMode::InvSqrtN, "test").unwrap()
}

pub fn preconditioner(a: &CsrMatrix, variant: SolverVariant) -> Box<dyn Preconditioner<f64>> {
    if variant.preconditioned {
        Box::new(Ilu0::new(a).unwrap())
    } else {
        Box::new(Identity::new(a.n_rows()))
    }
}

pub fn bicgstab_variants() -> Vec<SolverVariant> {
    let mut out = Vec::new();
    for pre in [false, true] {
        out.extend([
            SolverVariant::bicgstab(pre),
            SolverVariant::ca_bicgstab(pre),
            SolverVariant::p_bicgstab(pre),
            SolverVariant::p_bicgstab_rr(pre),
        ]);
    }
    out
}

pub fn cg_variants() -> Vec<SolverVariant> {
    let mut out = Vec::new();
    for pre in [false, true] {
        out.extend([SolverVariant::cg(pre), SolverVariant::cg_cg(pre), SolverVariant::p_cg(pre)]);
    }
    out
}

pub fn all_variants() -> Vec<SolverVariant> {
    let mut v = bicgstab_variants();
    v.extend(cg_variants());
    v
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
    let n = a.n_rows();
    let mut m = a.to_dense();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        m.swap(k, piv);
        x.swap(k, piv);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    x
}

/// Seeded generator for reproducible random fixtures.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `n` x `n` matrix with unit-range off-diagonals and a dominant
/// diagonal, so that it is nonsingular and far from symmetric.
pub fn random_dominant(n: usize, seed: u64) -> CsrMatrix {
    let mut g = rng(seed);
    let mut t = Vec::new();
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i != j && g.random_bool(0.5) {
                let v: f64 = g.random_range(-1.0..1.0);
                off += v.abs();
                t.push((i, j, v));
            }
        }
        t.push((i, i, off + 1.0 + g.random_range(0.0..1.0)));
    }
    CsrMatrix::from_triplets(n, n, t).unwrap()
}
