//! Benchmark linear systems: Matrix Market input, stencil generators and
//! right-hand sides built from a known solution.

mod mtx;
mod stencil;

pub use mtx::{parse_matrix_market, read_matrix_market, write_matrix_market};
pub use stencil::{
    five_point, five_point_nnz, stencil_ptp1, stencil_ptp2, FivePoint, PTP1, PTP1_EPSILON, PTP2,
};

use crate::error::{check_len, Error, Result};
use crate::kernels::{spmv, CsrMatrix, Vector};

/// How the exact solution `x_hat` (and thus `b = A x_hat`) is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum RhsMode {
    /// `x_hat = 1`.
    Ones,
    /// `x_hat_i = 1 / sqrt(N)`, so `|x_hat|_2 = 1`.
    InvSqrtN,
    Given(Vector),
}

#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub a: CsrMatrix,
    pub b: Vector,
    pub x_exact: Option<Vector>,
    pub label: String,
}

impl LinearProblem {
    pub fn n(&self) -> usize {
        self.a.n_rows()
    }
}

/// Builds `b = A x_hat` for the requested `x_hat`.
pub fn make_problem(a: CsrMatrix, mode: RhsMode, label: impl Into<String>) -> Result<LinearProblem> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        });
    }
    let n = a.n_rows();
    let x = match mode {
        RhsMode::Ones => vec![1.0; n],
        RhsMode::InvSqrtN => vec![1.0 / (n as f64).sqrt(); n],
        RhsMode::Given(x) => {
            check_len("make_problem (x_hat)", n, x.len())?;
            x
        }
    };
    let b = spmv(&a, &x)?;
    Ok(LinearProblem {
        a,
        b,
        x_exact: Some(x),
        label: label.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{norm2, residual};

    #[test]
    fn inv_sqrt_n_has_unit_norm() {
        for n in [3, 10, 4960] {
            let p = make_problem(CsrMatrix::identity(n), RhsMode::InvSqrtN, "id").unwrap();
            let err = (norm2(p.x_exact.as_ref().unwrap()) - 1.0).abs();
            assert!(err <= n as f64 * f64::EPSILON);
        }
    }

    #[test]
    fn ones_gives_row_sums() {
        let a = stencil_ptp2(6, 5).unwrap();
        let p = make_problem(a.clone(), RhsMode::Ones, "ptp2").unwrap();
        for i in 0..a.n_rows() {
            let s: f64 = a.row(i).1.iter().sum();
            assert_eq!(p.b[i], s);
        }
    }

    #[test]
    fn exact_solution_has_tiny_residual() {
        let a = stencil_ptp1(30, 20).unwrap();
        let p = make_problem(a, RhsMode::InvSqrtN, "ptp1").unwrap();
        let x = p.x_exact.as_ref().unwrap();
        let r = residual(&p.a, &p.b, x).unwrap();
        assert!(norm2(&r) <= 1e-13 * p.a.frobenius_norm() * norm2(x));
    }

    #[test]
    fn rejects_non_square_and_bad_given() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 0, 1.0)]).unwrap();
        assert!(matches!(
            make_problem(a, RhsMode::Ones, "x"),
            Err(Error::NotSquare { .. })
        ));
        let a = CsrMatrix::identity(3);
        assert!(make_problem(a, RhsMode::Given(vec![1.0; 2]), "x").is_err());
    }
}
