//! Incomplete LU with zero fill-in, natural ordering, no pivoting.

use super::{PrecondKind, Preconditioner};
use crate::error::{check_len, Error, Result};
use crate::kernels::CsrMatrix;
use crate::scalar::Scalar;

/// `L` is unit lower triangular with the diagonal left implicit; `U` is
/// upper triangular including the diagonal. Both patterns are subsets of
/// the pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0Factors<T = f64> {
    pub l: CsrMatrix<T>,
    pub u: CsrMatrix<T>,
}

/// IKJ-ordered ILU(0). Fails on an absent or zero pivot.
pub fn ilu0_factor<T: Scalar>(a: &CsrMatrix<T>) -> Result<Ilu0Factors<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        });
    }
    let n = a.n_rows();
    let row_ptr = a.row_ptr();
    let col_idx = a.col_idx();
    let mut vals = a.values().to_vec();

    let mut diag = vec![0usize; n];
    for i in 0..n {
        let (cols, _) = a.row(i);
        match cols.binary_search(&i) {
            Ok(k) => diag[i] = row_ptr[i] + k,
            Err(_) => return Err(Error::ZeroPivot { row: i }),
        }
    }

    const UNSET: usize = usize::MAX;
    let mut slot = vec![UNSET; n];
    for i in 0..n {
        let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
        for p in lo..hi {
            slot[col_idx[p]] = p;
        }
        for p in lo..diag[i] {
            let k = col_idx[p];
            let lik = vals[p].clone() / vals[diag[k]].clone();
            vals[p] = lik.clone();
            for q in diag[k] + 1..row_ptr[k + 1] {
                let target = slot[col_idx[q]];
                if target != UNSET {
                    let v = vals[target].clone() - lik.clone() * vals[q].clone();
                    vals[target] = v;
                }
            }
        }
        if vals[diag[i]] == T::zero() {
            return Err(Error::ZeroPivot { row: i });
        }
        for p in lo..hi {
            slot[col_idx[p]] = UNSET;
        }
    }

    let mut l = (vec![0usize], Vec::new(), Vec::new());
    let mut u = (vec![0usize], Vec::new(), Vec::new());
    for i in 0..n {
        for p in row_ptr[i]..row_ptr[i + 1] {
            let dst = if p < diag[i] { &mut l } else { &mut u };
            dst.1.push(col_idx[p]);
            dst.2.push(vals[p].clone());
        }
        l.0.push(l.1.len());
        u.0.push(u.1.len());
    }
    Ok(Ilu0Factors {
        l: CsrMatrix::new(n, n, l.0, l.1, l.2)?,
        u: CsrMatrix::new(n, n, u.0, u.1, u.2)?,
    })
}

/// ILU(0) preconditioner: `M^{-1} r` by a forward solve with `L` followed by
/// a backward solve with `U`.
#[derive(Debug, Clone)]
pub struct Ilu0<T = f64> {
    factors: Ilu0Factors<T>,
}

impl<T: Scalar> Ilu0<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        Ok(Ilu0 {
            factors: ilu0_factor(a)?,
        })
    }

    pub fn factors(&self) -> &Ilu0Factors<T> {
        &self.factors
    }
}

impl<T: Scalar> Preconditioner<T> for Ilu0<T> {
    fn dim(&self) -> usize {
        self.factors.u.n_rows()
    }

    fn kind(&self) -> PrecondKind {
        PrecondKind::Ilu0
    }

    fn apply_into(&self, r: &[T], out: &mut [T]) -> Result<()> {
        let n = self.dim();
        check_len("ilu0 apply (r)", n, r.len())?;
        check_len("ilu0 apply (out)", n, out.len())?;
        let Ilu0Factors { l, u } = &self.factors;
        for i in 0..n {
            let (cols, vals) = l.row(i);
            let mut s = r[i].clone();
            for (&j, v) in cols.iter().zip(vals) {
                s = s - v.clone() * out[j].clone();
            }
            out[i] = s;
        }
        for i in (0..n).rev() {
            let (cols, vals) = u.row(i);
            // first stored entry of every U row is the diagonal
            let mut s = out[i].clone();
            for (&j, v) in cols[1..].iter().zip(&vals[1..]) {
                s = s - v.clone() * out[j].clone();
            }
            out[i] = s / vals[0].clone();
        }
        Ok(())
    }
}
