use super::dense::DenseLu;
use super::{PrecondKind, Preconditioner};
use crate::error::{check_len, Error, Result};
use crate::kernels::CsrMatrix;
use crate::scalar::Scalar;

/// Block diagonal preconditioner with dense LU-factored blocks. The last
/// block is shorter when the block size does not divide `n`.
#[derive(Debug, Clone)]
pub struct BlockJacobi<T = f64> {
    n: usize,
    block_size: usize,
    blocks: Vec<DenseLu<T>>,
}

impl<T: Scalar> BlockJacobi<T> {
    pub fn new(a: &CsrMatrix<T>, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidArgument("block size must be at least 1".into()));
        }
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.n_rows(),
                cols: a.n_cols(),
            });
        }
        let n = a.n_rows();
        let mut blocks = Vec::with_capacity(n.div_ceil(block_size));
        for (block, start) in (0..n).step_by(block_size).enumerate() {
            let end = (start + block_size).min(n);
            let m = end - start;
            let mut dense = vec![T::zero(); m * m];
            for i in start..end {
                let (cols, vals) = a.row(i);
                for (&j, v) in cols.iter().zip(vals) {
                    if (start..end).contains(&j) {
                        dense[(i - start) * m + (j - start)] = v.clone();
                    }
                }
            }
            let lu = DenseLu::factor(m, dense).ok_or(Error::SingularBlock { block, start, end })?;
            blocks.push(lu);
        }
        Ok(BlockJacobi {
            n,
            block_size,
            blocks,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }
}

impl<T: Scalar> Preconditioner<T> for BlockJacobi<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn kind(&self) -> PrecondKind {
        PrecondKind::BlockJacobi {
            block_size: self.block_size,
        }
    }

    fn apply_into(&self, r: &[T], out: &mut [T]) -> Result<()> {
        check_len("block jacobi apply (r)", self.n, r.len())?;
        check_len("block jacobi apply (out)", self.n, out.len())?;
        let bs = self.block_size;
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            out.par_chunks_mut(bs)
                .zip(r.par_chunks(bs))
                .zip(self.blocks.par_iter())
                .for_each(|((o, r), lu)| lu.solve_into(r, o));
        }
        #[cfg(not(feature = "parallel"))]
        for ((o, r), lu) in out.chunks_mut(bs).zip(r.chunks(bs)).zip(&self.blocks) {
            lu.solve_into(r, o);
        }
        Ok(())
    }
}
