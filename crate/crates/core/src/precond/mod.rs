//! Right preconditioners `M^{-1}`.
//!
//! Every preconditioner is a fixed linear operator once built. `apply` must
//! be purely local work (no inner products across the whole vector), which
//! is what allows pipelined solvers to hide a reduction behind it; any new
//! preconditioner added here has to keep that property.

mod block_jacobi;
mod dense;
mod ilu0;

pub use block_jacobi::BlockJacobi;
pub use ilu0::{ilu0_factor, Ilu0, Ilu0Factors};

use crate::error::{check_len, Result};
use crate::kernels::CsrMatrix;
use crate::scalar::Scalar;

/// Which preconditioner a [`Preconditioner`] object implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PrecondKind {
    Identity,
    Ilu0,
    BlockJacobi { block_size: usize },
}

pub trait Preconditioner<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn kind(&self) -> PrecondKind;

    /// `out = M^{-1} r`.
    fn apply_into(&self, r: &[T], out: &mut [T]) -> Result<()>;

    fn apply(&self, r: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.dim()];
        self.apply_into(r, &mut out)?;
        Ok(out)
    }

    fn is_identity(&self) -> bool {
        self.kind() == PrecondKind::Identity
    }
}

/// `M = I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Identity {
    n: usize,
}

impl Identity {
    pub fn new(n: usize) -> Self {
        Identity { n }
    }
}

impl<T: Scalar> Preconditioner<T> for Identity {
    fn dim(&self) -> usize {
        self.n
    }

    fn kind(&self) -> PrecondKind {
        PrecondKind::Identity
    }

    fn apply_into(&self, r: &[T], out: &mut [T]) -> Result<()> {
        check_len("identity preconditioner (r)", self.n, r.len())?;
        check_len("identity preconditioner (out)", self.n, out.len())?;
        out.clone_from_slice(r);
        Ok(())
    }
}

/// Builds the preconditioner described by `kind` for `a`.
pub fn build<T: Scalar>(a: &CsrMatrix<T>, kind: PrecondKind) -> Result<Box<dyn Preconditioner<T>>> {
    Ok(match kind {
        PrecondKind::Identity => Box::new(Identity::new(a.n_rows())),
        PrecondKind::Ilu0 => Box::new(Ilu0::new(a)?),
        PrecondKind::BlockJacobi { block_size } => Box::new(BlockJacobi::new(a, block_size)?),
    })
}

/// Alias of [`BlockJacobi::new`].
pub fn block_jacobi_setup<T: Scalar>(a: &CsrMatrix<T>, block_size: usize) -> Result<BlockJacobi<T>> {
    BlockJacobi::new(a, block_size)
}

/// `M^{-1} r` as a fresh vector.
pub fn precond_apply<T: Scalar>(m: &dyn Preconditioner<T>, r: &[T]) -> Result<Vec<T>> {
    m.apply(r)
}
