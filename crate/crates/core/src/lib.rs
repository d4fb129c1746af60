//! Sparse Krylov solvers built around the pipelined BiCGStab method.
//!
//! The crate provides
//!
//! * [`kernels`]: CSR storage, SPMV, dot products with a selectable reduction
//!   order, and AXPY-style vector updates,
//! * [`problems`]: Matrix Market I/O and the two 5-point stencil generators,
//! * [`precond`]: identity, ILU(0) and block Jacobi right preconditioners,
//! * [`solvers`]: standard, communication-avoiding and pipelined BiCGStab
//!   (with optional residual replacement) and the matching CG family,
//! * [`costmodel`]: per-iteration communication/computation accounting and
//!   a latency-driven strong-scaling predictor.
//!
//! All numerics run in `f64`. The solver routines are generic over
//! [`Scalar`] so the same recurrences can be executed in exact rational
//! arithmetic for equivalence checks.
//!
//! With the `parallel` feature (default) the vector and matrix kernels use
//! rayon; results are bit-identical to the sequential build.
//!
//! ```
//! use pipekrylov::precond::Ilu0;
//! use pipekrylov::problems::{make_problem, stencil_ptp1, RhsMode};
//! use pipekrylov::solvers::{solve, SolveConfig, SolverVariant};
//!
//! let problem = make_problem(stencil_ptp1(50, 50)?, RhsMode::InvSqrtN, "ptp1_50")?;
//! let m = Ilu0::new(&problem.a)?;
//! let x0 = vec![0.0; problem.n()];
//! let variant = SolverVariant::p_bicgstab(true);
//! let (x, history) = solve(&problem.a, &problem.b, &x0, &m, variant, &SolveConfig::default())?;
//! println!("{} iterations, {}", history.iterations(), history.status.label());
//! # let _ = x;
//! # Ok::<(), pipekrylov::Error>(())
//! ```

// Negated float comparisons are deliberate: NaN must fail the positive test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costmodel;
mod error;
pub mod kernels;
pub mod precond;
pub mod problems;
mod scalar;
pub mod solvers;

pub use error::{BreakdownKind, Error, Result};
pub use kernels::{CsrMatrix, ReductionOrder};
pub use scalar::{Rational, Scalar};
