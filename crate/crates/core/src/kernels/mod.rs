//! Deterministic sparse and dense primitives.
//!
//! Every kernel is a pure function of its inputs. SPMV computes each row
//! sum in column order and AXPY-style updates are elementwise, so the
//! rayon-backed and sequential paths produce identical bits. Dot products
//! follow an explicit [`ReductionOrder`].

mod csr;
pub mod seq;

#[cfg(feature = "parallel")]
pub mod par;

pub use csr::CsrMatrix;

use crate::error::{check_len, Result};
use crate::scalar::Scalar;

/// Vectors are plain owned buffers.
pub type Vector<T = f64> = Vec<T>;

/// Below this length the parallel paths fall back to the sequential loops.
pub const PARALLEL_MIN_LEN: usize = 4096;

/// Accumulation order for inner products.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionOrder {
    /// Left-to-right over indices.
    #[default]
    Sequential,
    /// Chunks of `chunk` entries are summed left-to-right, then the partial
    /// sums are combined pairwise (fan-in 2), level by level.
    Tree { chunk: usize },
}

#[cfg(feature = "parallel")]
#[inline]
fn use_parallel(n: usize) -> bool {
    n >= PARALLEL_MIN_LEN
}

/// `y = A x`.
pub fn spmv<T: Scalar>(a: &CsrMatrix<T>, x: &[T]) -> Result<Vector<T>> {
    let mut y = vec![T::zero(); a.n_rows()];
    spmv_into(a, x, &mut y)?;
    Ok(y)
}

/// `y = A x` into a caller-provided buffer.
pub fn spmv_into<T: Scalar>(a: &CsrMatrix<T>, x: &[T], y: &mut [T]) -> Result<()> {
    check_len("spmv (x)", a.n_cols(), x.len())?;
    check_len("spmv (y)", a.n_rows(), y.len())?;
    #[cfg(feature = "parallel")]
    if use_parallel(y.len()) {
        par::spmv_into(a, x, y);
        return Ok(());
    }
    seq::spmv_into(a, x, y);
    Ok(())
}

/// Returns `a x + y`.
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &[T]) -> Result<Vector<T>> {
    check_len("axpy", x.len(), y.len())?;
    let mut out = y.to_vec();
    update2(&mut out, x, |o, xi| *o = a.clone() * xi.clone() + o.clone());
    Ok(out)
}

/// Inner product in sequential index order.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    dot_with(x, y, ReductionOrder::Sequential)
}

/// Inner product accumulated in the given order.
pub fn dot_with<T: Scalar>(x: &[T], y: &[T], order: ReductionOrder) -> Result<T> {
    check_len("dot", x.len(), y.len())?;
    Ok(dot_unchecked(x, y, order))
}

pub(crate) fn dot_unchecked<T: Scalar>(x: &[T], y: &[T], order: ReductionOrder) -> T {
    match order {
        ReductionOrder::Sequential => seq::dot(x, y),
        ReductionOrder::Tree { chunk } => {
            #[cfg(feature = "parallel")]
            if use_parallel(x.len()) {
                return par::tree_dot(x, y, chunk.max(1));
            }
            seq::tree_dot(x, y, chunk.max(1))
        }
    }
}

/// Euclidean norm `sqrt(dot(x, x))`, evaluated in `f64`.
pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    norm2_with(x, ReductionOrder::Sequential)
}

pub fn norm2_with<T: Scalar>(x: &[T], order: ReductionOrder) -> f64 {
    dot_unchecked(x, x, order).to_f64().sqrt()
}

/// Applies `f(out[i], a[i])` for every index.
pub fn update2<T, F>(out: &mut [T], a: &[T], f: F)
where
    T: Scalar,
    F: Fn(&mut T, &T) + Sync + Send,
{
    debug_assert_eq!(out.len(), a.len());
    #[cfg(feature = "parallel")]
    if use_parallel(out.len()) {
        par::update2(out, a, f);
        return;
    }
    seq::update2(out, a, f);
}

/// Applies `f(out[i], a[i], b[i])` for every index.
pub fn update3<T, F>(out: &mut [T], a: &[T], b: &[T], f: F)
where
    T: Scalar,
    F: Fn(&mut T, &T, &T) + Sync + Send,
{
    debug_assert_eq!(out.len(), a.len());
    debug_assert_eq!(out.len(), b.len());
    #[cfg(feature = "parallel")]
    if use_parallel(out.len()) {
        par::update3(out, a, b, f);
        return;
    }
    seq::update3(out, a, b, f);
}

/// Applies `f(out[i], a[i], b[i], c[i])` for every index.
pub fn update4<T, F>(out: &mut [T], a: &[T], b: &[T], c: &[T], f: F)
where
    T: Scalar,
    F: Fn(&mut T, &T, &T, &T) + Sync + Send,
{
    debug_assert_eq!(out.len(), a.len());
    debug_assert_eq!(out.len(), b.len());
    debug_assert_eq!(out.len(), c.len());
    #[cfg(feature = "parallel")]
    if use_parallel(out.len()) {
        par::update4(out, a, b, c, f);
        return;
    }
    seq::update4(out, a, b, c, f);
}

/// `b - A x`.
pub fn residual<T: Scalar>(a: &CsrMatrix<T>, b: &[T], x: &[T]) -> Result<Vector<T>> {
    check_len("residual (b)", a.n_rows(), b.len())?;
    let mut r = spmv(a, x)?;
    update2(&mut r, b, |ri, bi| *ri = bi.clone() - ri.clone());
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kahan_dot(x: &[f64], y: &[f64]) -> f64 {
        let mut sum = 0.0f64;
        let mut c = 0.0f64;
        for (a, b) in x.iter().zip(y) {
            let term = a * b - c;
            let t = sum + term;
            c = (t - sum) - term;
            sum = t;
        }
        sum
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn spmv_identity_and_empty() {
        let id = CsrMatrix::<f64>::identity(3);
        assert_eq!(spmv(&id, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let zero = CsrMatrix::<f64>::new(3, 3, vec![0; 4], vec![], vec![]).unwrap();
        assert_eq!(spmv(&zero, &[4.0, 5.0, 6.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn spmv_rejects_mismatched_lengths() {
        let id = CsrMatrix::<f64>::identity(3);
        assert!(spmv(&id, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn axpy_examples() {
        assert_eq!(axpy(0.0, &[7.0, -3.0], &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(axpy(1.0, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![4.0, 6.0]);
        assert_eq!(
            axpy(-2.0, &[1.0, 0.0, -1.0], &[0.0, 0.0, 0.0]).unwrap(),
            vec![-2.0, 0.0, 2.0]
        );
        assert!(axpy(1.0, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn dot_and_norm_examples() {
        assert_eq!(dot(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 14.0);
        assert_eq!(dot(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(norm2(&[0.0; 5]), 0.0);
        assert!(dot(&[1.0], &[1.0, 2.0]).is_err());
        for n in [1usize, 7, 100, 4960, 10_000] {
            let v = vec![1.0 / (n as f64).sqrt(); n];
            // Forward error of a length-n sum is bounded by n * eps.
            assert!((norm2(&v) - 1.0).abs() <= n as f64 * f64::EPSILON, "n = {n}");
        }
    }

    #[test]
    fn dot_matches_compensated_oracle() {
        let mut seed = 42u64;
        let x: Vec<f64> = (0..100).map(|_| lcg(&mut seed)).collect();
        let y: Vec<f64> = (0..100).map(|_| lcg(&mut seed)).collect();
        let oracle = kahan_dot(&x, &y);
        for order in [ReductionOrder::Sequential, ReductionOrder::Tree { chunk: 8 }] {
            let d = dot_with(&x, &y, order).unwrap();
            assert!((d - oracle).abs() <= 1e-13 * oracle.abs().max(1e-300), "{order:?}");
        }
    }

    #[test]
    fn tree_order_is_a_different_summation() {
        // Left to right keeps the trailing 1; pairwise absorbs both ones.
        let x = [1e16, 1.0, -1e16, 1.0];
        let y = [1.0; 4];
        let s = dot_with(&x, &y, ReductionOrder::Sequential).unwrap();
        let t = dot_with(&x, &y, ReductionOrder::Tree { chunk: 1 }).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(t, 0.0);
    }

    #[test]
    fn large_vectors_hit_the_same_bits_in_every_path() {
        let n = 3 * PARALLEL_MIN_LEN + 17;
        let mut seed = 7u64;
        let x: Vec<f64> = (0..n).map(|_| lcg(&mut seed)).collect();
        let y: Vec<f64> = (0..n).map(|_| lcg(&mut seed)).collect();
        let order = ReductionOrder::Tree { chunk: 64 };
        assert_eq!(
            dot_with(&x, &y, order).unwrap().to_bits(),
            seq::tree_dot(&x, &y, 64).to_bits()
        );
        let a = crate::problems::stencil_ptp1(120, 110).unwrap();
        let v: Vec<f64> = (0..a.n_cols()).map(|_| lcg(&mut seed)).collect();
        let mut reference = vec![0.0; a.n_rows()];
        seq::spmv_into(&a, &v, &mut reference);
        let fast = spmv(&a, &v).unwrap();
        assert!(fast.iter().zip(&reference).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    proptest! {
        #[test]
        fn dot_is_symmetric(v in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 0..200)) {
            let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert_eq!(dot(&x, &y).unwrap().to_bits(), dot(&y, &x).unwrap().to_bits());
            let t = ReductionOrder::Tree { chunk: 3 };
            prop_assert_eq!(dot_with(&x, &y, t).unwrap().to_bits(), dot_with(&x, &y, t).unwrap().to_bits());
        }

        #[test]
        fn spmv_is_linear(
            nx in 2usize..9, ny in 2usize..9,
            a in -10.0f64..10.0,
            seed in any::<u64>(),
        ) {
            let m = crate::problems::stencil_ptp1(nx, ny).unwrap();
            let n = m.n_cols();
            let mut s = seed;
            let x: Vec<f64> = (0..n).map(|_| lcg(&mut s)).collect();
            let y: Vec<f64> = (0..n).map(|_| lcg(&mut s)).collect();
            let lhs = spmv(&m, &axpy(a, &x, &y).unwrap()).unwrap();
            let rhs = axpy(a, &spmv(&m, &x).unwrap(), &spmv(&m, &y).unwrap()).unwrap();
            let tol = 1e-12 * m.frobenius_norm() * (norm2(&x) + norm2(&y)) * (1.0 + a.abs());
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - r).abs() <= tol);
            }
        }
    }
}
