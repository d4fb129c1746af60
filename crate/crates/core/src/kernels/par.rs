//! Rayon-backed kernels. Numerically identical to [`super::seq`].

use rayon::prelude::*;

use super::seq::{combine_pairwise, dot, row_dot};
use super::CsrMatrix;
use crate::scalar::Scalar;

const MIN_LEN: usize = 1024;

pub fn spmv_into<T: Scalar>(a: &CsrMatrix<T>, x: &[T], y: &mut [T]) {
    y.par_iter_mut()
        .with_min_len(MIN_LEN)
        .enumerate()
        .for_each(|(i, yi)| *yi = row_dot(a, i, x));
}

pub fn tree_dot<T: Scalar>(x: &[T], y: &[T], chunk: usize) -> T {
    let partials: Vec<T> = x
        .par_chunks(chunk)
        .zip(y.par_chunks(chunk))
        .map(|(a, b)| dot(a, b))
        .collect();
    combine_pairwise(partials)
}

pub fn update2<T: Scalar>(out: &mut [T], a: &[T], f: impl Fn(&mut T, &T) + Sync + Send) {
    out.par_iter_mut()
        .with_min_len(MIN_LEN)
        .zip(a.par_iter())
        .for_each(|(o, a)| f(o, a));
}

pub fn update3<T: Scalar>(
    out: &mut [T],
    a: &[T],
    b: &[T],
    f: impl Fn(&mut T, &T, &T) + Sync + Send,
) {
    out.par_iter_mut()
        .with_min_len(MIN_LEN)
        .zip(a.par_iter())
        .zip(b.par_iter())
        .for_each(|((o, a), b)| f(o, a, b));
}

pub fn update4<T: Scalar>(
    out: &mut [T],
    a: &[T],
    b: &[T],
    c: &[T],
    f: impl Fn(&mut T, &T, &T, &T) + Sync + Send,
) {
    out.par_iter_mut()
        .with_min_len(MIN_LEN)
        .zip(a.par_iter())
        .zip(b.par_iter())
        .zip(c.par_iter())
        .for_each(|(((o, a), b), c)| f(o, a, b, c));
}
