//! Single-threaded reference kernels.

use super::CsrMatrix;
use crate::scalar::Scalar;

pub fn spmv_into<T: Scalar>(a: &CsrMatrix<T>, x: &[T], y: &mut [T]) {
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = row_dot(a, i, x);
    }
}

#[inline]
pub(crate) fn row_dot<T: Scalar>(a: &CsrMatrix<T>, i: usize, x: &[T]) -> T {
    let (cols, vals) = a.row(i);
    let mut sum = T::zero();
    for (&j, v) in cols.iter().zip(vals) {
        sum = sum + v.clone() * x[j].clone();
    }
    sum
}

pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    let mut sum = T::zero();
    for (a, b) in x.iter().zip(y) {
        sum = sum + a.clone() * b.clone();
    }
    sum
}

pub fn tree_dot<T: Scalar>(x: &[T], y: &[T], chunk: usize) -> T {
    let partials: Vec<T> = x
        .chunks(chunk)
        .zip(y.chunks(chunk))
        .map(|(a, b)| dot(a, b))
        .collect();
    combine_pairwise(partials)
}

/// Fan-in 2 reduction: level by level, neighbours `(2k, 2k+1)` are added and
/// an odd trailing element is carried to the next level unchanged.
pub(crate) fn combine_pairwise<T: Scalar>(mut level: Vec<T>) -> T {
    if level.is_empty() {
        return T::zero();
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        level = next;
    }
    level.pop().expect("non-empty level")
}

pub fn update2<T: Scalar>(out: &mut [T], a: &[T], f: impl Fn(&mut T, &T)) {
    for (o, a) in out.iter_mut().zip(a) {
        f(o, a);
    }
}

pub fn update3<T: Scalar>(out: &mut [T], a: &[T], b: &[T], f: impl Fn(&mut T, &T, &T)) {
    for ((o, a), b) in out.iter_mut().zip(a).zip(b) {
        f(o, a, b);
    }
}

pub fn update4<T: Scalar>(
    out: &mut [T],
    a: &[T],
    b: &[T],
    c: &[T],
    f: impl Fn(&mut T, &T, &T, &T),
) {
    for (((o, a), b), c) in out.iter_mut().zip(a).zip(b).zip(c) {
        f(o, a, b, c);
    }
}
