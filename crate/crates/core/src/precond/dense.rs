use crate::scalar::Scalar;

/// Row-major dense LU with partial pivoting, `P A = L U` packed in place.
#[derive(Debug, Clone)]
pub(crate) struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> DenseLu<T> {
    /// `None` if a zero pivot is met.
    pub(crate) fn factor(n: usize, mut a: Vec<T>) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].magnitude();
            for i in k + 1..n {
                let m = a[i * n + k].magnitude();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == T::zero() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k].clone();
            for i in k + 1..n {
                let l = a[i * n + k].clone() / pivot.clone();
                if l == T::zero() {
                    a[i * n + k] = l;
                    continue;
                }
                for j in k + 1..n {
                    let v = a[i * n + j].clone() - l.clone() * a[k * n + j].clone();
                    a[i * n + j] = v;
                }
                a[i * n + k] = l;
            }
        }
        Some(DenseLu { n, lu: a, perm })
    }

    pub(crate) fn solve_into(&self, b: &[T], x: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[self.perm[i]].clone();
            for j in 0..i {
                s = s - self.lu[i * n + j].clone() * x[j].clone();
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i].clone();
            for j in i + 1..n {
                s = s - self.lu[i * n + j].clone() * x[j].clone();
            }
            x[i] = s / self.lu[i * n + i].clone();
        }
    }
}
