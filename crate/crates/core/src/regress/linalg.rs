//! Small dense routines for symmetric positive definite systems.

use crate::scalar::Real;

/// Lower-triangular Cholesky factor of an `n x n` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors `a`; `None` if a pivot is not strictly positive.
    pub fn factor(a: &[T], n: usize) -> Option<Self> {
        Self::factor_with_floor(a, n, T::zero())
    }

    /// Like [`Cholesky::factor`] but also rejects pivots at or below
    /// `rel_floor * max(diag(a))`.
    pub fn factor_with_floor(a: &[T], n: usize, rel_floor: T) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(T::zero(), T::max);
        let floor = rel_floor * max_diag;
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let row_j = &l[j * n..j * n + j];
            let d = a[j * n + j] - dot(row_j, row_j);
            if !(d > floor) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let s = a[i * n + j] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = s / djj;
            }
        }
        Some(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `L^{-1} b`
    pub fn forward(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// `L^{-T} b`
    pub fn backward(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// `A^{-1} b`
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.backward(&self.forward(b))
    }

    /// `sum_i ln L_ii`, half the log-determinant of `A`.
    pub fn half_log_det(&self) -> T {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum()
    }
}

/// Four interleaved partial sums, combined pairwise.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a[..n].chunks_exact(4), b[..n].chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: T = ra.iter().zip(rb).map(|(&x, &y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn squared_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}
