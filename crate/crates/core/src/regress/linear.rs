//! Ordinary least squares with an explicit intercept.

use serde::{Deserialize, Serialize};

use super::linalg::{dot, Cholesky};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ridge added to the normal equations when they are numerically singular,
/// relative to their largest diagonal entry.
pub const FALLBACK_RIDGE: f64 = 1e-10;

const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    /// Set when the ridge fallback was needed.
    pub ridge_used: bool,
}

impl<T: Real> LinearModel<T> {
    pub fn fit(x: &[Vec<T>], y: &[T]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyInput("linear regression samples"));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        let d = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        // constant columns are absorbed by the intercept and get weight 0
        let active: Vec<usize> = (0..d).filter(|&j| x.iter().any(|r| r[j] != x[0][j])).collect();
        let m = active.len() + 1;
        let design = |row: &[T], i: usize| if i < active.len() { row[active[i]] } else { T::one() };
        let mut a = vec![T::zero(); m * m];
        let mut b = vec![T::zero(); m];
        for (row, &target) in x.iter().zip(y) {
            for i in 0..m {
                let xi = design(row, i);
                b[i] += xi * target;
                for j in 0..=i {
                    a[i * m + j] += xi * design(row, j);
                }
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                a[i * m + j] = a[j * m + i];
            }
        }

        let (chol, ridge_used) = match Cholesky::factor_with_floor(&a, m, T::lit(SINGULAR_PIVOT)) {
            Some(c) => (c, false),
            None => {
                let max_diag = (0..m).map(|i| a[i * m + i]).fold(T::zero(), T::max);
                let ridge = T::lit(FALLBACK_RIDGE) * max_diag.max(T::one());
                for i in 0..m {
                    a[i * m + i] += ridge;
                }
                let c = Cholesky::factor(&a, m)
                    .ok_or_else(|| Error::Factorization("ridge-regularized normal equations".into()))?;
                (c, true)
            }
        };
        let mut coef = chol.solve(&b);
        let intercept = coef.pop().expect("intercept term");
        let mut weights = vec![T::zero(); d];
        for (&j, w) in active.iter().zip(coef) {
            weights[j] = w;
        }
        Ok(Self { weights, intercept, ridge_used })
    }

    pub fn predict(&self, x: &[T]) -> Result<T> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), got: x.len() });
        }
        Ok(dot(&self.weights, x) + self.intercept)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![f64::from(i) * 0.3]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let m = LinearModel::fit(&x, &y).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-9);
        assert!((m.intercept - 1.0).abs() < 1e-9);
        assert!(!m.ridge_used);
        for (r, t) in x.iter().zip(&y) {
            assert!((m.predict(r).unwrap() - t).abs() < 1e-9);
        }
        assert!((m.predict(&[10.0]).unwrap() - 21.0).abs() < 1e-6);
    }

    #[test]
    fn constant_target() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![f64::from(i), f64::from(i * i)]).collect();
        let m = LinearModel::fit(&x, &[4.0; 6]).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-9));
        assert!((m.intercept - 4.0).abs() < 1e-9);
    }

    #[test]
    fn single_sample() {
        let m = LinearModel::fit(&[vec![1.0f64]], &[3.0]).unwrap();
        assert_eq!(m.weights, vec![0.0]);
        assert!((m.predict(&[1.0]).unwrap() - 3.0).abs() < 1e-6);
    }

    #[test]
    fn collinear_columns() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![f64::from(i), 2.0 * f64::from(i)]).collect();
        let y: Vec<f64> = (0..8).map(|i| 3.0 * f64::from(i) - 1.0).collect();
        let m = LinearModel::fit(&x, &y).unwrap();
        assert!(m.ridge_used);
        for (r, t) in x.iter().zip(&y) {
            assert!((m.predict(r).unwrap() - t).abs() < 1e-6);
        }
    }
}
