//! Kernel functions for support vector regression.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::linalg::{dot, squared_distance};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `x . x'`
    Linear,
    /// `exp(-|x - x'|^2)`
    Gaussian,
    /// `exp(-|x - x'|^2 / (2 sigma^2))`
    Rbf,
    /// `(1 + x . x')^p`
    Polynomial,
}

/// `Gaussian` is the `Rbf` kernel with `2 sigma^2 = 1`; both are kept as
/// separate kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<T> {
    pub kind: KernelKind,
    pub sigma: T,
    pub degree: u32,
}

impl<T: Real> KernelSpec<T> {
    pub fn linear() -> Self {
        Self { kind: KernelKind::Linear, sigma: T::one(), degree: 1 }
    }

    pub fn gaussian() -> Self {
        Self { kind: KernelKind::Gaussian, sigma: T::one(), degree: 1 }
    }

    pub fn rbf(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) {
            return Err(Error::InvalidParameter("rbf sigma must be positive".into()));
        }
        Ok(Self { kind: KernelKind::Rbf, sigma, degree: 1 })
    }

    pub fn polynomial(degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
        }
        Ok(Self { kind: KernelKind::Polynomial, sigma: T::one(), degree })
    }

    /// Kernel value; slices must have equal length.
    #[inline]
    pub fn apply(&self, x: &[T], y: &[T]) -> T {
        debug_assert_eq!(x.len(), y.len());
        match self.kind {
            KernelKind::Linear => dot(x, y),
            KernelKind::Gaussian => (-squared_distance(x, y)).exp(),
            KernelKind::Rbf => (-squared_distance(x, y) / (T::lit(2.0) * self.sigma * self.sigma)).exp(),
            KernelKind::Polynomial => (T::one() + dot(x, y)).powi(self.degree as i32),
        }
    }

    pub fn eval(&self, x: &[T], y: &[T]) -> Result<T> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        Ok(self.apply(x, y))
    }
}

impl<T: Real> fmt::Display for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::Linear => write!(f, "linear"),
            KernelKind::Gaussian => write!(f, "gaussian"),
            KernelKind::Rbf => write!(f, "rbf(sigma={})", self.sigma),
            KernelKind::Polynomial => write!(f, "polynomial(p={})", self.degree),
        }
    }
}
