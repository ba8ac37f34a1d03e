//! Zero-mean Gaussian process regression with a squared-exponential plus
//! white-noise covariance.

use serde::{Deserialize, Serialize};

use super::linalg::{dot, squared_distance, Cholesky};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GprHyper<T> {
    pub signal_variance: T,
    pub length_scale: T,
    pub noise_variance: T,
}

impl<T: Real> GprHyper<T> {
    pub fn new(signal_variance: T, length_scale: T, noise_variance: T) -> Result<Self> {
        if !(signal_variance > T::zero()) || !(length_scale > T::zero()) || !(noise_variance >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "GPR hyperparameters need sigma_f2 > 0, l > 0, sigma_n2 >= 0 (got {signal_variance}, {length_scale}, {noise_variance})"
            )));
        }
        Ok(Self { signal_variance, length_scale, noise_variance })
    }

    /// Noise-free part of the covariance.
    #[inline]
    pub fn signal_cov(&self, a: &[T], b: &[T]) -> T {
        let l = self.length_scale;
        self.signal_variance * (-squared_distance(a, b) / (T::lit(2.0) * l * l)).exp()
    }
}

/// How hyperparameters are chosen at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GprSelection<T> {
    Fixed(GprHyper<T>),
    /// Exhaustive search maximizing the log marginal likelihood.
    Grid {
        signal_variance: Vec<T>,
        length_scale: Vec<T>,
        noise_variance: Vec<T>,
    },
}

impl<T: Real> Default for GprSelection<T> {
    fn default() -> Self {
        let axis = vec![T::lit(0.1), T::one(), T::lit(10.0)];
        GprSelection::Grid {
            signal_variance: axis.clone(),
            length_scale: axis.clone(),
            noise_variance: axis,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GprModel<T> {
    pub hyper: GprHyper<T>,
    train_x: Vec<Vec<T>>,
    train_y: Vec<T>,
    chol: Cholesky<T>,
    alpha: Vec<T>,
    log_marginal_likelihood: T,
}

impl<T: Real> GprModel<T> {
    pub fn fit(x: &[Vec<T>], y: &[T], hyper: GprHyper<T>) -> Result<Self> {
        let d2 = Self::distances(x, y)?;
        Self::fit_with_distances(x, y, &d2, hyper)
    }

    fn distances(x: &[Vec<T>], y: &[T]) -> Result<Vec<T>> {
        if x.is_empty() {
            return Err(Error::EmptyInput("GPR samples"));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        let n = x.len();
        let mut d2 = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..i {
                let v = squared_distance(&x[i], &x[j]);
                d2[i * n + j] = v;
                d2[j * n + i] = v;
            }
        }
        Ok(d2)
    }

    fn fit_with_distances(x: &[Vec<T>], y: &[T], d2: &[T], hyper: GprHyper<T>) -> Result<Self> {
        let n = x.len();
        let two_l2 = T::lit(2.0) * hyper.length_scale * hyper.length_scale;
        let mut k: Vec<T> = d2.iter().map(|&d| hyper.signal_variance * (-d / two_l2).exp()).collect();
        // the white-noise term applies to identical training indices only
        for i in 0..n {
            k[i * n + i] += hyper.noise_variance;
        }
        let chol = Cholesky::factor(&k, n).ok_or_else(|| {
            Error::Factorization(format!(
                "GPR kernel matrix with sigma_f2={}, l={}, sigma_n2={}",
                hyper.signal_variance, hyper.length_scale, hyper.noise_variance
            ))
        })?;
        let alpha = chol.solve(y);
        let half_ln_2pi = T::lit(0.5 * (2.0 * std::f64::consts::PI).ln());
        let lml = -T::lit(0.5) * dot(y, &alpha) - chol.half_log_det() - T::from_usize_lossy(n) * half_ln_2pi;
        Ok(Self {
            hyper,
            train_x: x.to_vec(),
            train_y: y.to_vec(),
            chol,
            alpha,
            log_marginal_likelihood: lml,
        })
    }

    /// Fits every grid point and keeps the best log marginal likelihood.
    /// Grid points whose covariance cannot be factored are skipped.
    pub fn fit_selected(x: &[Vec<T>], y: &[T], selection: &GprSelection<T>) -> Result<Self> {
        match selection {
            GprSelection::Fixed(h) => Self::fit(x, y, *h),
            GprSelection::Grid { signal_variance, length_scale, noise_variance } => {
                let d2 = Self::distances(x, y)?;
                let mut best: Option<Self> = None;
                let mut last_err = None;
                for &sf in signal_variance {
                    for &l in length_scale {
                        for &sn in noise_variance {
                            let hyper = GprHyper::new(sf, l, sn)?;
                            match Self::fit_with_distances(x, y, &d2, hyper) {
                                Ok(m) => {
                                    if best
                                        .as_ref()
                                        .is_none_or(|b| m.log_marginal_likelihood > b.log_marginal_likelihood)
                                    {
                                        best = Some(m);
                                    }
                                }
                                Err(e) => last_err = Some(e),
                            }
                        }
                    }
                }
                best.ok_or_else(|| last_err.unwrap_or(Error::EmptyInput("GPR hyperparameter grid")))
            }
        }
    }

    pub fn log_marginal_likelihood(&self) -> T {
        self.log_marginal_likelihood
    }

    pub fn train_x(&self) -> &[Vec<T>] {
        &self.train_x
    }

    pub fn train_y(&self) -> &[T] {
        &self.train_y
    }

    fn cross_cov(&self, x: &[T]) -> Result<Vec<T>> {
        let d = self.train_x[0].len();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        Ok(self.train_x.iter().map(|t| self.hyper.signal_cov(t, x)).collect())
    }

    pub fn predict_mean(&self, x: &[T]) -> Result<T> {
        Ok(dot(&self.cross_cov(x)?, &self.alpha))
    }

    /// Posterior mean and variance of the latent function at `x`.
    pub fn predict(&self, x: &[T]) -> Result<(T, T)> {
        let ks = self.cross_cov(x)?;
        let mean = dot(&ks, &self.alpha);
        let v = self.chol.forward(&ks);
        let var = self.hyper.signal_variance - dot(&v, &v);
        // negative values are round-off
        Ok((mean, var.max(T::zero())))
    }
}
