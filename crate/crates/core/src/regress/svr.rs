//! Epsilon-insensitive support vector regression trained by SMO.
//!
//! The dual is solved over `2n` variables `[alpha; alpha']` with signs
//! `[+1; -1]`, in the minimization form
//!
//! ```text
//! min  1/2 b^T Q b + p^T b    s.t.  s^T b = 0,  0 <= b <= C
//! Q_ts = s_t s_u K(x_t mod n, x_u mod n)
//! p    = [eps - y; eps + y]
//! ```
//!
//! Pairs are chosen by maximal violation for the first index and by
//! second-order gain for the second.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

const TAU: f64 = 1e-12;
/// Rows above this count are recomputed on demand instead of cached.
const DENSE_GRAM_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyper<T> {
    pub c: T,
    pub epsilon: T,
    pub kernel: KernelSpec<T>,
    pub tolerance: T,
    pub max_iter: usize,
}

impl<T: Real> SvrHyper<T> {
    pub fn new(c: T, epsilon: T, kernel: KernelSpec<T>) -> Result<Self> {
        let h = Self { c, epsilon, kernel, tolerance: T::lit(1e-6), max_iter: 10_000_000 };
        h.validate()?;
        Ok(h)
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > T::zero()) {
            return Err(Error::InvalidParameter("SVR C must be positive".into()));
        }
        if !(self.epsilon >= T::zero()) {
            return Err(Error::InvalidParameter("SVR epsilon must be non-negative".into()));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::InvalidParameter("SVR tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Raw dual solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution<T> {
    pub alpha: Vec<T>,
    pub alpha_star: Vec<T>,
    pub bias: T,
    pub iterations: usize,
    pub kkt_gap: T,
}

impl<T: Real> DualSolution<T> {
    /// `alpha_i - alpha'_i`
    pub fn coefficients(&self) -> Vec<T> {
        self.alpha.iter().zip(&self.alpha_star).map(|(&a, &b)| a - b).collect()
    }
}

enum Gram<'a, T> {
    Dense { n: usize, k: Vec<T> },
    OnDemand { x: &'a [Vec<T>], kernel: KernelSpec<T> },
}

impl<'a, T: Real> Gram<'a, T> {
    fn new(x: &'a [Vec<T>], kernel: KernelSpec<T>) -> Self {
        let n = x.len();
        if n <= DENSE_GRAM_LIMIT {
            let mut k = vec![T::zero(); n * n];
            for i in 0..n {
                for j in 0..=i {
                    let v = kernel.apply(&x[i], &x[j]);
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
            Gram::Dense { n, k }
        } else {
            Gram::OnDemand { x, kernel }
        }
    }

    fn row(&self, i: usize) -> Cow<'_, [T]> {
        match self {
            Gram::Dense { n, k } => Cow::Borrowed(&k[i * n..(i + 1) * n]),
            Gram::OnDemand { x, kernel } => Cow::Owned(x.iter().map(|xj| kernel.apply(&x[i], xj)).collect()),
        }
    }

    fn diag(&self, i: usize) -> T {
        match self {
            Gram::Dense { n, k } => k[i * n + i],
            Gram::OnDemand { x, kernel } => kernel.apply(&x[i], &x[i]),
        }
    }
}

/// Solves the epsilon-SVR dual for samples `x` and targets `y`.
pub fn solve_dual<T: Real>(x: &[Vec<T>], y: &[T], hyper: &SvrHyper<T>) -> Result<DualSolution<T>> {
    hyper.validate()?;
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput("SVR samples"));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let d = x[0].len();
    for row in x {
        if row.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite SVR feature".into()));
        }
    }
    let gram = Gram::new(x, hyper.kernel);
    let l = 2 * n;
    let c = hyper.c;
    let eps = hyper.epsilon;
    let sign = |t: usize| if t < n { T::one() } else { -T::one() };
    let kdiag: Vec<T> = (0..n).map(|i| gram.diag(i)).collect();

    let mut beta = vec![T::zero(); l];
    // f = K (alpha - alpha'); the gradient of variable t is s_t f + p_t
    let mut f = vec![T::zero(); n];
    let grad = |f: &[T], t: usize| if t < n { f[t] + eps - y[t] } else { eps + y[t - n] - f[t - n] };
    let tau = T::lit(TAU);
    let two = T::lit(2.0);

    let mut iterations = 0;
    let mut gap;
    loop {
        // first index: maximal violator in I_up, where -s_t grad_t = r -/+ eps
        let mut gmax = T::neg_infinity();
        let mut i_sel = None;
        for k in 0..n {
            let r = y[k] - f[k];
            if beta[k] < c && r - eps >= gmax {
                gmax = r - eps;
                i_sel = Some(k);
            }
            if beta[k + n] > T::zero() && r + eps >= gmax {
                gmax = r + eps;
                i_sel = Some(k + n);
            }
        }
        let Some(i) = i_sel else {
            gap = T::zero();
            break;
        };
        let ii = i % n;
        let ki = gram.row(ii);
        let kii = kdiag[ii];

        // second index: best second-order gain in I_low
        let mut gmax2 = T::neg_infinity();
        let mut best_obj = T::infinity();
        let mut j_sel = None;
        for k in 0..n {
            let r = y[k] - f[k];
            let quad_k = {
                let q = kii + kdiag[k] - two * ki[k];
                if q <= T::zero() { tau } else { q }
            };
            for (t, low, v) in [(k, beta[k] > T::zero(), eps - r), (k + n, beta[k + n] < c, -r - eps)] {
                if !low {
                    continue;
                }
                if v >= gmax2 {
                    gmax2 = v;
                }
                let diff = gmax + v;
                if diff > T::zero() {
                    let obj = -(diff * diff) / quad_k;
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let Some(j) = j_sel.filter(|_| gap >= hyper.tolerance) else {
            break;
        };
        if iterations >= hyper.max_iter {
            return Err(Error::NotConverged { iterations, kkt_gap: gap.to_f64_lossy() });
        }
        iterations += 1;

        let jj = j % n;
        let kj = gram.row(jj);
        let mut quad = kii + kdiag[jj] - two * ki[jj];
        if quad <= T::zero() {
            quad = tau;
        }
        let (gi, gj) = (grad(&f, i), grad(&f, j));
        let (old_i, old_j) = (beta[i], beta[j]);
        let (mut bi, mut bj) = (old_i, old_j);
        if sign(i) != sign(j) {
            let delta = (-gi - gj) / quad;
            let diff = bi - bj;
            bi += delta;
            bj += delta;
            if diff > T::zero() {
                if bj < T::zero() {
                    bj = T::zero();
                    bi = diff;
                }
            } else if bi < T::zero() {
                bi = T::zero();
                bj = -diff;
            }
            if diff > T::zero() {
                if bi > c {
                    bi = c;
                    bj = c - diff;
                }
            } else if bj > c {
                bj = c;
                bi = c + diff;
            }
        } else {
            let delta = (gi - gj) / quad;
            let sum = bi + bj;
            bi -= delta;
            bj += delta;
            if sum > c {
                if bi > c {
                    bi = c;
                    bj = sum - c;
                }
            } else if bj < T::zero() {
                bj = T::zero();
                bi = sum;
            }
            if sum > c {
                if bj > c {
                    bj = c;
                    bi = sum - c;
                }
            } else if bi < T::zero() {
                bi = T::zero();
                bj = sum;
            }
        }
        beta[i] = bi;
        beta[j] = bj;
        let di = (bi - old_i) * sign(i);
        let dj = (bj - old_j) * sign(j);
        for ((fk, &a), &b) in f.iter_mut().zip(ki.iter()).zip(kj.iter()) {
            *fk += a * di + b * dj;
        }
    }

    // bias from free variables, or the midpoint of the feasible interval
    let mut ub = T::infinity();
    let mut lb = T::neg_infinity();
    let mut free_sum = T::zero();
    let mut free = 0usize;
    for t in 0..l {
        let yg = sign(t) * grad(&f, t);
        let positive = t < n;
        if beta[t] >= c {
            if positive {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if beta[t] <= T::zero() {
            if positive {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / T::from_usize_lossy(free)
    } else {
        (ub + lb) / T::lit(2.0)
    };

    Ok(DualSolution {
        alpha: beta[..n].to_vec(),
        alpha_star: beta[n..].to_vec(),
        bias: -rho,
        iterations,
        kkt_gap: gap.max(T::zero()),
    })
}

/// Value of the dual objective in its maximization form.
pub fn dual_objective<T: Real>(x: &[Vec<T>], y: &[T], hyper: &SvrHyper<T>, sol: &DualSolution<T>) -> T {
    let coef = sol.coefficients();
    let n = x.len();
    let mut quad = T::zero();
    for i in 0..n {
        if coef[i] == T::zero() {
            continue;
        }
        for j in 0..n {
            quad += coef[i] * coef[j] * hyper.kernel.apply(&x[i], &x[j]);
        }
    }
    let l1: T = sol.alpha.iter().zip(&sol.alpha_star).map(|(&a, &b)| a + b).sum();
    let lin: T = coef.iter().zip(y).map(|(&c, &t)| c * t).sum();
    -T::lit(0.5) * quad - hyper.epsilon * l1 + lin
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel<T> {
    pub hyper: SvrHyper<T>,
    pub support_vectors: Vec<Vec<T>>,
    /// `alpha_i - alpha'_i` for each support vector.
    pub coefficients: Vec<T>,
    pub bias: T,
    pub iterations: usize,
    pub kkt_gap: T,
}

impl<T: Real> SvrModel<T> {
    pub fn fit(x: &[Vec<T>], y: &[T], hyper: SvrHyper<T>) -> Result<Self> {
        let sol = solve_dual(x, y, &hyper)?;
        let (support_vectors, coefficients) = x
            .iter()
            .zip(sol.coefficients())
            .filter(|(_, c)| *c != T::zero())
            .map(|(row, c)| (row.clone(), c))
            .unzip();
        Ok(Self {
            hyper,
            support_vectors,
            coefficients,
            bias: sol.bias,
            iterations: sol.iterations,
            kkt_gap: sol.kkt_gap,
        })
    }

    pub fn predict(&self, x: &[T]) -> Result<T> {
        if let Some(sv) = self.support_vectors.first() {
            if sv.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: sv.len(), got: x.len() });
            }
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, &c)| c * self.hyper.kernel.apply(sv, x))
            .sum::<T>()
            + self.bias)
    }
}
