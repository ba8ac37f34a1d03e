//! Dense reference solver for the epsilon-SVR dual, independent of the
//! library's kernels and SMO.

#[derive(Debug, Clone, Copy)]
pub enum OracleKernel {
    Linear,
    Gaussian,
    Rbf(f64),
    Poly(i32),
}

impl OracleKernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
        let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
        match self {
            OracleKernel::Linear => dot,
            OracleKernel::Gaussian => (-d2).exp(),
            OracleKernel::Rbf(s) => (-d2 / (2.0 * s * s)).exp(),
            OracleKernel::Poly(p) => (1.0 + dot).powi(p),
        }
    }
}

pub struct OracleSolution {
    pub coef: Vec<f64>,
    pub bias: f64,
    /// Dual objective in maximization form.
    pub objective: f64,
    kernel: OracleKernel,
    x: Vec<Vec<f64>>,
}

impl OracleSolution {
    pub fn predict(&self, q: &[f64]) -> f64 {
        self.x.iter().zip(&self.coef).map(|(xi, c)| c * self.kernel.eval(xi, q)).sum::<f64>() + self.bias
    }
}

/// Euclidean projection onto `{z : s.z = 0, 0 <= z <= c}` with
/// `s = [+1; -1]`, found exactly from the breakpoints of the
/// piecewise-linear multiplier equation.
fn project(v: &[f64], c: f64) -> Vec<f64> {
    let n = v.len() / 2;
    let s = |t: usize| if t < n { 1.0 } else { -1.0 };
    let at = |mu: f64| -> Vec<f64> { (0..v.len()).map(|t| (v[t] - mu * s(t)).clamp(0.0, c)).collect() };
    let g = |mu: f64| -> f64 { at(mu).iter().enumerate().map(|(t, z)| s(t) * z).sum() };
    let mut bps: Vec<f64> = (0..v.len()).flat_map(|t| [s(t) * v[t], s(t) * (v[t] - c)]).collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gs: Vec<f64> = bps.iter().map(|&m| g(m)).collect();
    for k in 0..bps.len() - 1 {
        if gs[k] >= 0.0 && gs[k + 1] <= 0.0 {
            let mu = if gs[k] == gs[k + 1] {
                bps[k]
            } else {
                bps[k] + (bps[k + 1] - bps[k]) * gs[k] / (gs[k] - gs[k + 1])
            };
            return at(mu);
        }
    }
    at(bps[0])
}

/// Solves the dual by projected accelerated gradient with adaptive restart.
pub fn solve(x: &[Vec<f64>], y: &[f64], kernel: OracleKernel, c: f64, eps: f64) -> OracleSolution {
    let n = x.len();
    let k: Vec<Vec<f64>> = x.iter().map(|a| x.iter().map(|b| kernel.eval(a, b)).collect()).collect();
    let mut v = vec![1.0; n];
    let mut lam = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * v[j]).sum()).collect();
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lam = norm;
        v = w.iter().map(|a| a / norm).collect();
    }
    let lip = 2.0 * lam * 1.05 + 1e-12;

    let f_of = |b: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| k[i][j] * (b[j] - b[j + n])).sum()).collect() };
    let grad = |b: &[f64]| -> Vec<f64> {
        let f = f_of(b);
        (0..2 * n).map(|t| if t < n { f[t] + eps - y[t] } else { -f[t - n] + eps + y[t - n] }).collect()
    };

    let mut b = vec![0.0; 2 * n];
    let mut yk = b.clone();
    let mut t = 1.0f64;
    for _ in 0..400_000 {
        let g = grad(&yk);
        let step: Vec<f64> = yk.iter().zip(&g).map(|(a, gi)| a - gi / lip).collect();
        let nb = project(&step, c);
        let restart: f64 = yk.iter().zip(&nb).zip(&b).map(|((yv, nv), bv)| (yv - nv) * (nv - bv)).sum();
        let moved: f64 = nb.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let t_next = if restart > 0.0 { 1.0 } else { (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0 };
        let mom = if restart > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        yk = nb.iter().zip(&b).map(|(p, q)| p + mom * (p - q)).collect();
        b = nb;
        t = t_next;
        if moved < 1e-15 {
            break;
        }
    }

    let f = f_of(&b);
    let coef: Vec<f64> = (0..n).map(|i| b[i] - b[i + n]).collect();
    let quad: f64 = coef.iter().zip(&f).map(|(ci, fi)| ci * fi).sum();
    let objective = -0.5 * quad - eps * b.iter().sum::<f64>() + coef.iter().zip(y).map(|(ci, yi)| ci * yi).sum::<f64>();

    // b = y - f - eps on free alpha, y - f + eps on free alpha'
    let tol = 1e-7 * c;
    let (mut lb, mut ub) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut free = Vec::new();
    for i in 0..n {
        let up = y[i] - f[i] - eps;
        let dn = y[i] - f[i] + eps;
        let (a, a2) = (b[i], b[i + n]);
        if a > tol && a < c - tol {
            free.push(up);
        } else if a >= c - tol {
            ub = ub.min(up);
        } else {
            lb = lb.max(up);
        }
        if a2 > tol && a2 < c - tol {
            free.push(dn);
        } else if a2 >= c - tol {
            lb = lb.max(dn);
        } else {
            ub = ub.min(dn);
        }
    }
    let bias = if free.is_empty() { (lb + ub) / 2.0 } else { free.iter().sum::<f64>() / free.len() as f64 };
    OracleSolution { coef, bias, objective, kernel, x: x.to_vec() }
}
