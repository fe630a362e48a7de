//! Smooth objectives, counted oracles, canonical test problems, derivative
//! checks, and approximate second-order certificates.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{
    dot, norm, norm_inf, random_orthogonal, symmetric_eigen, Cholesky, LinalgError, Matrix,
};
use crate::trace::CallCounts;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothError {
    #[error("oracle provides neither a Hessian nor Hessian-vector products")]
    MissingHessian,
    #[error("oracle metadata lacks {0}")]
    MissingMetadata(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A twice-differentiable function. Hessian access is optional.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        None
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        self.hessian(x).map(|h| h.mul_vec(v))
    }

    fn has_hessian(&self) -> bool {
        false
    }

    fn has_hvp(&self) -> bool {
        self.has_hessian()
    }
}

/// Known constants of a problem; any may be absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    /// Gradient Lipschitz constant.
    pub l: Option<f64>,
    /// Strong convexity modulus.
    pub mu: Option<f64>,
    /// Hessian Lipschitz constant.
    pub hess_lipschitz: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    pub f_star: Option<f64>,
}

impl Metadata {
    pub fn kappa(&self) -> Option<f64> {
        Some(self.l? / self.mu?)
    }
}

/// Objective wrapper that counts every call. Safe to share across threads.
pub struct SmoothOracle {
    name: String,
    objective: Arc<dyn Objective>,
    pub meta: Metadata,
    f_calls: AtomicU64,
    grad_calls: AtomicU64,
    hess_calls: AtomicU64,
    hvp_calls: AtomicU64,
}

impl std::fmt::Debug for SmoothOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothOracle")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("meta", &self.meta)
            .field("counts", &self.counts())
            .finish()
    }
}

impl SmoothOracle {
    pub fn new(
        name: impl Into<String>,
        objective: impl Objective + 'static,
        meta: Metadata,
    ) -> Self {
        Self::from_arc(name, Arc::new(objective), meta)
    }

    pub fn from_arc(
        name: impl Into<String>,
        objective: Arc<dyn Objective>,
        meta: Metadata,
    ) -> Self {
        Self {
            name: name.into(),
            objective,
            meta,
            f_calls: AtomicU64::new(0),
            grad_calls: AtomicU64::new(0),
            hess_calls: AtomicU64::new(0),
            hvp_calls: AtomicU64::new(0),
        }
    }

    /// Same objective and metadata with zeroed counters.
    pub fn fresh(&self) -> Self {
        Self::from_arc(
            self.name.clone(),
            Arc::clone(&self.objective),
            self.meta.clone(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// Uncounted access to the underlying function, for checks outside a solve.
    pub fn objective(&self) -> &dyn Objective {
        self.objective.as_ref()
    }

    pub fn has_hessian(&self) -> bool {
        self.objective.has_hessian()
    }

    pub fn has_hvp(&self) -> bool {
        self.objective.has_hvp()
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.f_calls.fetch_add(1, Ordering::Relaxed);
        self.objective.value(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.grad_calls.fetch_add(1, Ordering::Relaxed);
        self.objective.gradient(x)
    }

    pub fn hess(&self, x: &[f64]) -> Option<Matrix> {
        if !self.has_hessian() {
            return None;
        }
        self.hess_calls.fetch_add(1, Ordering::Relaxed);
        self.objective.hessian(x)
    }

    pub fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        if !self.has_hvp() {
            return None;
        }
        self.hvp_calls.fetch_add(1, Ordering::Relaxed);
        self.objective.hvp(x, v)
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            f: self.f_calls.load(Ordering::Relaxed),
            grad: self.grad_calls.load(Ordering::Relaxed),
            hess: self.hess_calls.load(Ordering::Relaxed),
            hvp: self.hvp_calls.load(Ordering::Relaxed),
        }
    }
}

/// Exposes only value, gradient, and Hessian-vector products of another
/// objective.
pub struct HvpOnly(pub Arc<dyn Objective>);

impl Objective for HvpOnly {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.0.gradient(x)
    }
    fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        self.0.hvp(x, v)
    }
    fn has_hvp(&self) -> bool {
        self.0.has_hvp()
    }
}

/// Matrix-free view of `oracle`: same function, Hessian only through products.
pub fn hvp_only(oracle: &SmoothOracle) -> SmoothOracle {
    SmoothOracle::new(
        format!("{}:hvp-only", oracle.name),
        HvpOnly(Arc::clone(&oracle.objective)),
        oracle.meta.clone(),
    )
}

// ---- quadratics ----

/// `f(x) = ½xᵀHx + gᵀx`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub h: Matrix,
    pub g: Vec<f64>,
    pub meta: Metadata,
}

impl QuadraticProblem {
    /// Metadata is derived from the spectrum of `h`; `x*` and `f*` are set
    /// when `h` is positive definite.
    pub fn new(h: Matrix, g: Vec<f64>) -> Self {
        assert!(h.is_symmetric(), "quadratic Hessian must be symmetric");
        assert_eq!(h.rows(), g.len(), "Hessian and linear term sizes differ");
        let eig = symmetric_eigen(&h);
        let lo = eig.values[0];
        let hi = *eig.values.last().unwrap();
        let mut meta = Metadata {
            l: Some(hi.abs().max(lo.abs())),
            hess_lipschitz: Some(0.0),
            ..Default::default()
        };
        if lo > 0.0 {
            meta.mu = Some(lo);
            if let Ok(ch) = Cholesky::factor(&h) {
                let x_star: Vec<f64> = ch.solve(&g).into_iter().map(|v| -v).collect();
                meta.f_star = Some(0.5 * dot(&g, &x_star));
                meta.x_star = Some(x_star);
            }
        }
        Self { h, g, meta }
    }

    pub fn is_spd(&self) -> bool {
        self.meta.mu.is_some_and(|m| m > 0.0)
    }

    pub fn oracle(&self, name: impl Into<String>) -> SmoothOracle {
        SmoothOracle::new(name, self.clone(), self.meta.clone())
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.g.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.h.quad_form(x) + dot(&self.g, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut hx = self.h.mul_vec(x);
        for (v, g) in hx.iter_mut().zip(&self.g) {
            *v += g;
        }
        hx
    }
    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(self.h.clone())
    }
    fn hvp(&self, _x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        Some(self.h.mul_vec(v))
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

/// `H = Q·diag(eigs)·Qᵀ` for a seeded random orthogonal `Q`, with
/// `g = −Hx*` chosen so that `x* = Q𝟏/√n`.
///
/// Eigenvalues must be nonnegative; a zero eigenvalue gives a convex but not
/// strongly convex problem for which `x*` is still a minimizer.
pub fn make_quadratic_spectrum(eigs: &[f64], seed: u64) -> QuadraticProblem {
    assert!(!eigs.is_empty(), "spectrum must be nonempty");
    assert!(
        eigs.iter().all(|&e| e >= 0.0),
        "spectrum must be nonnegative"
    );
    let n = eigs.len();
    let q = random_orthogonal(n, seed);
    let h = Matrix::symmetric_from_fn(n, |i, j| {
        (0..n).map(|k| q[(i, k)] * eigs[k] * q[(j, k)]).sum()
    });
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let x_star: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| q[(i, k)]).sum::<f64>() * inv_sqrt_n)
        .collect();
    let g: Vec<f64> = h.mul_vec(&x_star).into_iter().map(|v| -v).collect();
    let lo = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigs.iter().copied().fold(0.0, f64::max);
    let f_star = 0.5 * dot(&g, &x_star);
    QuadraticProblem {
        h,
        g,
        meta: Metadata {
            l: Some(hi),
            mu: (lo > 0.0).then_some(lo),
            hess_lipschitz: Some(0.0),
            x_star: Some(x_star),
            f_star: Some(f_star),
        },
    }
}

/// `n` eigenvalues evenly spaced on `[1, κ]`.
pub fn linear_spectrum(n: usize, kappa: f64) -> Vec<f64> {
    assert!(n >= 1 && kappa >= 1.0);
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 1.0 + (kappa - 1.0) * i as f64 / (n - 1) as f64)
        .collect()
}

// ---- Nesterov's worst-case function ----

/// `f(x) = (L/4)·(½xᵀTx − x₁)` where `T` is the `p×p` tridiagonal matrix with
/// 2 on the diagonal and −1 off it, acting on the first `p` of `n`
/// coordinates. Gradients cost `O(n)`.
///
/// Minimizer: `x*_i = 1 − i/(p+1)` for `i ≤ p`, zero beyond;
/// `f* = −(L/8)·p/(p+1)`.
#[derive(Debug, Clone, Copy)]
pub struct NesterovWorstCase {
    pub n: usize,
    pub p: usize,
    pub l: f64,
}

impl NesterovWorstCase {
    pub fn new(n: usize, p: usize, l: f64) -> Self {
        assert!(n >= 2 && (1..=n).contains(&p) && l > 0.0);
        Self { n, p, l }
    }

    pub fn x_star(&self) -> Vec<f64> {
        (1..=self.n)
            .map(|i| {
                if i <= self.p {
                    1.0 - i as f64 / (self.p as f64 + 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn f_star(&self) -> f64 {
        -self.l / 8.0 * self.p as f64 / (self.p as f64 + 1.0)
    }

    fn tx(&self, x: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut out = vec![0.0; self.n];
        for i in 0..p {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < p { x[i + 1] } else { 0.0 };
            out[i] = 2.0 * x[i] - left - right;
        }
        out
    }

    pub fn metadata(&self) -> Metadata {
        let p = self.p as f64;
        let lam_min = self.l / 4.0 * (2.0 - 2.0 * (PI / (p + 1.0)).cos());
        Metadata {
            l: Some(self.l),
            mu: (self.p == self.n).then_some(lam_min),
            hess_lipschitz: Some(0.0),
            x_star: Some(self.x_star()),
            f_star: Some(self.f_star()),
        }
    }

    pub fn oracle(&self) -> SmoothOracle {
        let name = if self.p == self.n {
            format!("nesterov-worst:n={}", self.n)
        } else {
            format!("nesterov-worst:n={}:p={}", self.n, self.p)
        };
        SmoothOracle::new(name, *self, self.metadata())
    }

    /// Dense Hessian.
    pub fn hessian_matrix(&self) -> Matrix {
        let c = self.l / 4.0;
        Matrix::symmetric_from_fn(self.n, |i, j| {
            if i >= self.p || j >= self.p {
                0.0
            } else if i == j {
                2.0 * c
            } else if i.abs_diff(j) == 1 {
                -c
            } else {
                0.0
            }
        })
    }

    pub fn linear_term(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        g[0] = -self.l / 4.0;
        g
    }
}

impl Objective for NesterovWorstCase {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.l / 4.0 * (0.5 * dot(x, &self.tx(x)) - x[0])
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let c = self.l / 4.0;
        let mut g: Vec<f64> = self.tx(x).into_iter().map(|v| c * v).collect();
        g[0] -= c;
        g
    }
    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(self.hessian_matrix())
    }
    fn hvp(&self, _x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        Some(self.tx(v).into_iter().map(|t| self.l / 4.0 * t).collect())
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

/// The full-dimensional hard instance as a dense quadratic.
pub fn make_nesterov_worstcase(n: usize, l: f64) -> QuadraticProblem {
    let w = NesterovWorstCase::new(n, n, l);
    QuadraticProblem {
        h: w.hessian_matrix(),
        g: w.linear_term(),
        meta: w.metadata(),
    }
}

/// Lower bound `3L‖x⁰ − x*‖² / (32(k+1)²)` on `f(x^k) − f*` for
/// gradient-span methods.
pub fn nesterov_lower_bound(l: f64, dist0_sq: f64, k: usize) -> f64 {
    3.0 * l * dist0_sq / (32.0 * ((k + 1) as f64).powi(2))
}

// ---- finite sums ----

/// `f(x) = (1/N)·Σ ½(a_iᵀx − b_i)²`.
#[derive(Debug, Clone)]
pub struct FiniteSumProblem {
    /// Row `i` is `a_i`.
    pub a: Matrix,
    pub b: Vec<f64>,
}

impl FiniteSumProblem {
    /// Seeded standard normal `a_i` and `b_i`.
    pub fn least_squares(n_terms: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_vec(
            n_terms,
            dim,
            (0..n_terms * dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect(),
        );
        let b = (0..n_terms)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Self { a, b }
    }

    pub fn n_terms(&self) -> usize {
        self.b.len()
    }

    pub fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        let r = dot(self.a.row(i), x) - self.b[i];
        0.5 * r * r
    }

    pub fn component_grad(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let r = dot(self.a.row(i), x) - self.b[i];
        self.a.row(i).iter().map(|a| r * a).collect()
    }

    fn mean_grad(&self, idx: impl Iterator<Item = usize>, count: usize, x: &[f64]) -> Vec<f64> {
        let mut sum = vec![0.0; x.len()];
        for i in idx {
            for (s, g) in sum.iter_mut().zip(self.component_grad(i, x)) {
                *s += g;
            }
        }
        sum.into_iter().map(|s| s / count as f64).collect()
    }

    /// Mean gradient over `batch_size` indices drawn uniformly without
    /// replacement; deterministic in `seed`.
    pub fn minibatch_grad(&self, x: &[f64], batch_size: usize, seed: u64) -> Vec<f64> {
        let n = self.n_terms();
        assert!((1..=n).contains(&batch_size), "batch size must be in 1..=N");
        if batch_size == n {
            return self.mean_grad(0..n, n, x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = sample(&mut rng, n, batch_size);
        self.mean_grad(idx.into_iter(), batch_size, x)
    }

    pub fn metadata(&self) -> Metadata {
        let h = self.hessian_matrix();
        let eig = symmetric_eigen(&h);
        let lo = eig.values[0];
        let mut meta = Metadata {
            l: eig.values.last().copied(),
            hess_lipschitz: Some(0.0),
            ..Default::default()
        };
        if lo > 1e-12 * eig.values.last().copied().unwrap_or(1.0) {
            meta.mu = Some(lo);
            let atb = self.a.mul_t_vec(&self.b);
            let rhs: Vec<f64> = atb.iter().map(|v| v / self.n_terms() as f64).collect();
            if let Ok(ch) = Cholesky::factor(&h) {
                let xs = ch.solve(&rhs);
                meta.f_star = Some(self.value(&xs));
                meta.x_star = Some(xs);
            }
        }
        meta
    }

    fn hessian_matrix(&self) -> Matrix {
        let n = self.n_terms() as f64;
        let d = self.a.cols();
        Matrix::symmetric_from_fn(d, |i, j| {
            (0..self.n_terms())
                .map(|k| self.a[(k, i)] * self.a[(k, j)])
                .sum::<f64>()
                / n
        })
    }
}

impl Objective for FiniteSumProblem {
    fn dim(&self) -> usize {
        self.a.cols()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (0..self.n_terms())
            .map(|i| self.component_value(i, x))
            .sum::<f64>()
            / self.n_terms() as f64
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.mean_grad(0..self.n_terms(), self.n_terms(), x)
    }
    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(self.hessian_matrix())
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

// ---- small nonconvex and non-quadratic fixtures ----

/// `f(x) = x²/10 + sin(πx)`: several local minima.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMultimodal;

impl Objective for ScalarMultimodal {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[0] * x[0] / 10.0 + (PI * x[0]).sin()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] / 5.0 + PI * (PI * x[0]).cos()]
    }
    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        Some(Matrix::from_diag(&[0.2 - PI * PI * (PI * x[0]).sin()]))
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

pub fn scalar_multimodal() -> SmoothOracle {
    SmoothOracle::new(
        "scalar-multimodal",
        ScalarMultimodal,
        Metadata {
            l: Some(0.2 + PI * PI),
            hess_lipschitz: Some(PI * PI * PI),
            ..Default::default()
        },
    )
}

/// `f(x, y) = x² − y² + y⁴/4`: strict saddle at the origin, minima at
/// `(0, ±√2)` with `f* = −1`.
#[derive(Debug, Clone, Copy)]
pub struct SaddleQuartic;

impl Objective for SaddleQuartic {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        let y2 = x[1] * x[1];
        x[0] * x[0] - y2 + 0.25 * y2 * y2
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![2.0 * x[0], -2.0 * x[1] + x[1] * x[1] * x[1]]
    }
    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        Some(Matrix::from_diag(&[2.0, -2.0 + 3.0 * x[1] * x[1]]))
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

/// [`SaddleQuartic`] with constants valid on `|y| ≤ 2`.
pub fn saddle_quartic() -> SmoothOracle {
    SmoothOracle::new(
        "saddle-quartic",
        SaddleQuartic,
        Metadata {
            l: Some(10.0),
            hess_lipschitz: Some(12.0),
            f_star: Some(-1.0),
            x_star: Some(vec![0.0, 2f64.sqrt()]),
            ..Default::default()
        },
    )
}

/// `f(x, y) = x² − y²`, unbounded below.
pub fn saddle_quadratic() -> SmoothOracle {
    let q = QuadraticProblem::new(Matrix::from_diag(&[2.0, -2.0]), vec![0.0, 0.0]);
    q.oracle("saddle")
}

/// Chained Rosenbrock `Σ 100(x_{i+1} − x_i²)² + (1 − x_i)²`; minimizer `𝟏`.
#[derive(Debug, Clone, Copy)]
pub struct Rosenbrock {
    pub n: usize,
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for i in 0..self.n - 1 {
            let t = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * t;
        }
        g
    }
    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        let mut h = Matrix::zeros(self.n, self.n);
        for i in 0..self.n - 1 {
            h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            h[(i + 1, i + 1)] += 200.0;
            h[(i, i + 1)] -= 400.0 * x[i];
            h[(i + 1, i)] -= 400.0 * x[i];
        }
        Some(h)
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

pub fn rosenbrock(n: usize) -> SmoothOracle {
    assert!(n >= 2);
    SmoothOracle::new(
        format!("rosenbrock:n={n}"),
        Rosenbrock { n },
        Metadata {
            x_star: Some(vec![1.0; n]),
            f_star: Some(0.0),
            ..Default::default()
        },
    )
}

/// `f(x) = (1/N)·Σ log(1 + exp(−y_i a_iᵀx)) + (ρ/2)‖x‖²`: strictly convex and
/// not quadratic.
#[derive(Debug, Clone)]
pub struct LogisticRidge {
    pub a: Matrix,
    pub y: Vec<f64>,
    pub reg: f64,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticRidge {
    /// Seeded Gaussian features and labels from a random linear classifier
    /// with 10% label noise.
    pub fn generate(n_samples: usize, dim: usize, reg: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_vec(
            n_samples,
            dim,
            (0..n_samples * dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect(),
        );
        let w: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = (0..n_samples)
            .map(|i| {
                let sign = if dot(a.row(i), &w) >= 0.0 { 1.0 } else { -1.0 };
                let u: f64 = rand::Rng::random(&mut rng);
                if u < 0.1 {
                    -sign
                } else {
                    sign
                }
            })
            .collect();
        Self { a, y, reg }
    }

    fn margins(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.mul_vec(x);
        ax.iter().zip(&self.y).map(|(v, y)| y * v).collect()
    }

    /// Newton's method to full precision; returns `(x*, f*)`.
    pub fn solve_exactly(&self) -> (Vec<f64>, f64) {
        let mut x = vec![0.0; self.a.cols()];
        for _ in 0..100 {
            let g = self.gradient(&x);
            if norm(&g) <= 1e-15 * (1.0 + norm(&x)) {
                break;
            }
            let h = self.hessian(&x).expect("logistic Hessian");
            let step = Cholesky::factor(&h)
                .expect("logistic Hessian is SPD")
                .solve(&g);
            for (xi, si) in x.iter_mut().zip(&step) {
                *xi -= si;
            }
            if norm_inf(&step) <= 1e-16 * (1.0 + norm_inf(&x)) {
                break;
            }
        }
        let f = self.value(&x);
        (x, f)
    }

    pub fn metadata(&self) -> Metadata {
        let n = self.y.len() as f64;
        let gram = Matrix::symmetric_from_fn(self.a.cols(), |i, j| {
            (0..self.y.len())
                .map(|k| self.a[(k, i)] * self.a[(k, j)])
                .sum::<f64>()
                / n
        });
        let top = symmetric_eigen(&gram).values.last().copied().unwrap_or(0.0);
        let (xs, fs) = self.solve_exactly();
        Metadata {
            l: Some(0.25 * top + self.reg),
            mu: Some(self.reg),
            hess_lipschitz: None,
            x_star: Some(xs),
            f_star: Some(fs),
        }
    }

    pub fn oracle(self, name: impl Into<String>) -> SmoothOracle {
        let meta = self.metadata();
        SmoothOracle::new(name, self, meta)
    }
}

impl Objective for LogisticRidge {
    fn dim(&self) -> usize {
        self.a.cols()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let m = self.margins(x);
        m.iter().map(|&t| softplus(-t)).sum::<f64>() / m.len() as f64 + 0.5 * self.reg * dot(x, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let m = self.margins(x);
        let n = m.len() as f64;
        let w: Vec<f64> = m
            .iter()
            .zip(&self.y)
            .map(|(&t, y)| -y * logistic(-t) / n)
            .collect();
        let mut g = self.a.mul_t_vec(&w);
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += self.reg * xi;
        }
        g
    }
    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        let m = self.margins(x);
        let n = m.len() as f64;
        let d: Vec<f64> = m
            .iter()
            .map(|&t| {
                let p = logistic(t);
                p * (1.0 - p) / n
            })
            .collect();
        let at = self.a.transpose();
        let mut h = at.scaled_gram(&d);
        h.add_diagonal(self.reg);
        Some(h)
    }
    fn has_hessian(&self) -> bool {
        true
    }
}

// ---- derivative checks and certificates ----

/// Default finite-difference step `1e-5·(1 + ‖x‖∞)`.
pub fn default_fd_step(x: &[f64]) -> f64 {
    1e-5 * (1.0 + norm_inf(x))
}

/// Largest coordinatewise discrepancy between the gradient and central
/// differences, `|g_i − d_i| / max(1, |d_i|)`. Uses uncounted evaluations.
pub fn check_grad(oracle: &SmoothOracle, x: &[f64], h: Option<f64>) -> f64 {
    let obj = oracle.objective();
    let h = h.unwrap_or_else(|| default_fd_step(x));
    assert!(h > 0.0, "finite-difference step must be positive");
    let g = obj.gradient(x);
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = obj.value(&probe);
        probe[i] = x[i] - h;
        let fm = obj.value(&probe);
        probe[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / fd.abs().max(1.0));
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    FirstOrderFail,
    SecondOrderFail,
    Pass,
}

/// Smallest Hessian eigenpair at `x`: dense when a Hessian is available,
/// otherwise by iteration on Hessian-vector products. Uses uncounted calls.
pub fn min_curvature(oracle: &SmoothOracle, x: &[f64]) -> Result<(f64, Vec<f64>), SmoothError> {
    let obj = oracle.objective();
    if obj.has_hessian() {
        let h = obj.hessian(x).ok_or(SmoothError::MissingHessian)?;
        let e = symmetric_eigen(&h);
        return Ok((e.values[0], e.vector(0)));
    }
    if obj.has_hvp() {
        let apply = |v: &[f64]| obj.hvp(x, v).expect("hvp advertised");
        return Ok(crate::linalg::min_eigenpair_iterative(
            apply,
            x.len(),
            1e-10,
            200_000,
        )?);
    }
    Err(SmoothError::MissingHessian)
}

/// `Pass` iff `‖∇f(x)‖ ≤ ε_g` and `λ_min(∇²f(x)) ≥ −ε_H`.
pub fn second_order_certificate(
    oracle: &SmoothOracle,
    x: &[f64],
    eps_g: f64,
    eps_h: f64,
) -> Result<Certificate, SmoothError> {
    if !oracle.has_hessian() && !oracle.has_hvp() {
        return Err(SmoothError::MissingHessian);
    }
    if norm(&oracle.objective().gradient(x)) > eps_g {
        return Ok(Certificate::FirstOrderFail);
    }
    let (lmin, _) = min_curvature(oracle, x)?;
    Ok(if lmin >= -eps_h {
        Certificate::Pass
    } else {
        Certificate::SecondOrderFail
    })
}

// ---- registry ----

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("unknown problem '{0}'")]
    Unknown(String),
    #[error("problem '{id}': {reason}")]
    BadParameter { id: String, reason: String },
}

/// Splits `key=value` pairs separated by `:` or `,`.
pub fn parse_params(id: &str, rest: &str) -> Result<HashMap<String, String>, RegistryError> {
    let mut out = HashMap::new();
    for part in rest.split([':', ',']).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| RegistryError::BadParameter {
                id: id.to_string(),
                reason: format!("expected key=value, got '{part}'"),
            })?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

pub(crate) struct Params<'a> {
    id: &'a str,
    map: HashMap<String, String>,
}

impl<'a> Params<'a> {
    pub(crate) fn new(id: &'a str, rest: &str) -> Result<Self, RegistryError> {
        Ok(Self {
            id,
            map: parse_params(id, rest)?,
        })
    }

    pub(crate) fn get<T: std::str::FromStr>(
        &mut self,
        key: &str,
        default: Option<T>,
    ) -> Result<T, RegistryError> {
        match self.map.remove(key) {
            Some(v) => v.parse().map_err(|_| RegistryError::BadParameter {
                id: self.id.to_string(),
                reason: format!("invalid value '{v}' for '{key}'"),
            }),
            None => default.ok_or_else(|| RegistryError::BadParameter {
                id: self.id.to_string(),
                reason: format!("missing parameter '{key}'"),
            }),
        }
    }

    pub(crate) fn finish(self) -> Result<(), RegistryError> {
        match self.map.keys().next() {
            Some(k) => Err(RegistryError::BadParameter {
                id: self.id.to_string(),
                reason: format!("unknown parameter '{k}'"),
            }),
            None => Ok(()),
        }
    }
}

/// Builds a smooth test problem from its id. Grammar (`:` or `,` between
/// parameters):
///
/// | id | problem |
/// |----|---------|
/// | `quad:kappa=K:n=N:seed=S` | eigenvalues evenly spaced on `[1, K]` |
/// | `nesterov-worst:n=N[:p=P][:L=L]` | tridiagonal hard instance (`p = n`, `L = 1` by default) |
/// | `lsq:terms=N:n=D:seed=S` | least-squares finite sum |
/// | `logistic:samples=N:n=D:seed=S[:reg=R]` | ridge logistic regression (`reg = 0.01`) |
/// | `rosenbrock[:n=N]` | chained Rosenbrock (`n = 2`) |
/// | `scalar-multimodal` | `x²/10 + sin(πx)` |
/// | `saddle-quartic` | `x² − y² + y⁴/4` |
/// | `saddle` | `x² − y²` |
pub fn problem_from_id(id: &str) -> Result<SmoothOracle, RegistryError> {
    let (kind, rest) = id.split_once([':', ',']).unwrap_or((id, ""));
    let mut p = Params::new(id, rest)?;
    let oracle = match kind {
        "quad" => {
            let kappa: f64 = p.get("kappa", None)?;
            let n: usize = p.get("n", None)?;
            let seed: u64 = p.get("seed", Some(0))?;
            if kappa < 1.0 || n == 0 {
                return Err(RegistryError::BadParameter {
                    id: id.into(),
                    reason: "need kappa >= 1 and n >= 1".into(),
                });
            }
            make_quadratic_spectrum(&linear_spectrum(n, kappa), seed).oracle(id)
        }
        "nesterov-worst" => {
            let n: usize = p.get("n", None)?;
            let pp: usize = p.get("p", Some(n))?;
            let l: f64 = p.get("L", Some(1.0))?;
            if n < 2 || pp == 0 || pp > n || l <= 0.0 {
                return Err(RegistryError::BadParameter {
                    id: id.into(),
                    reason: "need n >= 2, 1 <= p <= n, L > 0".into(),
                });
            }
            NesterovWorstCase::new(n, pp, l).oracle()
        }
        "lsq" => {
            let terms: usize = p.get("terms", None)?;
            let n: usize = p.get("n", None)?;
            let seed: u64 = p.get("seed", Some(0))?;
            let fs = FiniteSumProblem::least_squares(terms, n, seed);
            let meta = fs.metadata();
            SmoothOracle::new(id, fs, meta)
        }
        "logistic" => {
            let samples: usize = p.get("samples", None)?;
            let n: usize = p.get("n", None)?;
            let seed: u64 = p.get("seed", Some(0))?;
            let reg: f64 = p.get("reg", Some(0.01))?;
            LogisticRidge::generate(samples, n, reg, seed).oracle(id)
        }
        "rosenbrock" => {
            let n: usize = p.get("n", Some(2))?;
            if n < 2 {
                return Err(RegistryError::BadParameter {
                    id: id.into(),
                    reason: "need n >= 2".into(),
                });
            }
            rosenbrock(n)
        }
        "scalar-multimodal" => scalar_multimodal(),
        "saddle-quartic" => saddle_quartic(),
        "saddle" => saddle_quadratic(),
        _ => return Err(RegistryError::Unknown(id.to_string())),
    };
    p.finish()?;
    Ok(oracle)
}
