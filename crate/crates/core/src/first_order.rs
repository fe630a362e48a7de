//! Gradient methods: fixed-step and backtracking descent, heavy-ball
//! momentum, Nesterov acceleration, Barzilai-Borwein, linear and nonlinear
//! conjugate gradients, perturbed descent, and a restart wrapper.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{dist, dot, norm, Matrix};
use crate::linesearch::{self, LineSearchError};
use crate::smooth::{SmoothError, SmoothOracle};
use crate::trace::{RowFlags, SolveTrace, Status, Stopwatch, TraceRow};

/// When to stop an iterative minimizer. Every rule is checked on each
/// logged iterate; `max_iter` bounds the number of steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StopRule {
    pub max_iter: usize,
    /// Stop once `‖∇f‖ ≤ grad_tol`.
    pub grad_tol: Option<f64>,
    /// Stop once `f − f* ≤ gap_tol` (needs `f*` in the oracle metadata).
    pub gap_tol: Option<f64>,
    /// Stop once `f ≤ f_target`.
    pub f_target: Option<f64>,
    /// End the run (as an iteration limit) on the first increase of `f`.
    pub stop_on_increase: bool,
    /// Keep every iterate in [`SolveTrace::iterates`].
    pub record_iterates: bool,
}

impl StopRule {
    pub fn iterations(max_iter: usize) -> Self {
        Self {
            max_iter,
            grad_tol: None,
            gap_tol: None,
            f_target: None,
            stop_on_increase: false,
            record_iterates: false,
        }
    }

    pub fn grad_tol(mut self, tol: f64) -> Self {
        self.grad_tol = Some(tol);
        self
    }

    pub fn gap_tol(mut self, tol: f64) -> Self {
        self.gap_tol = Some(tol);
        self
    }

    pub fn f_target(mut self, target: f64) -> Self {
        self.f_target = Some(target);
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_iterates = true;
        self
    }
}

/// Momentum methods abort once `f` exceeds this multiple of `1 + |f(x⁰)|`.
pub const DIVERGENCE_FACTOR: f64 = 1e8;

/// Shared trace bookkeeping and stop-rule evaluation.
pub(crate) struct Recorder<'a> {
    oracle: &'a SmoothOracle,
    stop: &'a StopRule,
    trace: SolveTrace,
    clock: Stopwatch,
    f0: Option<f64>,
    prev_f: Option<f64>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(method: &str, oracle: &'a SmoothOracle, stop: &'a StopRule) -> Self {
        Self {
            oracle,
            stop,
            trace: SolveTrace::new(method),
            clock: Stopwatch::start(),
            f0: None,
            prev_f: None,
        }
    }

    pub(crate) fn next_iter(&self) -> usize {
        self.trace.rows.len()
    }

    /// Logs iterate `x` and returns a final status if the run should end.
    pub(crate) fn log(
        &mut self,
        x: &[f64],
        f: f64,
        grad_norm: Option<f64>,
        mut row: TraceRow,
    ) -> Option<Status> {
        let iter = self.trace.rows.len();
        row.iter = iter;
        row.f = Some(f);
        row.grad_norm = grad_norm;
        row.calls = self.oracle.counts();
        row.time_ns = self.clock.elapsed_ns();
        self.trace.rows.push(row);
        if self.stop.record_iterates {
            self.trace.iterates.push(x.to_vec());
        }
        let f0 = *self.f0.get_or_insert(f);
        if !f.is_finite() || f > DIVERGENCE_FACTOR * (1.0 + f0.abs()) {
            return Some(Status::Divergence);
        }
        if let (Some(tol), Some(fs)) = (self.stop.gap_tol, self.oracle.meta.f_star) {
            if f - fs <= tol {
                return Some(Status::Converged);
            }
        }
        if let (Some(tol), Some(gn)) = (self.stop.grad_tol, grad_norm) {
            if gn <= tol {
                return Some(Status::Converged);
            }
        }
        if self.stop.f_target.is_some_and(|t| f <= t) {
            return Some(Status::Converged);
        }
        let increased = self.prev_f.is_some_and(|p| f > p);
        self.prev_f = Some(f);
        if (self.stop.stop_on_increase && increased) || iter >= self.stop.max_iter {
            return Some(Status::IterationLimit);
        }
        None
    }

    pub(crate) fn finish(mut self, x: Vec<f64>, f: f64, status: Status) -> SolveTrace {
        self.trace.status = status;
        self.trace.objective = Some(f);
        self.trace.x = x;
        self.trace
    }
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

fn row_step(step_len: f64) -> TraceRow {
    TraceRow {
        step_len: Some(step_len),
        ..Default::default()
    }
}

/// Fixed step `x⁺ = x − α∇f(x)`.
pub fn gd_constant(oracle: &SmoothOracle, x0: &[f64], alpha: f64, stop: &StopRule) -> SolveTrace {
    heavy_ball_impl("gd", oracle, x0, alpha, 0.0, stop)
}

/// Gradient descent with step `1/L`.
pub fn gd_fixed(oracle: &SmoothOracle, x0: &[f64], l: f64, stop: &StopRule) -> SolveTrace {
    assert!(l > 0.0, "Lipschitz constant must be positive");
    heavy_ball_impl("gd-fixed", oracle, x0, 1.0 / l, 0.0, stop)
}

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backtracking {
    pub alpha0: f64,
    pub c1: f64,
    pub shrink: f64,
}

impl Default for Backtracking {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            c1: 1e-4,
            shrink: 0.5,
        }
    }
}

/// Gradient descent with Armijo backtracking from `alpha0` each iteration.
/// Backtracks show up as extra `f` calls in the trace.
pub fn gd_backtracking(
    oracle: &SmoothOracle,
    x0: &[f64],
    params: Backtracking,
    stop: &StopRule,
) -> SolveTrace {
    assert!(
        params.c1 > 0.0 && params.c1 < 0.5,
        "c1 must lie in (0, 1/2)"
    );
    assert!(
        params.shrink > 0.0 && params.shrink < 1.0,
        "shrink must lie in (0, 1)"
    );
    let mut rec = Recorder::new("gd-backtracking", oracle, stop);
    let mut x = x0.to_vec();
    let mut f = oracle.f(&x);
    let mut step = TraceRow::default();
    loop {
        let g = oracle.grad(&x);
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), step) {
            return rec.finish(x, f, status);
        }
        match linesearch::backtracking(
            oracle,
            &x,
            f,
            &g,
            &neg(&g),
            params.alpha0,
            params.c1,
            params.shrink,
        ) {
            Ok(p) => {
                step = TraceRow {
                    alpha: Some(p.alpha),
                    ..row_step(p.alpha * norm(&g))
                };
                x = p.x;
                f = p.f;
            }
            Err(_) => return rec.finish(x, f, Status::LineSearchFail),
        }
    }
}

fn heavy_ball_impl(
    method: &str,
    oracle: &SmoothOracle,
    x0: &[f64],
    alpha: f64,
    beta: f64,
    stop: &StopRule,
) -> SolveTrace {
    let mut rec = Recorder::new(method, oracle, stop);
    let mut x = x0.to_vec();
    let mut x_prev = x0.to_vec();
    let mut row = TraceRow::default();
    loop {
        let f = oracle.f(&x);
        let g = oracle.grad(&x);
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), row) {
            return rec.finish(x, f, status);
        }
        let next: Vec<f64> = (0..x.len())
            .map(|i| x[i] - alpha * g[i] + beta * (x[i] - x_prev[i]))
            .collect();
        row = TraceRow {
            beta: Some(beta),
            ..row_step(dist(&next, &x))
        };
        x_prev = std::mem::replace(&mut x, next);
    }
}

/// `x⁺ = x − α∇f(x) + β(x − x⁻)` with `x⁻¹ = x⁰`.
pub fn heavy_ball(
    oracle: &SmoothOracle,
    x0: &[f64],
    alpha: f64,
    beta: f64,
    stop: &StopRule,
) -> SolveTrace {
    assert!(
        alpha > 0.0 && (0.0..1.0).contains(&beta),
        "need alpha > 0 and beta in [0, 1)"
    );
    heavy_ball_impl("heavy-ball", oracle, x0, alpha, beta, stop)
}

/// Polyak's heavy-ball parameters for `μ ≤ ∇²f ≤ L`:
/// `α = 4/(√L + √μ)²`, `β = ((√κ − 1)/(√κ + 1))²`.
pub fn polyak_params(l: f64, mu: f64) -> (f64, f64) {
    assert!(mu > 0.0 && mu <= l, "need 0 < mu <= L");
    let sk = (l / mu).sqrt();
    let alpha = 4.0 / (l.sqrt() + mu.sqrt()).powi(2);
    let beta = ((sk - 1.0) / (sk + 1.0)).powi(2);
    (alpha, beta)
}

/// Parameters of the gradient-corrected heavy ball:
/// `α = 1/(μ(√κ + 1)²)`, `β = (κ + 1)/(√κ + 1)²`.
///
/// These make the characteristic polynomial of the iteration on a quadratic
/// have a double root `√κ/(√κ + 1)` at curvature `μ` and a double root
/// `1/(√κ + 1)` at curvature `L`, so the contraction factor is
/// `1 − 1/(√κ + 1)` across the spectrum.
pub fn modified_hb_params(l: f64, mu: f64) -> (f64, f64) {
    assert!(mu > 0.0 && mu <= l, "need 0 < mu <= L");
    let kappa = l / mu;
    let d = (kappa.sqrt() + 1.0).powi(2);
    (1.0 / (mu * d), (kappa + 1.0) / d)
}

/// `x⁺ = x − α(2∇f(x) − ∇f(x⁻)) + β(x − x⁻)` with [`modified_hb_params`].
pub fn heavy_ball_modified(
    oracle: &SmoothOracle,
    x0: &[f64],
    l: f64,
    mu: f64,
    stop: &StopRule,
) -> SolveTrace {
    let (alpha, beta) = modified_hb_params(l, mu);
    heavy_ball_modified_with(oracle, x0, alpha, beta, stop)
}

/// The gradient-corrected heavy ball with explicit parameters.
pub fn heavy_ball_modified_with(
    oracle: &SmoothOracle,
    x0: &[f64],
    alpha: f64,
    beta: f64,
    stop: &StopRule,
) -> SolveTrace {
    let mut rec = Recorder::new("heavy-ball-modified", oracle, stop);
    let mut x = x0.to_vec();
    let mut x_prev = x0.to_vec();
    let mut g_prev: Option<Vec<f64>> = None;
    let mut row = TraceRow::default();
    loop {
        let f = oracle.f(&x);
        let g = oracle.grad(&x);
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), row) {
            return rec.finish(x, f, status);
        }
        let gp = g_prev.as_deref().unwrap_or(&g);
        let next: Vec<f64> = (0..x.len())
            .map(|i| x[i] - alpha * (2.0 * g[i] - gp[i]) + beta * (x[i] - x_prev[i]))
            .collect();
        row = TraceRow {
            beta: Some(beta),
            ..row_step(dist(&next, &x))
        };
        x_prev = std::mem::replace(&mut x, next);
        g_prev = Some(g);
    }
}

/// Nesterov's accelerated gradient: `y = x + β_k(x − x⁻)`, `x⁺ = y − ∇f(y)/L`.
///
/// With `mu = Some(μ)` the momentum is the constant `(√κ − 1)/(√κ + 1)`;
/// with `None` it follows `t₀ = 1`, `t_{k+1} = (1 + √(1 + 4t_k²))/2`,
/// `β_k = (t_k − 1)/t_{k+1}`. One gradient call per iteration, at `y`; the
/// logged gradient norm is `‖∇f(y_k)‖`.
pub fn nesterov(
    oracle: &SmoothOracle,
    x0: &[f64],
    l: f64,
    mu: Option<f64>,
    stop: &StopRule,
) -> SolveTrace {
    assert!(l > 0.0, "Lipschitz constant must be positive");
    let constant = mu.map(|m| {
        assert!(m > 0.0 && m <= l, "need 0 < mu <= L");
        let sk = (l / m).sqrt();
        (sk - 1.0) / (sk + 1.0)
    });
    nesterov_impl(oracle, x0, l, stop, |k, t| match constant {
        Some(b) if k > 0 => (b, t),
        Some(_) => (0.0, t),
        None => {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            ((t - 1.0) / t_next, t_next)
        }
    })
}

/// Nesterov iteration with an arbitrary momentum schedule
/// `(k, t) ↦ (β_k, t_next)`.
pub fn nesterov_impl(
    oracle: &SmoothOracle,
    x0: &[f64],
    l: f64,
    stop: &StopRule,
    mut schedule: impl FnMut(usize, f64) -> (f64, f64),
) -> SolveTrace {
    let method = "nesterov";
    let mut rec = Recorder::new(method, oracle, stop);
    let mut x = x0.to_vec();
    let mut x_prev = x0.to_vec();
    let mut t = 1.0;
    let mut row = TraceRow::default();
    for k in 0.. {
        let (beta, t_next) = schedule(k, t);
        t = t_next;
        let y: Vec<f64> = (0..x.len())
            .map(|i| x[i] + beta * (x[i] - x_prev[i]))
            .collect();
        let gy = oracle.grad(&y);
        let f = oracle.f(&x);
        if let Some(status) = rec.log(&x, f, Some(norm(&gy)), row) {
            return rec.finish(x, f, status);
        }
        let next: Vec<f64> = (0..x.len()).map(|i| y[i] - gy[i] / l).collect();
        row = TraceRow {
            beta: Some(beta),
            ..row_step(dist(&next, &x))
        };
        x_prev = std::mem::replace(&mut x, next);
    }
    unreachable!()
}

/// `V = f(x_k) − f* + (L/2)‖(x_k − x*) − ρ²(x_{k−1} − x*)‖²`, `ρ² = 1 − 1/√κ`.
pub fn lyapunov_value(
    oracle: &SmoothOracle,
    x_k: &[f64],
    x_prev: &[f64],
    kappa: f64,
) -> Result<f64, SmoothError> {
    let meta = &oracle.meta;
    let xs = meta
        .x_star
        .as_ref()
        .ok_or(SmoothError::MissingMetadata("x*"))?;
    let fs = meta.f_star.ok_or(SmoothError::MissingMetadata("f*"))?;
    let l = meta.l.ok_or(SmoothError::MissingMetadata("L"))?;
    let rho2 = 1.0 - 1.0 / kappa.sqrt();
    let w: Vec<f64> = (0..xs.len())
        .map(|i| (x_k[i] - xs[i]) - rho2 * (x_prev[i] - xs[i]))
        .collect();
    Ok(oracle.objective().value(x_k) - fs + 0.5 * l * dot(&w, &w))
}

/// Barzilai-Borwein: `α_k = sᵀy / yᵀy` without a line search.
///
/// The first step is `first_step`, else `1/L` from metadata, else `1e-4`.
/// When `yᵀy = 0` or the ratio is not a positive finite number, the previous
/// `α` is reused and the row is flagged `DEGENERATE_CURVATURE`.
pub fn barzilai_borwein(
    oracle: &SmoothOracle,
    x0: &[f64],
    first_step: Option<f64>,
    stop: &StopRule,
) -> SolveTrace {
    let mut alpha = first_step
        .or(oracle.meta.l.map(|l| 1.0 / l))
        .unwrap_or(1e-4);
    let mut rec = Recorder::new("bb", oracle, stop);
    let mut x = x0.to_vec();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut row = TraceRow::default();
    loop {
        let f = oracle.f(&x);
        let g = oracle.grad(&x);
        if let Some((xp, gp)) = &prev {
            let s: Vec<f64> = x.iter().zip(xp).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(gp).map(|(a, b)| a - b).collect();
            let yy = dot(&y, &y);
            let candidate = dot(&s, &y) / yy;
            if yy > 0.0 && candidate.is_finite() && candidate > 0.0 {
                alpha = candidate;
            } else {
                row.flags |= RowFlags::DEGENERATE_CURVATURE;
            }
        }
        row.alpha = Some(alpha);
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), row) {
            return rec.finish(x, f, status);
        }
        let next: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        row = row_step(alpha * norm(&g));
        prev = Some((std::mem::replace(&mut x, next), g));
    }
}

// ---- linear conjugate gradients ----

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CgError {
    /// `pᵀHp ≤ 0` along direction `p` at iterate `x`.
    #[error("non-positive curvature {curvature} detected at CG iteration {iteration}")]
    IndefiniteDetected {
        iteration: usize,
        curvature: f64,
        x: Vec<f64>,
        direction: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest `|pᵢᵀHpⱼ| / √(pᵢᵀHpᵢ · pⱼᵀHpⱼ)` over `i ≠ j`.
    pub max_conjugacy: f64,
    /// `x⁰, x¹, …`
    pub iterates: Vec<Vec<f64>>,
    /// Rows carry the model value `½xᵀHx + gᵀx`, residual norm, step length
    /// and `β`.
    pub trace: SolveTrace,
}

/// Linear CG on `Hx = −g` (minimizing `½xᵀHx + gᵀx`) until
/// `‖Hx + g‖ ≤ tol·‖g‖`.
pub fn linear_cg(
    h: &Matrix,
    g: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgResult, CgError> {
    linear_cg_op(|v| h.mul_vec(v), g, x0, tol, max_iter)
}

/// Matrix-free [`linear_cg`].
pub fn linear_cg_op(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    g: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgResult, CgError> {
    let clock = Stopwatch::start();
    let n = g.len();
    let mut x = x0.to_vec();
    let hx = apply(&x);
    let mut r: Vec<f64> = (0..n).map(|i| hx[i] + g[i]).collect();
    let gnorm = norm(g);
    let threshold = tol * if gnorm > 0.0 { gnorm } else { norm(&r) };
    let model = |x: &[f64], r: &[f64]| 0.5 * (dot(x, r) + dot(g, x));
    let mut p = neg(&r);
    let mut rr = dot(&r, &r);
    let mut trace = SolveTrace::new("linear-cg");
    let mut iterates = vec![x.clone()];
    let mut dirs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut max_conj: f64 = 0.0;
    let mut row = TraceRow::default();
    let mut k = 0;
    let converged = loop {
        row.iter = k;
        row.f = Some(model(&x, &r));
        row.grad_norm = Some(rr.sqrt());
        row.time_ns = clock.elapsed_ns();
        trace.rows.push(row);
        if rr.sqrt() <= threshold {
            break true;
        }
        if k >= max_iter {
            break false;
        }
        let hp = apply(&p);
        let curv = dot(&p, &hp);
        if curv <= 0.0 {
            return Err(CgError::IndefiniteDetected {
                iteration: k,
                curvature: curv,
                x,
                direction: p,
            });
        }
        for (q, hq, cq) in &dirs {
            let cross = dot(&p, hq).abs() / (curv * cq).sqrt();
            max_conj = max_conj.max(cross);
            let _ = q;
        }
        let alpha = rr / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] += alpha * hp[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        dirs.push((p.clone(), hp, curv));
        row = TraceRow {
            alpha: Some(alpha),
            beta: Some(beta),
            ..row_step(alpha * norm(&p))
        };
        for i in 0..n {
            p[i] = -r[i] + beta * p[i];
        }
        iterates.push(x.clone());
        k += 1;
    };
    trace.status = if converged {
        Status::Converged
    } else {
        Status::IterationLimit
    };
    trace.x = x.clone();
    trace.objective = Some(model(&x, &r));
    Ok(CgResult {
        x,
        iterations: k,
        converged,
        max_conjugacy: max_conj,
        iterates,
        trace,
    })
}

// ---- nonlinear conjugate gradients ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgVariant {
    FletcherReeves,
    PolakRibierePlus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearchKind {
    /// Strong Wolfe with sufficient-decrease `c1` and curvature `c2`.
    StrongWolfe { c1: f64, c2: f64 },
    /// Solve `φ′(α) = 0` to rounding.
    Exact,
}

/// `β_k` for the given variant from the new and previous gradients.
pub fn cg_beta(variant: CgVariant, g_new: &[f64], g_old: &[f64]) -> f64 {
    let denom = dot(g_old, g_old);
    match variant {
        CgVariant::FletcherReeves => dot(g_new, g_new) / denom,
        CgVariant::PolakRibierePlus => {
            let num: f64 = g_new.iter().zip(g_old).map(|(a, b)| a * (a - b)).sum();
            (num / denom).max(0.0)
        }
    }
}

/// Nonlinear CG: `p_k = −∇f(x_k) + β_k p_{k−1}`.
///
/// Should `p_k` fail to be a descent direction it is reset to `−∇f(x_k)` and
/// the row is flagged `RESTART`, so every step is along a descent direction.
pub fn nonlinear_cg(
    oracle: &SmoothOracle,
    x0: &[f64],
    variant: CgVariant,
    search: LineSearchKind,
    stop: &StopRule,
) -> SolveTrace {
    let name = match variant {
        CgVariant::FletcherReeves => "cg-fr",
        CgVariant::PolakRibierePlus => "cg-prplus",
    };
    let mut rec = Recorder::new(name, oracle, stop);
    let mut x = x0.to_vec();
    let mut f = oracle.f(&x);
    let mut g = oracle.grad(&x);
    let mut p = neg(&g);
    let mut prev_slope_alpha: Option<(f64, f64)> = None;
    let mut row = TraceRow::default();
    loop {
        let mut slope = dot(&g, &p);
        if slope >= 0.0 {
            p = neg(&g);
            slope = dot(&g, &p);
            row.flags |= RowFlags::RESTART;
            row.beta = Some(0.0);
        }
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), row) {
            return rec.finish(x, f, status);
        }
        let alpha_init = match prev_slope_alpha {
            None => 1.0 / norm(&g).max(f64::MIN_POSITIVE),
            Some((s_prev, a_prev)) => (a_prev * s_prev / slope).min(1e10),
        };
        let result = match search {
            LineSearchKind::StrongWolfe { c1, c2 } => {
                linesearch::strong_wolfe(oracle, &x, f, &g, &p, alpha_init, c1, c2)
            }
            LineSearchKind::Exact => linesearch::exact(oracle, &x, &g, &p, alpha_init),
        };
        let pt = match result {
            Ok(pt) => pt,
            Err(_) => return rec.finish(x, f, Status::LineSearchFail),
        };
        prev_slope_alpha = Some((slope, pt.alpha));
        let g_new = pt.g.expect("line search returns gradient");
        let beta = cg_beta(variant, &g_new, &g);
        row = TraceRow {
            alpha: Some(pt.alpha),
            beta: Some(beta),
            ..row_step(pt.alpha * norm(&p))
        };
        for (pi, gi) in p.iter_mut().zip(&g_new) {
            *pi = -gi + beta * *pi;
        }
        x = pt.x;
        f = pt.f;
        g = g_new;
    }
}

/// Default nonlinear-CG line search: strong Wolfe with `(1e-4, 0.1)`.
pub const CG_WOLFE: LineSearchKind = LineSearchKind::StrongWolfe { c1: 1e-4, c2: 0.1 };

// ---- perturbed gradient descent ----

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedGd {
    pub l: f64,
    /// Perturb when `‖∇f‖ ≤ eps_g`.
    pub eps_g: f64,
    pub radius: f64,
    /// Iterations allowed for the required decrease after a perturbation.
    pub escape_window: usize,
    pub seed: u64,
}

impl PerturbedGd {
    /// Decrease required within the window: `(ε_g²/L)·window/8`.
    pub fn decrease_threshold(&self) -> f64 {
        self.eps_g * self.eps_g / self.l * self.escape_window as f64 / 8.0
    }
}

fn uniform_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let nd = norm(&dir);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|d| d * r / nd).collect()
}

/// Gradient descent with step `1/L` that adds a uniform-ball perturbation
/// when the gradient is small. If `f` has not dropped by
/// [`PerturbedGd::decrease_threshold`] within `escape_window` iterations of
/// a perturbation, the pre-perturbation point is returned with status
/// `SecondOrderPoint`. A zero radius gives plain `gd_fixed`.
pub fn perturbed_gd(
    oracle: &SmoothOracle,
    x0: &[f64],
    params: PerturbedGd,
    stop: &StopRule,
) -> SolveTrace {
    if params.radius == 0.0 {
        let mut t = gd_fixed(oracle, x0, params.l, stop);
        t.method = "perturbed-gd".into();
        return t;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let threshold = params.decrease_threshold();
    let mut rec = Recorder::new("perturbed-gd", oracle, stop);
    let mut x = x0.to_vec();
    let mut pending: Option<(usize, f64, Vec<f64>)> = None;
    let mut row = TraceRow::default();
    loop {
        let f = oracle.f(&x);
        let g = oracle.grad(&x);
        let gn = norm(&g);
        let k = rec.next_iter();
        if let Some(status) = rec.log(&x, f, Some(gn), std::mem::take(&mut row)) {
            return rec.finish(x, f, status);
        }
        if let Some((kp, f_ref, x_ref)) = &pending {
            if k - kp >= params.escape_window {
                if f > f_ref - threshold {
                    let (f_ref, x_ref) = (*f_ref, x_ref.clone());
                    return rec.finish(x_ref, f_ref, Status::SecondOrderPoint);
                }
                pending = None;
            }
        }
        if pending.is_none() && gn <= params.eps_g {
            pending = Some((k, f, x.clone()));
            let xi = uniform_ball(&mut rng, x.len(), params.radius);
            for (a, b) in x.iter_mut().zip(&xi) {
                *a += b;
            }
            row = TraceRow {
                flags: RowFlags::PERTURBED,
                ..row_step(norm(&xi))
            };
            continue;
        }
        let next: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b / params.l).collect();
        row = row_step(gn / params.l);
        x = next;
    }
}

// ---- restarts ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartSchedule {
    /// Restart every `period` iterations.
    Fixed(usize),
    /// Restart whenever `f` increases.
    OnIncrease,
}

/// Re-runs `run(x_start, stop)` from the current iterate according to the
/// schedule and concatenates the traces with global iteration numbers. The
/// row at which each restart happens is flagged `RESTART`.
pub fn restart_wrapper(
    x0: &[f64],
    schedule: RestartSchedule,
    stop: &StopRule,
    mut run: impl FnMut(&[f64], &StopRule) -> SolveTrace,
) -> SolveTrace {
    let mut combined: Option<SolveTrace> = None;
    let mut x = x0.to_vec();
    let mut done = 0usize;
    let mut time_offset = 0u64;
    loop {
        let remaining = stop.max_iter - done;
        let mut inner = stop.clone();
        match schedule {
            RestartSchedule::Fixed(period) => inner.max_iter = period.min(remaining),
            RestartSchedule::OnIncrease => {
                inner.max_iter = remaining;
                inner.stop_on_increase = true;
            }
        }
        let seg = run(&x, &inner);
        let steps = seg.iterations();
        let status = seg.status;
        x = seg.x.clone();
        let total = match combined.as_mut() {
            None => {
                time_offset = seg.rows.last().map_or(0, |r| r.time_ns);
                combined = Some(seg);
                combined.as_mut().unwrap()
            }
            Some(acc) => {
                let skip = usize::from(!acc.rows.is_empty());
                for mut r in seg.rows.into_iter().skip(skip) {
                    r.iter += done;
                    r.time_ns += time_offset;
                    acc.rows.push(r);
                }
                acc.iterates.extend(seg.iterates.into_iter().skip(skip));
                time_offset = acc.rows.last().map_or(0, |r| r.time_ns);
                acc.status = seg.status;
                acc.x = seg.x;
                acc.objective = seg.objective;
                acc
            }
        };
        done += steps;
        let finished = status != Status::IterationLimit || done >= stop.max_iter || steps == 0;
        if finished {
            total.status = status;
            return combined.unwrap();
        }
        if let Some(r) = total.rows.last_mut() {
            r.flags |= RowFlags::RESTART;
        }
    }
}

impl From<LineSearchError> for Status {
    fn from(_: LineSearchError) -> Self {
        Status::LineSearchFail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::{linear_spectrum, make_quadratic_spectrum, rosenbrock, QuadraticProblem};

    fn scalar_quad(h: f64) -> SmoothOracle {
        QuadraticProblem::new(Matrix::from_diag(&[h]), vec![0.0]).oracle("q1")
    }

    #[test]
    fn gd_one_step_exact_and_geometric() {
        let o = scalar_quad(4.0);
        let t = gd_fixed(&o, &[3.0], 4.0, &StopRule::iterations(1));
        assert_eq!(t.x, vec![0.0]);
        let (mu, l) = (0.5, 2.0);
        let o = scalar_quad(mu);
        let t = gd_fixed(&o, &[1.0], l, &StopRule::iterations(10).recording());
        for (k, x) in t.iterates.iter().enumerate() {
            assert!((x[0] - (1.0 - mu / l).powi(k as i32)).abs() <= 1e-15);
        }
    }

    #[test]
    fn gd_descent_inequality() {
        let q = make_quadratic_spectrum(&linear_spectrum(10, 30.0), 3);
        let o = q.oracle("q");
        let l = 30.0;
        let t = gd_fixed(&o, &[1.0; 10], l, &StopRule::iterations(200));
        for w in t.rows.windows(2) {
            let (f0, g0, f1) = (w[0].f.unwrap(), w[0].grad_norm.unwrap(), w[1].f.unwrap());
            assert!(f1 <= f0 - g0 * g0 / (2.0 * l) + 1e-10 * (1.0 + f0.abs()));
        }
        assert_eq!(t.rows.last().unwrap().calls.grad, 201);
    }

    #[test]
    fn backtracking_behaviour() {
        let q = make_quadratic_spectrum(&[1.0, 5.0], 1);
        let o = q.oracle("q");
        let p = Backtracking {
            alpha0: 1.0 / 5.0,
            ..Default::default()
        };
        let t = gd_backtracking(&o, &[1.0, 1.0], p, &StopRule::iterations(20));
        // One f per iterate plus one per accepted trial: no backtracks.
        let last = t.rows.last().unwrap();
        assert_eq!(last.calls.f, 1 + 20);
        assert!(t.rows.windows(2).all(|w| w[1].f < w[0].f));

        let o = scalar_quad(1.0);
        let p = Backtracking {
            alpha0: 1e6,
            c1: 1e-4,
            shrink: 0.5,
        };
        let t = gd_backtracking(&o, &[1.0], p, &StopRule::iterations(5));
        for r in &t.rows[1..] {
            let a = r.alpha.unwrap();
            assert!(a > 0.0 && a < 2.0 * (1.0 - 1e-4));
        }
    }

    #[test]
    fn heavy_ball_reductions() {
        let q = make_quadratic_spectrum(&linear_spectrum(6, 20.0), 2);
        let o = q.oracle("q");
        let a = heavy_ball(
            &o,
            &[1.0; 6],
            0.04,
            0.0,
            &StopRule::iterations(50).recording(),
        );
        let b = gd_constant(&o, &[1.0; 6], 0.04, &StopRule::iterations(50).recording());
        assert_eq!(a.iterates, b.iterates);

        // Hand recursion on f = ½·3x².
        let o = scalar_quad(3.0);
        let (al, be) = (0.1, 0.5);
        let t = heavy_ball(&o, &[2.0], al, be, &StopRule::iterations(3).recording());
        let mut xs = vec![2.0, 2.0];
        for _ in 0..3 {
            let (x, xp) = (xs[xs.len() - 1], xs[xs.len() - 2]);
            xs.push(x - al * 3.0 * x + be * (x - xp));
        }
        for (k, it) in t.iterates.iter().enumerate() {
            assert!((it[0] - xs[k + 1]).abs() <= 1e-14);
        }
    }

    #[test]
    fn polyak_values() {
        let (a, b) = polyak_params(2.0, 2.0);
        assert!((a - 0.5).abs() < 1e-15 && b == 0.0);
        let (_, b) = polyak_params(100.0, 1.0);
        assert!((b - 81.0 / 121.0).abs() < 1e-15);
    }

    #[test]
    fn polyak_doubled_step_diverges() {
        let q = make_quadratic_spectrum(&linear_spectrum(10, 100.0), 7);
        let o = q.oracle("q");
        let (a, b) = polyak_params(100.0, 1.0);
        let ok = heavy_ball(
            &o,
            &[1.0; 10],
            a,
            b,
            &StopRule::iterations(3000).gap_tol(1e-10),
        );
        assert_eq!(ok.status, Status::Converged);
        let bad = heavy_ball(&o, &[1.0; 10], 2.0 * a, b, &StopRule::iterations(3000));
        assert_eq!(bad.status, Status::Divergence);
    }

    #[test]
    fn modified_heavy_ball_recursions() {
        let o = scalar_quad(2.0);
        let (a, b) = (0.05, 0.3);
        let t = heavy_ball_modified_with(&o, &[1.0], a, b, &StopRule::iterations(2).recording());
        // x¹ = x⁰ − a(2g⁰ − g⁰); x² = x¹ − a(2g¹ − g⁰) + b(x¹ − x⁰)
        let x0 = 1.0;
        let x1 = x0 - a * 2.0 * x0;
        let x2 = x1 - a * (2.0 * 2.0 * x1 - 2.0 * x0) + b * (x1 - x0);
        assert!((t.iterates[1][0] - x1).abs() <= 1e-14);
        assert!((t.iterates[2][0] - x2).abs() <= 1e-14);

        // Linear f: 2g − g = g.
        let lin = QuadraticProblem::new(Matrix::zeros(1, 1), vec![1.5]).oracle("lin");
        let t = heavy_ball_modified_with(&lin, &[0.0], a, b, &StopRule::iterations(3).recording());
        for k in 1..3 {
            let d_prev = t.iterates[k][0] - t.iterates[k - 1][0];
            let d = t.iterates[k + 1][0] - t.iterates[k][0];
            assert!((d - (-a * 1.5 + b * d_prev)).abs() <= 1e-14);
        }
    }

    #[test]
    fn nesterov_zero_momentum_is_gd() {
        let q = make_quadratic_spectrum(&linear_spectrum(5, 10.0), 5);
        let o = q.oracle("q");
        let a = nesterov_impl(
            &o,
            &[1.0; 5],
            10.0,
            &StopRule::iterations(30).recording(),
            |_, t| (0.0, t),
        );
        let b = gd_fixed(&o, &[1.0; 5], 10.0, &StopRule::iterations(30).recording());
        for (u, v) in a.iterates.iter().zip(&b.iterates) {
            assert!(dist(u, v) <= 1e-14);
        }
        assert_eq!(a.rows.last().unwrap().calls.grad, 31);
    }

    #[test]
    fn bb_scalar_quadratic_exact_after_one_step() {
        let o = scalar_quad(7.0);
        let t = barzilai_borwein(&o, &[1.0], Some(0.01), &StopRule::iterations(2).recording());
        assert!((t.rows[1].alpha.unwrap() - 1.0 / 7.0).abs() <= 1e-15);
        assert!(t.iterates[2][0].abs() <= 1e-15);
    }

    #[test]
    fn bb_nonmonotone_but_converges() {
        let q = QuadraticProblem::new(
            Matrix::from_diag(&[1.0, 10.0, 100.0, 1000.0]),
            vec![-1.0; 4],
        );
        let o = q.oracle("d");
        let t = barzilai_borwein(
            &o,
            &[5.0; 4],
            None,
            &StopRule::iterations(500).grad_tol(1e-8).recording(),
        );
        assert_eq!(t.status, Status::Converged);
        assert!(t.rows.windows(2).any(|w| w[1].f > w[0].f));
        for k in 2..t.iterates.len() {
            let s: Vec<f64> = (0..4)
                .map(|i| t.iterates[k - 1][i] - t.iterates[k - 2][i])
                .collect();
            let gk = q.h.mul_vec(&t.iterates[k - 1]);
            let gp = q.h.mul_vec(&t.iterates[k - 2]);
            let y: Vec<f64> = (0..4).map(|i| gk[i] - gp[i]).collect();
            let a = t.rows[k - 1].alpha.unwrap();
            assert!((a * dot(&y, &y) - dot(&s, &y)).abs() <= 1e-12 * dot(&s, &y).abs().max(1e-300));
        }
    }

    #[test]
    fn linear_cg_basics() {
        let r = linear_cg(
            &Matrix::identity(4),
            &[1.0, 2.0, 3.0, 4.0],
            &[0.0; 4],
            1e-12,
            10,
        )
        .unwrap();
        assert_eq!(r.iterations, 1);
        let eigs: Vec<f64> = (0..10).map(|i| [1.0, 4.0, 9.0][i % 3]).collect();
        let q = make_quadratic_spectrum(&eigs, 3);
        let r = linear_cg(&q.h, &q.g, &[0.0; 10], 1e-10, 50).unwrap();
        assert!(r.iterations <= 3 && r.converged);
        let bad = linear_cg(
            &Matrix::from_diag(&[1.0, -1.0]),
            &[1.0, 1.0],
            &[0.0, 0.0],
            1e-10,
            5,
        );
        assert!(matches!(bad, Err(CgError::IndefiniteDetected { .. })));
    }

    #[test]
    fn nonlinear_cg_quadratic_coincidence_and_beta() {
        let g = [1.0, -2.0];
        assert_eq!(cg_beta(CgVariant::PolakRibierePlus, &g, &g), 0.0);
        let q = make_quadratic_spectrum(&linear_spectrum(10, 50.0), 8);
        let o = q.oracle("q");
        let x0 = vec![0.0; 10];
        let lin = linear_cg(&q.h, &q.g, &x0, 1e-12, 10).unwrap();
        for v in [CgVariant::FletcherReeves, CgVariant::PolakRibierePlus] {
            let t = nonlinear_cg(
                &o,
                &x0,
                v,
                LineSearchKind::Exact,
                &StopRule::iterations(10).recording(),
            );
            for (a, b) in t.iterates.iter().zip(&lin.iterates) {
                assert!(dist(a, b) <= 1e-8, "{v:?}");
            }
        }
    }

    #[test]
    fn nonlinear_cg_rosenbrock() {
        let o = rosenbrock(2);
        let t = nonlinear_cg(
            &o,
            &[-1.2, 1.0],
            CgVariant::PolakRibierePlus,
            CG_WOLFE,
            &StopRule::iterations(5000).grad_tol(1e-5),
        );
        assert_eq!(t.status, Status::Converged, "{:?}", t.status);
    }

    #[test]
    fn restart_fixed_positions() {
        let q = make_quadratic_spectrum(&linear_spectrum(5, 100.0), 1);
        let o = q.oracle("q");
        let stop = StopRule::iterations(100);
        let run = |x: &[f64], s: &StopRule| nesterov(&o, x, 100.0, None, s);
        let plain = run(&[1.0; 5], &stop);
        let wrapped = restart_wrapper(&[1.0; 5], RestartSchedule::Fixed(usize::MAX), &stop, run);
        assert_eq!(plain.x, wrapped.x);
        let o2 = o.fresh();
        let wrapped = restart_wrapper(&[1.0; 5], RestartSchedule::Fixed(30), &stop, |x, s| {
            nesterov(&o2, x, 100.0, None, s)
        });
        let restarts: Vec<usize> = wrapped
            .rows
            .iter()
            .filter(|r| r.flags.contains(RowFlags::RESTART))
            .map(|r| r.iter)
            .collect();
        assert_eq!(restarts, vec![30, 60, 90]);
        assert!(wrapped.rows.iter().enumerate().all(|(i, r)| r.iter == i));
        assert_eq!(wrapped.iterations(), 100);
    }

    #[test]
    fn perturbed_gd_zero_radius_is_gd() {
        let q = make_quadratic_spectrum(&linear_spectrum(4, 10.0), 2);
        let o = q.oracle("q");
        let p = PerturbedGd {
            l: 10.0,
            eps_g: 1e-3,
            radius: 0.0,
            escape_window: 10,
            seed: 1,
        };
        let a = perturbed_gd(&o, &[1.0; 4], p, &StopRule::iterations(40).recording());
        let b = gd_fixed(
            &o.fresh(),
            &[1.0; 4],
            10.0,
            &StopRule::iterations(40).recording(),
        );
        assert_eq!(a.iterates, b.iterates);
    }

    #[test]
    fn perturbed_gd_stops_near_minimizer() {
        let q = make_quadratic_spectrum(&linear_spectrum(4, 10.0), 2);
        let o = q.oracle("q");
        let p = PerturbedGd {
            l: 10.0,
            eps_g: 1e-4,
            radius: 1e-3,
            escape_window: 50,
            seed: 3,
        };
        let t = perturbed_gd(&o, &[1.0; 4], p, &StopRule::iterations(10_000));
        assert_eq!(t.status, Status::SecondOrderPoint);
        let perturbations = t
            .rows
            .iter()
            .filter(|r| r.flags.contains(RowFlags::PERTURBED))
            .count();
        assert_eq!(perturbations, 1);
        assert!(dist(&t.x, q.meta.x_star.as_ref().unwrap()) <= 1e-4);
    }
}
