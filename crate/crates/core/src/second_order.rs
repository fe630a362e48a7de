//! Newton-family minimizers: pure Newton, trust-region Newton-CG, cubic
//! regularization, BFGS and L-BFGS.

use std::collections::VecDeque;

use thiserror::Error;

use crate::first_order::{Recorder, StopRule};
use crate::linalg::{dot, norm, symmetric_eigen, Cholesky, Lu, Matrix};
use crate::linesearch::{self, LineSearchPoint};
use crate::smooth::{min_curvature, SmoothOracle};
use crate::trace::{RowFlags, SolveTrace, Status, TraceRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SecondOrderError {
    #[error("method needs Hessians but the oracle provides none")]
    MissingHessian,
    #[error("method needs Hessian-vector products but the oracle provides none")]
    MissingHvp,
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
}

fn axpy_new(x: &[f64], a: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect()
}

fn row(step: &[f64]) -> TraceRow {
    TraceRow {
        step_len: Some(norm(step)),
        ..Default::default()
    }
}

/// Second-order stopping tolerances derived from `stop.grad_tol = ε`:
/// `ε_g = ε`, `ε_H = √ε`.
fn second_order_tols(stop: &StopRule) -> Option<(f64, f64)> {
    stop.grad_tol.map(|e| (e, e.sqrt()))
}

/// Stop rule with the gradient test removed, for methods that apply their
/// own second-order test.
fn without_grad_tol(stop: &StopRule) -> StopRule {
    StopRule {
        grad_tol: None,
        ..stop.clone()
    }
}

// ---- pure Newton ----

/// Pure Newton with unit steps: solve `∇²f(x)s = −∇f(x)`.
///
/// A Hessian that fails Cholesky is flagged `NOT_POSITIVE_DEFINITE` and the
/// system is solved by LU instead; a singular Hessian ends the run with
/// `NumericalBreakdown`.
pub fn newton_solve(
    oracle: &SmoothOracle,
    x0: &[f64],
    stop: &StopRule,
) -> Result<SolveTrace, SecondOrderError> {
    if !oracle.has_hessian() {
        return Err(SecondOrderError::MissingHessian);
    }
    let mut rec = Recorder::new("newton", oracle, stop);
    let mut x = x0.to_vec();
    let mut pending = TraceRow::default();
    loop {
        let f = oracle.f(&x);
        let g = oracle.grad(&x);
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), pending) {
            return Ok(rec.finish(x, f, status));
        }
        let h = oracle.hess(&x).expect("Hessian advertised");
        let mut flags = RowFlags::empty();
        let step = match Cholesky::factor(&h) {
            Ok(c) => c.solve(&g),
            Err(_) => {
                flags |= RowFlags::NOT_POSITIVE_DEFINITE;
                match Lu::factor(&h) {
                    Ok(lu) => lu.solve(&g),
                    Err(_) => return Ok(rec.finish(x, f, Status::NumericalBreakdown)),
                }
            }
        };
        let s: Vec<f64> = step.iter().map(|v| -v).collect();
        pending = TraceRow { flags, ..row(&s) };
        x = axpy_new(&x, 1.0, &s);
    }
}

// ---- trust region ----

#[derive(Debug, Clone, PartialEq)]
pub struct TrSubproblemResult {
    pub step: Vec<f64>,
    /// `m(0) − m(s)` for `m(s) = gᵀs + ½sᵀHs`.
    pub predicted_reduction: f64,
    pub boundary: bool,
    pub negative_curvature: bool,
}

/// Relative residual at which the interior CG solve counts as exact.
pub const TR_CG_TOL: f64 = 1e-12;

/// Nonnegative `τ` values with `‖s + τp‖ = Δ`, as `(smaller, larger)`.
fn boundary_roots(s: &[f64], p: &[f64], delta: f64) -> (f64, f64) {
    let a = dot(p, p);
    let b = 2.0 * dot(s, p);
    let c = dot(s, s) - delta * delta;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    // Stable quadratic formula; c ≤ 0 so the roots have opposite signs.
    let q = -0.5 * (b + b.signum() * disc);
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    (r1.min(r2), r1.max(r2))
}

/// Steihaug CG on `min gᵀs + ½sᵀHs` subject to `‖s‖ ≤ Δ`.
///
/// Starts at `s = 0`. Stops at the boundary crossing, at the boundary along
/// the first direction of non-positive curvature, or at the interior solution
/// once `‖Hs + g‖ ≤ TR_CG_TOL·‖g‖`.
pub fn tr_subproblem_cg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    g: &[f64],
    delta: f64,
) -> TrSubproblemResult {
    assert!(delta > 0.0, "trust-region radius must be positive");
    let n = g.len();
    let gnorm = norm(g);
    let mut s = vec![0.0; n];
    if gnorm == 0.0 {
        return TrSubproblemResult {
            step: s,
            predicted_reduction: 0.0,
            boundary: false,
            negative_curvature: false,
        };
    }
    // r = Hs + g, so m(s) = ½(gᵀs + rᵀs).
    let mut r = g.to_vec();
    let mut p: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut rr = dot(&r, &r);
    let model = |s: &[f64], r: &[f64]| 0.5 * (dot(g, s) + dot(r, s));
    let finish = |s: Vec<f64>, r: &[f64], boundary, negative_curvature| {
        let pred = -model(&s, r);
        TrSubproblemResult {
            step: s,
            predicted_reduction: pred.max(0.0),
            boundary,
            negative_curvature,
        }
    };
    for _ in 0..(2 * n).max(10) {
        let hp = apply(&p);
        let curv = dot(&p, &hp);
        if curv <= 0.0 {
            let (t1, t2) = boundary_roots(&s, &p, delta);
            // Pick the root with the lower model value.
            let eval = |t: f64| {
                let st = axpy_new(&s, t, &p);
                let rt = axpy_new(&r, t, &hp);
                (model(&st, &rt), st, rt)
            };
            let (m1, s1, r1) = eval(t1);
            let (m2, s2, r2) = eval(t2);
            return if m1 < m2 {
                finish(s1, &r1, true, true)
            } else {
                finish(s2, &r2, true, true)
            };
        }
        let alpha = rr / curv;
        let s_next = axpy_new(&s, alpha, &p);
        if norm(&s_next) >= delta {
            let (_, t) = boundary_roots(&s, &p, delta);
            let sb = axpy_new(&s, t, &p);
            let rb = axpy_new(&r, t, &hp);
            return finish(sb, &rb, true, false);
        }
        s = s_next;
        for i in 0..n {
            r[i] += alpha * hp[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= TR_CG_TOL * gnorm {
            return finish(s, &r, false, false);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = -r[i] + beta * p[i];
        }
    }
    finish(s, &r, false, false)
}

/// Radius below which the trust-region method gives up.
pub const TR_MIN_RADIUS: f64 = 1e-16;

/// Trust-region Newton-CG.
///
/// Steps accept when `ρ = actual/predicted > 0.1`; the radius doubles when
/// `ρ > 0.75` on a boundary step and shrinks by 4 when `ρ < 0.1`. With
/// `stop.grad_tol = ε` the run converges when `‖∇f‖ ≤ ε` and
/// `λ_min(∇²f) ≥ −√ε`; at a point with small gradient and more negative
/// curvature the step follows the minimum-curvature eigenvector to the
/// boundary. Works from Hessian-vector products alone when no Hessian is
/// available.
///
/// Row `k + 1` records the trial step from `x_k`: its length, the radius it
/// was computed under (`delta_or_m`), `ρ`, and the flags `BOUNDARY`,
/// `NEGATIVE_CURVATURE` and `REJECTED`.
pub fn trust_region_newton(
    oracle: &SmoothOracle,
    x0: &[f64],
    delta0: f64,
    stop: &StopRule,
) -> Result<SolveTrace, SecondOrderError> {
    if !(delta0 > 0.0) {
        return Err(SecondOrderError::InvalidParams(
            "initial radius must be positive",
        ));
    }
    if !oracle.has_hessian() && !oracle.has_hvp() {
        return Err(SecondOrderError::MissingHvp);
    }
    let tols = second_order_tols(stop);
    let inner_stop = without_grad_tol(stop);
    let mut rec = Recorder::new("trust-region", oracle, &inner_stop);
    let mut x = x0.to_vec();
    let mut f = oracle.f(&x);
    let mut g = oracle.grad(&x);
    let mut h = if oracle.has_hessian() {
        oracle.hess(&x)
    } else {
        None
    };
    let mut delta = delta0;
    let mut pending = TraceRow::default();
    loop {
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), std::mem::take(&mut pending)) {
            return Ok(rec.finish(x, f, status));
        }
        let mut escape = None;
        if let Some((eps_g, eps_h)) = tols {
            if norm(&g) <= eps_g {
                let (lmin, v) =
                    min_curvature(oracle, &x).map_err(|_| SecondOrderError::MissingHvp)?;
                if lmin >= -eps_h {
                    return Ok(rec.finish(x, f, Status::Converged));
                }
                escape = Some((lmin, v));
            }
        }
        let sub = match escape {
            Some((lmin, v)) => {
                let sign = if dot(&g, &v) > 0.0 { -1.0 } else { 1.0 };
                let step: Vec<f64> = v.iter().map(|vi| sign * delta * vi / norm(&v)).collect();
                let pred = -(dot(&g, &step) + 0.5 * lmin * delta * delta);
                TrSubproblemResult {
                    step,
                    predicted_reduction: pred,
                    boundary: true,
                    negative_curvature: true,
                }
            }
            None => match &h {
                Some(hm) => tr_subproblem_cg(|v| hm.mul_vec(v), &g, delta),
                None => tr_subproblem_cg(|v| oracle.hvp(&x, v).expect("hvp advertised"), &g, delta),
            },
        };
        let mut flags = RowFlags::empty();
        if sub.boundary {
            flags |= RowFlags::BOUNDARY;
        }
        if sub.negative_curvature {
            flags |= RowFlags::NEGATIVE_CURVATURE;
        }
        let x_trial = axpy_new(&x, 1.0, &sub.step);
        let f_trial = oracle.f(&x_trial);
        let actual = f - f_trial;
        let rho = if sub.predicted_reduction > 0.0 {
            actual / sub.predicted_reduction
        } else {
            f64::NEG_INFINITY
        };
        pending = TraceRow {
            delta_or_m: Some(delta),
            rho_ratio: rho.is_finite().then_some(rho),
            ..row(&sub.step)
        };
        if rho > 0.1 && actual > 0.0 {
            x = x_trial;
            f = f_trial;
            g = oracle.grad(&x);
            if h.is_some() {
                h = oracle.hess(&x);
            }
        } else {
            flags |= RowFlags::REJECTED;
        }
        pending.flags = flags;
        if rho < 0.1 {
            delta *= 0.25;
        } else if rho > 0.75 && sub.boundary {
            delta *= 2.0;
        }
        if delta < TR_MIN_RADIUS {
            rec.log(&x, f, Some(norm(&g)), pending);
            return Ok(rec.finish(x, f, Status::StalledRadius));
        }
    }
}

// ---- cubic regularization ----

#[derive(Debug, Clone, PartialEq)]
pub struct CubicStep {
    pub step: Vec<f64>,
    /// Model value `gᵀs + ½sᵀHs + (M/6)‖s‖³` (relative to `f(x)`).
    pub model_value: f64,
    pub sigma: f64,
    pub hard_case: bool,
}

const SECULAR_MAX_ITERS: usize = 500;

/// Global minimizer of `gᵀs + ½sᵀHs + (M/6)‖s‖³`.
///
/// Solves `(H + σI)s = −g` with `σ = (M/2)‖s‖` and `H + σI ⪰ 0` by
/// eigendecomposition and safeguarded Newton/bisection on σ. In the hard
/// case a minimum-eigenvector component brings `‖s‖` up to `2σ/M`. Returns
/// `None` if the root-find does not converge.
pub fn cubic_subproblem(h: &Matrix, g: &[f64], m: f64) -> Option<CubicStep> {
    assert!(m > 0.0, "cubic weight must be positive");
    let n = g.len();
    let eig = symmetric_eigen(h);
    let lam = &eig.values;
    let gt = eig.vectors.mul_t_vec(g);
    let lmin = lam.first().copied().unwrap_or(0.0);
    let sigma_low = (-lmin).max(0.0);
    let scale = lam.iter().fold(1.0f64, |a, l| a.max(l.abs()));
    let step_norm = |sigma: f64| -> (f64, f64) {
        // (‖s(σ)‖, d‖s‖/dσ)
        let mut ss = 0.0;
        let mut ds = 0.0;
        for i in 0..n {
            let d = lam[i] + sigma;
            if d > 0.0 {
                let c = gt[i] / d;
                ss += c * c;
                ds -= c * c / d;
            } else if gt[i] != 0.0 {
                return (f64::INFINITY, f64::NEG_INFINITY);
            }
        }
        let sn = ss.sqrt();
        (sn, if sn > 0.0 { ds / sn } else { 0.0 })
    };
    let assemble = |sigma: f64, extra: f64| -> Vec<f64> {
        let mut coef: Vec<f64> = (0..n)
            .map(|i| {
                let d = lam[i] + sigma;
                if d > 1e-14 * scale {
                    -gt[i] / d
                } else {
                    0.0
                }
            })
            .collect();
        if extra != 0.0 {
            coef[0] += extra;
        }
        eig.vectors.mul_vec(&coef)
    };
    let model = |s: &[f64]| dot(g, s) + 0.5 * h.quad_form(s) + m / 6.0 * norm(s).powi(3);

    // Hard case: the eigencomponent along λ_min is (numerically) absent and
    // the shifted step is already too short at σ_low.
    let near_min: f64 = (0..n)
        .filter(|&i| lam[i] - lmin <= 1e-12 * scale)
        .map(|i| gt[i] * gt[i])
        .sum();
    let gnorm = norm(g);
    if lmin <= 0.0 && near_min.sqrt() <= 1e-12 * gnorm.max(f64::MIN_POSITIVE) {
        let partial: f64 = (0..n)
            .filter(|&i| lam[i] - lmin > 1e-12 * scale)
            .map(|i| (gt[i] / (lam[i] + sigma_low)).powi(2))
            .sum::<f64>()
            .sqrt();
        let target = 2.0 * sigma_low / m;
        if partial <= target {
            let tau = (target * target - partial * partial).max(0.0).sqrt();
            let s = assemble(sigma_low, tau);
            return Some(CubicStep {
                model_value: model(&s),
                step: s,
                sigma: sigma_low,
                hard_case: true,
            });
        }
    }
    if gnorm == 0.0 {
        let s = vec![0.0; n];
        return Some(CubicStep {
            model_value: 0.0,
            step: s,
            sigma: 0.0,
            hard_case: false,
        });
    }
    // φ(σ) = ‖s(σ)‖ − 2σ/M is decreasing on (σ_low, ∞) with a unique root.
    let phi = |sigma: f64| {
        let (sn, d) = step_norm(sigma);
        (sn - 2.0 * sigma / m, d - 2.0 / m)
    };
    let mut lo = sigma_low;
    let mut hi = sigma_low + (0.5 * m * gnorm).sqrt() + f64::MIN_POSITIVE;
    while phi(hi).0 > 0.0 {
        hi = 2.0 * hi + 1.0;
    }
    let mut sigma = hi;
    let mut converged = false;
    for _ in 0..SECULAR_MAX_ITERS {
        let (v, d) = phi(sigma);
        if v.abs() <= 1e-15 * (2.0 * sigma / m).max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        if v > 0.0 {
            lo = sigma;
        } else {
            hi = sigma;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            converged = true;
            break;
        }
        let newton = sigma - v / d;
        sigma = if d < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    if !converged {
        return None;
    }
    let s = assemble(sigma, 0.0);
    Some(CubicStep {
        model_value: model(&s),
        step: s,
        sigma,
        hard_case: false,
    })
}

/// Cubic-regularized Newton: each step minimizes
/// `t(s) = f(x) + gᵀs + ½sᵀ∇²f s + (M/6)‖s‖³` globally.
///
/// In adaptive mode a step with `f(x + s) > t(s)` is rejected (flagged
/// `REJECTED`) and `M` doubles; an accepted step halves `M`. In fixed mode
/// every step is taken. With `stop.grad_tol = ε` the run converges when
/// `‖∇f‖ ≤ ε` and `λ_min ≥ −√ε`. Row `k + 1` records the trial step, the `M`
/// it used (`delta_or_m`), and `f(x+s) − t(s)` in `gap`.
pub fn cubic_reg(
    oracle: &SmoothOracle,
    x0: &[f64],
    m0: f64,
    adaptive: bool,
    stop: &StopRule,
) -> Result<SolveTrace, SecondOrderError> {
    if !oracle.has_hessian() {
        return Err(SecondOrderError::MissingHessian);
    }
    if !(m0 > 0.0) {
        return Err(SecondOrderError::InvalidParams("M0 must be positive"));
    }
    const M_FLOOR: f64 = 1e-12;
    let tols = second_order_tols(stop);
    let inner_stop = without_grad_tol(stop);
    let mut rec = Recorder::new("cubic-reg", oracle, &inner_stop);
    let mut x = x0.to_vec();
    let mut f = oracle.f(&x);
    let mut g = oracle.grad(&x);
    let mut h = oracle.hess(&x).expect("Hessian advertised");
    let mut m = m0;
    let mut pending = TraceRow::default();
    loop {
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), std::mem::take(&mut pending)) {
            return Ok(rec.finish(x, f, status));
        }
        if let Some((eps_g, eps_h)) = tols {
            if norm(&g) <= eps_g && symmetric_eigen(&h).values[0] >= -eps_h {
                return Ok(rec.finish(x, f, Status::Converged));
            }
        }
        let Some(sub) = cubic_subproblem(&h, &g, m) else {
            return Ok(rec.finish(x, f, Status::SubproblemFail));
        };
        let x_trial = axpy_new(&x, 1.0, &sub.step);
        let f_trial = oracle.f(&x_trial);
        let excess = f_trial - (f + sub.model_value);
        pending = TraceRow {
            delta_or_m: Some(m),
            gap: Some(excess),
            ..row(&sub.step)
        };
        if sub.hard_case {
            pending.flags |= RowFlags::NEGATIVE_CURVATURE;
        }
        if adaptive && excess > 0.0 {
            pending.flags |= RowFlags::REJECTED;
            m *= 2.0;
            continue;
        }
        x = x_trial;
        f = f_trial;
        g = oracle.grad(&x);
        h = oracle.hess(&x).expect("Hessian advertised");
        if adaptive {
            m = (0.5 * m).max(M_FLOOR);
        }
    }
}

// ---- quasi-Newton ----

/// Step-length rule for BFGS and L-BFGS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QnLineSearch {
    StrongWolfe {
        c1: f64,
        c2: f64,
    },
    Exact,
    /// No search: the first step uses `first_step`, later ones `α = 1`.
    Unit {
        first_step: f64,
    },
}

/// Default quasi-Newton line search: strong Wolfe with `(1e-4, 0.9)`.
pub const QN_WOLFE: QnLineSearch = QnLineSearch::StrongWolfe { c1: 1e-4, c2: 0.9 };

/// Pairs with `sᵀy ≤ SKIP_TOL·‖s‖‖y‖` are not used for updates.
pub const SKIP_TOL: f64 = 1e-12;

/// A quasi-Newton run with per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct QnRun {
    pub trace: SolveTrace,
    /// Search directions, one per step taken.
    pub directions: Vec<Vec<f64>>,
    /// `‖H_{k+1}yᵏ − sᵏ‖ / ‖sᵏ‖` after each applied update (BFGS only).
    pub secant_residuals: Vec<f64>,
    /// Final inverse-Hessian approximation (BFGS only).
    pub inverse_hessian: Option<Matrix>,
    pub skipped_updates: usize,
    /// Floating-point multiply-adds spent computing directions.
    pub direction_flops: u64,
}

enum StepOutcome {
    Taken(LineSearchPoint),
    Failed,
}

fn take_step(
    oracle: &SmoothOracle,
    x: &[f64],
    f: f64,
    g: &[f64],
    d: &[f64],
    search: QnLineSearch,
    first: bool,
) -> StepOutcome {
    let alpha_init = if first { (1.0 / norm(g)).min(1.0) } else { 1.0 };
    let res = match search {
        QnLineSearch::StrongWolfe { c1, c2 } => {
            linesearch::strong_wolfe(oracle, x, f, g, d, alpha_init, c1, c2)
        }
        QnLineSearch::Exact => linesearch::exact(oracle, x, g, d, alpha_init),
        QnLineSearch::Unit { first_step } => {
            let alpha = if first { first_step } else { 1.0 };
            let xt = axpy_new(x, alpha, d);
            let ft = oracle.f(&xt);
            let gt = oracle.grad(&xt);
            Ok(LineSearchPoint {
                alpha,
                x: xt,
                f: ft,
                g: Some(gt),
                evaluations: 1,
            })
        }
    };
    match res {
        Ok(p) => StepOutcome::Taken(p),
        Err(_) => StepOutcome::Failed,
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// BFGS with the default strong-Wolfe search; see [`bfgs_with`].
pub fn bfgs(oracle: &SmoothOracle, x0: &[f64], stop: &StopRule) -> SolveTrace {
    bfgs_with(oracle, x0, QN_WOLFE, stop).trace
}

/// BFGS on the inverse Hessian:
/// `H⁺ = (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ`, `ρ = 1/yᵀs`.
///
/// `H₀ = I`, rescaled to `(yᵀs/yᵀy)·I` before the first update. Updates with
/// `sᵀy ≤ SKIP_TOL·‖s‖‖y‖` are skipped and flagged `SKIPPED_UPDATE`.
pub fn bfgs_with(
    oracle: &SmoothOracle,
    x0: &[f64],
    search: QnLineSearch,
    stop: &StopRule,
) -> QnRun {
    let n = x0.len();
    let mut rec = Recorder::new("bfgs", oracle, stop);
    let mut x = x0.to_vec();
    let mut f = oracle.f(&x);
    let mut g = oracle.grad(&x);
    let mut hinv = Matrix::identity(n);
    let mut updated = false;
    let mut run = QnRun {
        trace: SolveTrace::new("bfgs"),
        directions: Vec::new(),
        secant_residuals: Vec::new(),
        inverse_hessian: None,
        skipped_updates: 0,
        direction_flops: 0,
    };
    let mut pending = TraceRow::default();
    let status = loop {
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), std::mem::take(&mut pending)) {
            break status;
        }
        let mut d: Vec<f64> = hinv.mul_vec(&g).iter().map(|v| -v).collect();
        run.direction_flops += (n * n) as u64;
        if dot(&d, &g) >= 0.0 {
            hinv = Matrix::identity(n);
            updated = false;
            d = g.iter().map(|v| -v).collect();
            pending.flags |= RowFlags::RESTART;
        }
        let first = run.directions.is_empty();
        let StepOutcome::Taken(p) = take_step(oracle, &x, f, &g, &d, search, first) else {
            break Status::LineSearchFail;
        };
        let g_new = p.g.clone().expect("search returns gradient");
        let s = sub(&p.x, &x);
        let y = sub(&g_new, &g);
        let sy = dot(&s, &y);
        pending = TraceRow {
            alpha: Some(p.alpha),
            flags: pending.flags,
            ..row(&s)
        };
        if sy > SKIP_TOL * norm(&s) * norm(&y) {
            if !updated {
                let gamma = sy / dot(&y, &y);
                hinv = Matrix::identity(n);
                hinv.add_diagonal(gamma - 1.0);
                updated = true;
            }
            let rho = 1.0 / sy;
            let hy = hinv.mul_vec(&y);
            let yhy = dot(&y, &hy);
            let c = rho * rho * yhy + rho;
            for i in 0..n {
                for j in 0..n {
                    hinv[(i, j)] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + c * s[i] * s[j];
                }
            }
            let r = sub(&hinv.mul_vec(&y), &s);
            run.secant_residuals.push(norm(&r) / norm(&s));
        } else {
            pending.flags |= RowFlags::SKIPPED_UPDATE;
            run.skipped_updates += 1;
        }
        run.directions.push(d);
        x = p.x;
        f = p.f;
        g = g_new;
    };
    run.trace = rec.finish(x, f, status);
    run.inverse_hessian = Some(hinv);
    run
}

/// Curvature pairs kept by L-BFGS.
#[derive(Debug, Clone, Default)]
pub struct LbfgsMemory {
    capacity: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    /// Most recent accepted pair, kept for the initial scaling even when the
    /// capacity is zero.
    last: Option<(Vec<f64>, Vec<f64>)>,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let rho = 1.0 / dot(&s, &y);
        if self.capacity > 0 {
            if self.pairs.len() == self.capacity {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s.clone(), y.clone(), rho));
        }
        self.last = Some((s, y));
    }

    /// Scaling `γ = sᵀy/yᵀy` of the newest pair, or 1 with no pairs.
    pub fn gamma(&self) -> f64 {
        self.last
            .as_ref()
            .map_or(1.0, |(s, y)| dot(s, y) / dot(y, y))
    }

    /// Two-loop recursion: returns `H·g` and the multiply-add count.
    pub fn apply(&self, g: &[f64]) -> (Vec<f64>, u64) {
        let n = g.len() as u64;
        let mut q = g.to_vec();
        let mut a = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let ai = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= ai * yi;
            }
            a.push(ai);
        }
        let gamma = self.gamma();
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), ai) in self.pairs.iter().zip(a.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (ai - b) * si;
            }
        }
        (q, n * (4 * self.pairs.len() as u64 + 1))
    }
}

/// L-BFGS with the default strong-Wolfe search; see [`lbfgs_with`].
pub fn lbfgs(oracle: &SmoothOracle, x0: &[f64], m: usize, stop: &StopRule) -> SolveTrace {
    lbfgs_with(oracle, x0, m, QN_WOLFE, stop).trace
}

/// L-BFGS with memory `m`: the direction applies the last `m` updates to the
/// seed `(sᵀy/yᵀy)·I` of the newest pair by the two-loop recursion. With
/// `m = 0` and [`QnLineSearch::Unit`] this is the Barzilai-Borwein method.
pub fn lbfgs_with(
    oracle: &SmoothOracle,
    x0: &[f64],
    m: usize,
    search: QnLineSearch,
    stop: &StopRule,
) -> QnRun {
    let mut rec = Recorder::new("lbfgs", oracle, stop);
    let mut x = x0.to_vec();
    let mut f = oracle.f(&x);
    let mut g = oracle.grad(&x);
    let mut mem = LbfgsMemory::new(m);
    let mut run = QnRun {
        trace: SolveTrace::new("lbfgs"),
        directions: Vec::new(),
        secant_residuals: Vec::new(),
        inverse_hessian: None,
        skipped_updates: 0,
        direction_flops: 0,
    };
    let mut pending = TraceRow::default();
    let status = loop {
        if let Some(status) = rec.log(&x, f, Some(norm(&g)), std::mem::take(&mut pending)) {
            break status;
        }
        let (hg, flops) = mem.apply(&g);
        run.direction_flops += flops;
        let mut d: Vec<f64> = hg.iter().map(|v| -v).collect();
        if dot(&d, &g) >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            pending.flags |= RowFlags::RESTART;
        }
        let first = run.directions.is_empty();
        let StepOutcome::Taken(p) = take_step(oracle, &x, f, &g, &d, search, first) else {
            break Status::LineSearchFail;
        };
        let g_new = p.g.clone().expect("search returns gradient");
        let s = sub(&p.x, &x);
        let y = sub(&g_new, &g);
        pending = TraceRow {
            alpha: Some(p.alpha),
            flags: pending.flags,
            ..row(&s)
        };
        if dot(&s, &y) > SKIP_TOL * norm(&s) * norm(&y) {
            mem.push(s, y);
        } else {
            pending.flags |= RowFlags::SKIPPED_UPDATE;
            run.skipped_updates += 1;
        }
        run.directions.push(d);
        x = p.x;
        f = p.f;
        g = g_new;
    };
    run.trace = rec.finish(x, f, status);
    run
}
