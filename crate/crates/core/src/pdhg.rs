//! Primal-dual hybrid gradient for `min_{x≥0} max_λ cᵀx − λᵀ(Ax − b)`.
//!
//! Supports plain and Halpern-anchored iterations, running averages, and
//! fixed-period or adaptive restarts.

use thiserror::Error;

use crate::linalg::{dot, norm, spectral_norm};
use crate::lp::LpInstance;
use crate::trace::{RowFlags, SolveTrace, Status, Stopwatch, TraceRow};

/// Power-iteration budget for the `‖A‖` estimate.
pub const NORM_ITERS: usize = 100;
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdhgError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Plain,
    Halpern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restart {
    None,
    Fixed(usize),
    /// Restart once the averaged iterate's KKT residual has halved since the
    /// last restart.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdhgParams {
    pub tau: f64,
    pub sigma: f64,
    pub variant: Variant,
    pub restart: Restart,
    pub tol: f64,
    pub max_iter: usize,
}

impl PdhgParams {
    /// Checked constructor: requires `τ, σ > 0` and `τσ‖A‖² ≤ 1`.
    pub fn new(
        inst: &LpInstance,
        tau: f64,
        sigma: f64,
        variant: Variant,
        restart: Restart,
        tol: f64,
        max_iter: usize,
    ) -> Result<Self, PdhgError> {
        let p = Self {
            tau,
            sigma,
            variant,
            restart,
            tol,
            max_iter,
        };
        p.validate(inst)?;
        Ok(p)
    }

    /// `τ = σ = 0.9/‖A‖`.
    pub fn default_for(
        inst: &LpInstance,
        variant: Variant,
        restart: Restart,
        tol: f64,
        max_iter: usize,
    ) -> Self {
        let norm_a = spectral_norm(inst.a(), NORM_ITERS, NORM_TOL).max(f64::MIN_POSITIVE);
        let step = 0.9 / norm_a;
        Self {
            tau: step,
            sigma: step,
            variant,
            restart,
            tol,
            max_iter,
        }
    }

    pub fn validate(&self, inst: &LpInstance) -> Result<(), PdhgError> {
        let bad = |m: String| Err(PdhgError::InvalidParams(m));
        if !(self.tau > 0.0 && self.sigma > 0.0) {
            return bad("step sizes must be positive".into());
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive".into());
        }
        if let Restart::Fixed(0) = self.restart {
            return bad("restart period must be positive".into());
        }
        let norm_a = spectral_norm(inst.a(), NORM_ITERS, NORM_TOL);
        let product = self.tau * self.sigma * norm_a * norm_a;
        if product > 1.0 {
            return bad(format!("tau*sigma*||A||^2 = {product} exceeds 1"));
        }
        Ok(())
    }
}

/// Iterate, previous iterate, running averages, and Halpern anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleState {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub lambda_prev: Vec<f64>,
    pub x_avg: Vec<f64>,
    pub lambda_avg: Vec<f64>,
    /// Number of iterates in the current averaging window.
    pub avg_count: usize,
    pub anchor_x: Vec<f64>,
    pub anchor_lambda: Vec<f64>,
}

impl SaddleState {
    /// State at `(x, λ)`, which also becomes the anchor and the average.
    pub fn new(x: Vec<f64>, lambda: Vec<f64>) -> Self {
        let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
        Self {
            x_prev: x.clone(),
            lambda_prev: lambda.clone(),
            x_avg: x.clone(),
            lambda_avg: lambda.clone(),
            avg_count: 0,
            anchor_x: x.clone(),
            anchor_lambda: lambda.clone(),
            x,
            lambda,
        }
    }

    pub fn zeros(inst: &LpInstance) -> Self {
        Self::new(vec![0.0; inst.n()], vec![0.0; inst.m()])
    }

    fn record_average(&mut self) {
        self.avg_count += 1;
        let w = 1.0 / self.avg_count as f64;
        for (a, v) in self.x_avg.iter_mut().zip(&self.x) {
            *a += w * (v - *a);
        }
        for (a, v) in self.lambda_avg.iter_mut().zip(&self.lambda) {
            *a += w * (v - *a);
        }
    }

    /// Moves to `(x, λ)` and starts a new averaging window anchored there.
    fn restart_at(&mut self, x: Vec<f64>, lambda: Vec<f64>) {
        *self = Self::new(x, lambda);
    }
}

fn raw_step(inst: &LpInstance, state: &mut SaddleState, tau: f64, sigma: f64) {
    let atl = inst.a().mul_t_vec(&state.lambda);
    let x_new: Vec<f64> = (0..inst.n())
        .map(|j| (state.x[j] - tau * (inst.c()[j] - atl[j])).max(0.0))
        .collect();
    let extrap: Vec<f64> = x_new
        .iter()
        .zip(&state.x)
        .map(|(n, o)| 2.0 * n - o)
        .collect();
    let a_ext = inst.a().mul_vec(&extrap);
    let lambda_new: Vec<f64> = (0..inst.m())
        .map(|i| state.lambda[i] + sigma * (inst.b()[i] - a_ext[i]))
        .collect();
    state.x_prev = std::mem::replace(&mut state.x, x_new);
    state.lambda_prev = std::mem::replace(&mut state.lambda, lambda_new);
}

/// One PDHG step; the averages absorb the new iterate.
///
/// `x⁺ = [x − τ(c − Aᵀλ)]₊`, `λ⁺ = λ + σ(b − A(2x⁺ − x))`.
pub fn pdhg_step(inst: &LpInstance, state: &SaddleState, tau: f64, sigma: f64) -> SaddleState {
    let mut next = state.clone();
    raw_step(inst, &mut next, tau, sigma);
    next.record_average();
    next
}

/// Halpern anchoring: `(x, λ) ← (k+1)/(k+2)·(x, λ) + 1/(k+2)·(x⁰, λ⁰)`,
/// with `x` projected back onto `x ≥ 0`.
pub fn halpern_combine(state: &SaddleState, k: usize) -> SaddleState {
    let mut next = state.clone();
    let w = (k as f64 + 1.0) / (k as f64 + 2.0);
    let a = 1.0 - w;
    for (v, z) in next.x.iter_mut().zip(&state.anchor_x) {
        *v = (w * *v + a * z).max(0.0);
    }
    for (v, z) in next.lambda.iter_mut().zip(&state.anchor_lambda) {
        *v = w * *v + a * z;
    }
    next
}

/// Normalized optimality measures of a primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kkt {
    /// `‖Ax − b‖ / (1 + ‖b‖)`
    pub primal: f64,
    /// `‖min(0, c − Aᵀλ)‖ / (1 + ‖c‖)`
    pub dual: f64,
    /// `|cᵀx − bᵀλ| / (1 + |cᵀx| + |bᵀλ|)`
    pub gap: f64,
}

impl Kkt {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

pub fn kkt_residual(inst: &LpInstance, x: &[f64], lambda: &[f64]) -> Kkt {
    let ax = inst.a().mul_vec(x);
    let rp: Vec<f64> = ax.iter().zip(inst.b()).map(|(a, b)| a - b).collect();
    let atl = inst.a().mul_t_vec(lambda);
    let neg: Vec<f64> = inst
        .c()
        .iter()
        .zip(&atl)
        .map(|(c, v)| (c - v).min(0.0))
        .collect();
    let pobj = dot(inst.c(), x);
    let dobj = dot(inst.b(), lambda);
    Kkt {
        primal: norm(&rp) / (1.0 + norm(inst.b())),
        dual: norm(&neg) / (1.0 + norm(inst.c())),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
    }
}

/// PDHG from `(0, 0)`.
///
/// Stops when the better of the last and averaged iterates has normalized
/// KKT residual at most `tol`; that iterate is returned. Restarts move the
/// iterate and the Halpern anchor to the current average and clear the
/// averaging window.
pub fn solve_pdhg(inst: &LpInstance, params: &PdhgParams) -> Result<SolveTrace, PdhgError> {
    params.validate(inst)?;
    Ok(solve_pdhg_from(inst, params, SaddleState::zeros(inst)))
}

/// As [`solve_pdhg`] from a given state; parameters are assumed valid.
pub fn solve_pdhg_from(
    inst: &LpInstance,
    params: &PdhgParams,
    mut state: SaddleState,
) -> SolveTrace {
    let clock = Stopwatch::start();
    let mut trace = SolveTrace::new(match params.variant {
        Variant::Plain => "pdhg",
        Variant::Halpern => "pdhg-halpern",
    });
    let k0 = kkt_residual(inst, &state.x, &state.lambda);
    let mut best = k0.max();
    trace.rows.push(TraceRow {
        iter: 0,
        kkt_last: Some(best),
        kkt_avg: Some(best),
        kkt_best: Some(best),
        gap: Some(k0.gap),
        time_ns: clock.elapsed_ns(),
        ..Default::default()
    });
    let mut restart_ref = best;
    let mut inner = 0usize;
    let mut result = (state.x.clone(), state.lambda.clone());
    let mut status = Status::IterationLimit;

    if best <= params.tol {
        status = Status::Converged;
    }
    let mut k = 0;
    while status != Status::Converged && k < params.max_iter {
        k += 1;
        raw_step(inst, &mut state, params.tau, params.sigma);
        if params.variant == Variant::Halpern {
            state = halpern_combine(&state, inner);
        }
        state.record_average();
        inner += 1;

        let last = kkt_residual(inst, &state.x, &state.lambda);
        let avg = kkt_residual(inst, &state.x_avg, &state.lambda_avg);
        let (kl, ka) = (last.max(), avg.max());
        if kl <= ka {
            result = (state.x.clone(), state.lambda.clone());
        } else {
            result = (state.x_avg.clone(), state.lambda_avg.clone());
        }
        best = best.min(kl.min(ka));
        let mut flags = RowFlags::empty();
        if kl.min(ka) <= params.tol {
            status = Status::Converged;
        } else {
            let restart = match params.restart {
                Restart::None => false,
                Restart::Fixed(period) => inner >= period,
                Restart::Adaptive => ka <= 0.5 * restart_ref,
            };
            if restart {
                flags |= RowFlags::RESTART;
                restart_ref = ka;
                inner = 0;
                let (xa, la) = (state.x_avg.clone(), state.lambda_avg.clone());
                state.restart_at(xa, la);
            }
        }
        trace.rows.push(TraceRow {
            iter: k,
            kkt_last: Some(kl),
            kkt_avg: Some(ka),
            kkt_best: Some(best),
            gap: Some(if kl <= ka { last.gap } else { avg.gap }),
            flags,
            time_ns: clock.elapsed_ns(),
            ..Default::default()
        });
    }
    trace.status = status;
    trace.objective = Some(dot(inst.c(), &result.0));
    let s: Vec<f64> = {
        let atl = inst.a().mul_t_vec(&result.1);
        inst.c()
            .iter()
            .zip(&atl)
            .map(|(c, v)| (c - v).max(0.0))
            .collect()
    };
    trace.x = result.0;
    trace.lambda = Some(result.1);
    trace.s = Some(s);
    trace
}
