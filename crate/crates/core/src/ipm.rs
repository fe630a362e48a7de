//! Primal-dual interior-point methods for standard-form LPs.
//!
//! [`solve_lpf`] is the long-step path-following method on the wide
//! neighborhood `N₋∞(γ)`; [`solve_mpc`] is Mehrotra's infeasible-start
//! predictor-corrector. Both solve the Newton system through the normal
//! equations `A(XS⁻¹)Aᵀ Δλ = r` with a dense Cholesky factorization.

use thiserror::Error;

use crate::linalg::{dot, norm, Cholesky, LinalgError};
use crate::lp::{
    centrality_ok, dual_residual, in_neighborhood, primal_residual, LpInstance, PrimalDualPoint,
};
use crate::trace::{SolveTrace, Status, Stopwatch, TraceRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IpmError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("start point is not in the N-inf(gamma) neighborhood")]
    StartNotInNeighborhood,
    #[error("constraint matrix has rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmParams {
    pub gamma: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Stop once `μ ≤ tol` (and, for MPC, residuals are small).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IpmParams {
    fn default() -> Self {
        Self {
            gamma: 1e-3,
            sigma_min: 0.1,
            sigma_max: 0.9,
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

impl IpmParams {
    pub fn validate(&self) -> Result<(), IpmError> {
        let bad = |msg: &str| Err(IpmError::InvalidParams(msg.into()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma_max && self.sigma_max < 1.0) {
            return bad("need 0 < sigma_min <= sigma_max < 1");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonDirection {
    pub dx: Vec<f64>,
    pub dlambda: Vec<f64>,
    pub ds: Vec<f64>,
}

impl NewtonDirection {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            dx: vec![0.0; n],
            dlambda: vec![0.0; m],
            ds: vec![0.0; n],
        }
    }
}

/// Factored normal-equations matrix `A D Aᵀ`, `D = X S⁻¹`, reusable for
/// several right-hand sides at the same point.
struct NormalEquations<'a> {
    inst: &'a LpInstance,
    x: &'a [f64],
    s: &'a [f64],
    d: Vec<f64>,
    chol: Cholesky,
}

impl<'a> NormalEquations<'a> {
    fn new(inst: &'a LpInstance, pt: &'a PrimalDualPoint) -> Result<Self, LinalgError> {
        let d: Vec<f64> = pt.x.iter().zip(&pt.s).map(|(x, s)| x / s).collect();
        let chol = Cholesky::factor(&inst.a().scaled_gram(&d))?;
        Ok(Self {
            inst,
            x: &pt.x,
            s: &pt.s,
            d,
            chol,
        })
    }

    /// Solves `AΔx = rp`, `AᵀΔλ + Δs = rd`, `SΔx + XΔs = rc`.
    fn solve(&self, rp: &[f64], rd: &[f64], rc: &[f64]) -> NewtonDirection {
        let a = self.inst.a();
        // Δx = S⁻¹(rc − X rd) + D AᵀΔλ
        let base: Vec<f64> = (0..self.x.len())
            .map(|i| (rc[i] - self.x[i] * rd[i]) / self.s[i])
            .collect();
        let a_base = a.mul_vec(&base);
        let rhs: Vec<f64> = rp.iter().zip(&a_base).map(|(r, v)| r - v).collect();
        let mut dlambda = self.chol.solve(&rhs);
        // One step of iterative refinement on the normal equations.
        let apply = |v: &[f64]| {
            let atv = a.mul_t_vec(v);
            let scaled: Vec<f64> = atv.iter().zip(&self.d).map(|(t, d)| t * d).collect();
            a.mul_vec(&scaled)
        };
        let resid: Vec<f64> = rhs
            .iter()
            .zip(apply(&dlambda))
            .map(|(r, v)| r - v)
            .collect();
        let corr = self.chol.solve(&resid);
        for (l, c) in dlambda.iter_mut().zip(&corr) {
            *l += c;
        }
        let at_dl = a.mul_t_vec(&dlambda);
        let dx: Vec<f64> = (0..self.x.len())
            .map(|i| base[i] + self.d[i] * at_dl[i])
            .collect();
        let ds: Vec<f64> = (0..self.x.len()).map(|i| rd[i] - at_dl[i]).collect();
        NewtonDirection { dx, dlambda, ds }
    }
}

/// Newton direction toward the point on the central path with parameter
/// `mu_target`, for the primal/dual residuals at `pt`.
///
/// The third block right-hand side is `−XS𝟏 + μ_target𝟏 + rhs_correction`.
pub fn newton_step(
    inst: &LpInstance,
    pt: &PrimalDualPoint,
    mu_target: f64,
    rhs_correction: Option<&[f64]>,
) -> Result<NewtonDirection, LinalgError> {
    let rp = primal_residual(inst, &pt.x);
    let rd = dual_residual(inst, &pt.lambda, &pt.s);
    let rc = complementarity_rhs(pt, mu_target, rhs_correction);
    Ok(NormalEquations::new(inst, pt)?.solve(&rp, &rd, &rc))
}

fn complementarity_rhs(
    pt: &PrimalDualPoint,
    mu_target: f64,
    correction: Option<&[f64]>,
) -> Vec<f64> {
    (0..pt.x.len())
        .map(|i| -pt.x[i] * pt.s[i] + mu_target + correction.map_or(0.0, |c| c[i]))
        .collect()
}

fn moved(v: &[f64], dv: &[f64], alpha: f64) -> Vec<f64> {
    v.iter().zip(dv).map(|(a, d)| a + alpha * d).collect()
}

fn centered_after(pt: &PrimalDualPoint, dir: &NewtonDirection, alpha: f64, gamma: f64) -> bool {
    let x = moved(&pt.x, &dir.dx, alpha);
    let s = moved(&pt.s, &dir.ds, alpha);
    x.iter().chain(&s).all(|&v| v > 0.0) && centrality_ok(&x, &s, gamma)
}

/// Roots in `(0, 1)` of `a α² + b α + c`.
fn unit_roots(a: f64, b: f64, c: f64, out: &mut Vec<f64>) {
    let mut push = |r: f64| {
        if r > 0.0 && r < 1.0 {
            out.push(r);
        }
    };
    if a == 0.0 {
        if b != 0.0 {
            push(-c / b);
        }
        return;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    push(q / a);
    if q != 0.0 {
        push(c / q);
    }
}

/// Largest `α ∈ [0, 1]` with `pt + α·dir` in the centrality part of
/// `N₋∞(γ)` (positivity and `x_i s_i ≥ γμ`).
///
/// Candidate breakpoints are the roots of the per-coordinate quadratics; the
/// returned value is refined by bisection against the floating-point
/// membership test, so the resulting point passes that test exactly.
pub fn max_step_in_neighborhood(pt: &PrimalDualPoint, dir: &NewtonDirection, gamma: f64) -> f64 {
    if centered_after(pt, dir, 1.0, gamma) {
        return 1.0;
    }
    let n = pt.x.len() as f64;
    let (x, s, dx, ds) = (&pt.x, &pt.s, &dir.dx, &dir.ds);
    let lin = (dot(x, ds) + dot(s, dx)) * gamma / n;
    let quad = dot(dx, ds) * gamma / n;
    let mu_g = dot(x, s) * gamma / n;
    let mut roots = Vec::new();
    for i in 0..x.len() {
        unit_roots(
            dx[i] * ds[i] - quad,
            x[i] * ds[i] + s[i] * dx[i] - lin,
            x[i] * s[i] - mu_g,
            &mut roots,
        );
        unit_roots(0.0, dx[i], x[i], &mut roots);
        unit_roots(0.0, ds[i], s[i], &mut roots);
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    const WIDTH: f64 = 1e-9;
    for r in roots {
        let (mut lo, mut hi) = if centered_after(pt, dir, r, gamma) {
            if !centered_after(pt, dir, (r + WIDTH).min(1.0), gamma) {
                (r, (r + WIDTH).min(1.0))
            } else {
                continue;
            }
        } else if r > WIDTH && centered_after(pt, dir, r - WIDTH, gamma) {
            (r - WIDTH, r)
        } else {
            continue;
        };
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if centered_after(pt, dir, mid, gamma) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return lo;
    }
    0.0
}

fn check_rank(inst: &LpInstance) -> Result<(), IpmError> {
    if inst.has_full_row_rank() {
        Ok(())
    } else {
        Err(IpmError::RankDeficient {
            rank: inst.rank(),
            rows: inst.m(),
        })
    }
}

fn feasibility_tol(inst: &LpInstance) -> f64 {
    1e-8 * inst.data_scale()
}

fn ipm_row(iter: usize, inst: &LpInstance, pt: &PrimalDualPoint, clock: &Stopwatch) -> TraceRow {
    TraceRow {
        iter,
        mu: Some(pt.mu()),
        primal_res: Some(norm(&primal_residual(inst, &pt.x))),
        dual_res: Some(norm(&dual_residual(inst, &pt.lambda, &pt.s))),
        time_ns: clock.elapsed_ns(),
        ..Default::default()
    }
}

fn finish(trace: &mut SolveTrace, inst: &LpInstance, pt: PrimalDualPoint, status: Status) {
    trace.status = status;
    trace.objective = Some(inst.objective(&pt.x));
    trace.x = pt.x;
    trace.lambda = Some(pt.lambda);
    trace.s = Some(pt.s);
}

/// Long-step path-following from a feasible start inside `N₋∞(γ)`.
///
/// Each iteration takes `σ_k = σ_min` and the largest step that stays in the
/// neighborhood. The Newton system uses zero feasibility residuals, so every
/// step satisfies `μ_{k+1} = (1 − α_k(1 − σ_k))μ_k` up to rounding.
pub fn solve_lpf(
    inst: &LpInstance,
    start: &PrimalDualPoint,
    params: &IpmParams,
) -> Result<SolveTrace, IpmError> {
    solve_lpf_observed(inst, start, params, |_| {})
}

/// [`solve_lpf`] calling `observe` on the start and on every iterate.
pub fn solve_lpf_observed(
    inst: &LpInstance,
    start: &PrimalDualPoint,
    params: &IpmParams,
    mut observe: impl FnMut(&PrimalDualPoint),
) -> Result<SolveTrace, IpmError> {
    params.validate()?;
    check_rank(inst)?;
    if start.x.len() != inst.n() || start.s.len() != inst.n() || start.lambda.len() != inst.m() {
        return Err(IpmError::DimensionMismatch(
            "start point does not match instance".into(),
        ));
    }
    if !in_neighborhood(start, inst, params.gamma, feasibility_tol(inst)) {
        return Err(IpmError::StartNotInNeighborhood);
    }
    let clock = Stopwatch::start();
    let mut trace = SolveTrace::new("lpf");
    let mut pt = start.clone();
    observe(&pt);
    trace.rows.push(ipm_row(0, inst, &pt, &clock));
    let zeros_m = vec![0.0; inst.m()];
    let zeros_n = vec![0.0; inst.n()];

    for k in 0..params.max_iter {
        let mu = pt.mu();
        if mu <= params.tol {
            finish(&mut trace, inst, pt, Status::Converged);
            return Ok(trace);
        }
        let sigma = params.sigma_min;
        let Ok(ne) = NormalEquations::new(inst, &pt) else {
            finish(&mut trace, inst, pt, Status::NumericalBreakdown);
            return Ok(trace);
        };
        let rc = complementarity_rhs(&pt, sigma * mu, None);
        let dir = ne.solve(&zeros_m, &zeros_n, &rc);
        let alpha = max_step_in_neighborhood(&pt, &dir, params.gamma);
        if alpha <= 0.0 {
            finish(&mut trace, inst, pt, Status::NumericalBreakdown);
            return Ok(trace);
        }
        pt = PrimalDualPoint::new(
            moved(&pt.x, &dir.dx, alpha),
            moved(&pt.lambda, &dir.dlambda, alpha),
            moved(&pt.s, &dir.ds, alpha),
        );
        observe(&pt);
        let mut row = ipm_row(k + 1, inst, &pt, &clock);
        row.sigma = Some(sigma);
        row.alpha = Some(alpha);
        trace.rows.push(row);
    }
    let status = if pt.mu() <= params.tol {
        Status::Converged
    } else {
        Status::IterationLimit
    };
    finish(&mut trace, inst, pt, status);
    Ok(trace)
}

/// Fraction of the distance to the boundary taken by MPC steps.
pub const MPC_STEP_FRACTION: f64 = 0.99995;
const MIN_STEP: f64 = 1e-12;
const MAX_SMALL_STEPS: usize = 5;
const BOUNDARY_COLLAPSE: f64 = 1e-14;

/// Default MPC start `x = s = β𝟏`, `λ = 0` with `β = 1 + max(‖b‖∞, ‖c‖∞)`.
pub fn mpc_default_start(inst: &LpInstance) -> PrimalDualPoint {
    let scale = inst
        .b()
        .iter()
        .chain(inst.c())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let beta = 1.0 + scale;
    PrimalDualPoint::new(
        vec![beta; inst.n()],
        vec![0.0; inst.m()],
        vec![beta; inst.n()],
    )
}

/// Largest `α ∈ [0, 1]` keeping `v + α·dv ≥ 0`.
fn boundary_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}

/// Mehrotra predictor-corrector, allowing infeasible iterates.
///
/// Terminates when `μ ≤ tol` and both residual norms are at most
/// `tol·(1 + ‖b‖ + ‖c‖)`.
pub fn solve_mpc(
    inst: &LpInstance,
    params: &IpmParams,
    start: Option<&PrimalDualPoint>,
) -> Result<SolveTrace, IpmError> {
    params.validate()?;
    check_rank(inst)?;
    let mut pt = match start {
        Some(p) => {
            if p.x.len() != inst.n() || p.s.len() != inst.n() || p.lambda.len() != inst.m() {
                return Err(IpmError::DimensionMismatch(
                    "start point does not match instance".into(),
                ));
            }
            if !p.is_interior() {
                return Err(IpmError::InvalidParams(
                    "start point must have x > 0 and s > 0".into(),
                ));
            }
            p.clone()
        }
        None => mpc_default_start(inst),
    };
    let clock = Stopwatch::start();
    let mut trace = SolveTrace::new("mpc");
    let res_tol = params.tol * inst.data_scale();
    let n = inst.n() as f64;
    let mut small_steps = 0;
    trace.rows.push(ipm_row(0, inst, &pt, &clock));

    for k in 0..params.max_iter {
        let rp = primal_residual(inst, &pt.x);
        let rd = dual_residual(inst, &pt.lambda, &pt.s);
        let mu = pt.mu();
        if mu <= params.tol && norm(&rp) <= res_tol && norm(&rd) <= res_tol {
            finish(&mut trace, inst, pt, Status::Converged);
            return Ok(trace);
        }
        if pt.x.iter().chain(&pt.s).any(|&v| v < BOUNDARY_COLLAPSE) {
            finish(&mut trace, inst, pt, Status::NumericalBreakdown);
            return Ok(trace);
        }
        let Ok(ne) = NormalEquations::new(inst, &pt) else {
            finish(&mut trace, inst, pt, Status::NumericalBreakdown);
            return Ok(trace);
        };

        let aff = ne.solve(&rp, &rd, &complementarity_rhs(&pt, 0.0, None));
        let ap = boundary_step(&pt.x, &aff.dx);
        let ad = boundary_step(&pt.s, &aff.ds);
        let mu_aff = dot(&moved(&pt.x, &aff.dx, ap), &moved(&pt.s, &aff.ds, ad)) / n;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        let second_order: Vec<f64> = aff.dx.iter().zip(&aff.ds).map(|(a, b)| -a * b).collect();
        let dir = ne.solve(
            &rp,
            &rd,
            &complementarity_rhs(&pt, sigma * mu, Some(&second_order)),
        );
        let alpha_p = (MPC_STEP_FRACTION * boundary_step(&pt.x, &dir.dx)).min(1.0);
        let alpha_d = (MPC_STEP_FRACTION * boundary_step(&pt.s, &dir.ds)).min(1.0);

        pt = PrimalDualPoint::new(
            moved(&pt.x, &dir.dx, alpha_p),
            moved(&pt.lambda, &dir.dlambda, alpha_d),
            moved(&pt.s, &dir.ds, alpha_d),
        );
        let alpha = alpha_p.min(alpha_d);
        let mut row = ipm_row(k + 1, inst, &pt, &clock);
        row.sigma = Some(sigma);
        row.alpha = Some(alpha);
        trace.rows.push(row);

        small_steps = if alpha < MIN_STEP { small_steps + 1 } else { 0 };
        if small_steps >= MAX_SMALL_STEPS {
            finish(&mut trace, inst, pt, Status::NumericalBreakdown);
            return Ok(trace);
        }
    }
    finish(&mut trace, inst, pt, Status::IterationLimit);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm_inf, Matrix};
    use crate::lp::gen_random_feasible;
    use crate::simplex::{solve_simplex, PivotRule};

    fn block_residuals(
        inst: &LpInstance,
        pt: &PrimalDualPoint,
        mu_t: f64,
        d: &NewtonDirection,
    ) -> [f64; 3] {
        let rp = primal_residual(inst, &pt.x);
        let rd = dual_residual(inst, &pt.lambda, &pt.s);
        let adx = inst.a().mul_vec(&d.dx);
        let atdl = inst.a().mul_t_vec(&d.dlambda);
        let r1: Vec<f64> = adx.iter().zip(&rp).map(|(a, b)| a - b).collect();
        let r2: Vec<f64> = (0..inst.n()).map(|i| atdl[i] + d.ds[i] - rd[i]).collect();
        let r3: Vec<f64> = (0..inst.n())
            .map(|i| pt.s[i] * d.dx[i] + pt.x[i] * d.ds[i] + pt.x[i] * pt.s[i] - mu_t)
            .collect();
        [norm_inf(&r1), norm_inf(&r2), norm_inf(&r3)]
    }

    fn one_d() -> (LpInstance, PrimalDualPoint) {
        // min x1 + 2 x2 s.t. x1 + x2 = 2
        let inst = LpInstance::new(
            "1d",
            Matrix::from_rows(&[vec![1.0, 1.0]]),
            vec![2.0],
            vec![1.0, 2.0],
        )
        .unwrap();
        let pt = PrimalDualPoint::new(vec![1.5, 0.5], vec![0.25], vec![0.75, 1.75]);
        (inst, pt)
    }

    #[test]
    fn central_point_gives_zero_direction() {
        let (inst, pt) = gen_random_feasible(4, 9, 3).unwrap();
        let d = newton_step(&inst, &pt, pt.mu(), None).unwrap();
        assert!(norm_inf(&d.dx) < 1e-10 && norm_inf(&d.ds) < 1e-10 && norm_inf(&d.dlambda) < 1e-10);
    }

    #[test]
    fn one_d_block_residuals() {
        let (inst, pt) = one_d();
        let d = newton_step(&inst, &pt, 0.1, None).unwrap();
        for r in block_residuals(&inst, &pt, 0.1, &d) {
            assert!(r <= 1e-12, "{r}");
        }
    }

    #[test]
    fn affine_direction_is_orthogonal_when_feasible() {
        let (inst, pt) = gen_random_feasible(5, 12, 8).unwrap();
        let d = newton_step(&inst, &pt, 0.0, None).unwrap();
        let scale = norm(&d.dx) * norm(&d.ds);
        assert!(dot(&d.dx, &d.ds).abs() <= 1e-10 * scale);
    }

    #[test]
    fn zero_direction_takes_full_step() {
        let (_, pt) = gen_random_feasible(3, 7, 1).unwrap();
        let d = NewtonDirection::zeros(3, 7);
        assert_eq!(max_step_in_neighborhood(&pt, &d, 1e-3), 1.0);
    }

    #[test]
    fn damped_centering_step_is_full() {
        let (inst, mut pt) = gen_random_feasible(3, 7, 2).unwrap();
        // Move off-center, then a centering step (μ_target = μ) only improves centrality.
        pt.x[0] *= 1.5;
        pt.s[0] /= 1.5;
        pt.x[1] *= 0.8;
        let d = newton_step(&inst, &pt, pt.mu(), None).unwrap();
        let half = NewtonDirection {
            dx: d.dx.iter().map(|v| 0.5 * v).collect(),
            dlambda: d.dlambda.iter().map(|v| 0.5 * v).collect(),
            ds: d.ds.iter().map(|v| 0.5 * v).collect(),
        };
        assert_eq!(max_step_in_neighborhood(&pt, &half, 0.5), 1.0);
    }

    #[test]
    fn step_matches_grid_scan_oracle() {
        let (inst, pt) = gen_random_feasible(4, 10, 5).unwrap();
        let d = newton_step(&inst, &pt, 0.0, None).unwrap();
        let gamma = 0.3;
        let alpha = max_step_in_neighborhood(&pt, &d, gamma);
        assert!(alpha < 1.0);
        // Dense scan: first grid point outside, then bisection between neighbours.
        let steps = 100_000;
        let first_out = (1..=steps)
            .map(|k| k as f64 / steps as f64)
            .find(|&a| !centered_after(&pt, &d, a, gamma))
            .unwrap();
        let (mut lo, mut hi) = (first_out - 1.0 / steps as f64, first_out);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if centered_after(&pt, &d, mid, gamma) {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((alpha - lo).abs() <= 1e-8, "{alpha} vs {lo}");
        assert!(centered_after(&pt, &d, alpha, gamma));
        assert!(!centered_after(&pt, &d, (alpha + 1e-8).min(1.0), gamma));
    }

    #[test]
    fn params_validation() {
        assert!(IpmParams::default().validate().is_ok());
        let bad = IpmParams {
            sigma_min: 0.5,
            sigma_max: 0.4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lpf_rejects_start_outside_neighborhood() {
        let (inst, mut pt) = gen_random_feasible(3, 8, 4).unwrap();
        pt.x[0] *= 1e-6;
        let p = IpmParams {
            gamma: 0.5,
            ..Default::default()
        };
        assert_eq!(
            solve_lpf(&inst, &pt, &p).unwrap_err(),
            IpmError::StartNotInNeighborhood
        );
    }

    #[test]
    fn lpf_converges_inside_neighborhood() {
        let (inst, pt) = gen_random_feasible(10, 30, 11).unwrap();
        let p = IpmParams::default();
        let t = solve_lpf(&inst, &pt, &p).unwrap();
        assert_eq!(t.status, Status::Converged);
        let mus: Vec<f64> = t.rows.iter().map(|r| r.mu.unwrap()).collect();
        assert!(mus.windows(2).all(|w| w[1] < w[0]));
        for w in t.rows.windows(2) {
            let predicted =
                (1.0 - w[1].alpha.unwrap() * (1.0 - w[1].sigma.unwrap())) * w[0].mu.unwrap();
            assert!((w[1].mu.unwrap() - predicted).abs() <= 1e-10 * predicted);
        }
    }

    #[test]
    fn mpc_matches_simplex() {
        let (inst, _) = gen_random_feasible(20, 60, 7).unwrap();
        let t = solve_mpc(&inst, &IpmParams::default(), None).unwrap();
        assert_eq!(t.status, Status::Converged);
        assert!(t.iterations() <= 40, "{}", t.iterations());
        let sx = solve_simplex(&inst, PivotRule::Dantzig, 10_000);
        let obj = t.objective.unwrap();
        assert!((obj - sx.objective).abs() <= 1e-6 * sx.objective.abs().max(1.0));
    }

    #[test]
    fn mpc_from_near_optimal_start() {
        // min x1 + 2 x2 s.t. x1 + x2 = 2: x* = (2, 0), λ* = 1, s* = (0, 1).
        let (inst, _) = one_d();
        let start = PrimalDualPoint::new(vec![2.0 - 1e-6, 1e-6], vec![1.0], vec![1e-6, 1.0]);
        let t = solve_mpc(&inst, &IpmParams::default(), Some(&start)).unwrap();
        assert_eq!(t.status, Status::Converged);
        assert!(t.iterations() <= 3, "{}", t.iterations());
        assert!((t.objective.unwrap() - 2.0).abs() < 1e-7);
    }
}
