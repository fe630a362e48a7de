//! Step-length rules along a descent direction: Armijo backtracking,
//! strong Wolfe bracketing/zoom, and an exact search for `φ′(α) = 0`.

use thiserror::Error;

use crate::linalg::dot;
use crate::smooth::SmoothOracle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineSearchError {
    #[error("direction is not a descent direction (slope {0})")]
    NotDescent(f64),
    #[error("step length underflowed below {0}")]
    Underflow(f64),
    #[error("no acceptable step after {0} evaluations")]
    Exhausted(usize),
}

/// Accepted trial point.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchPoint {
    pub alpha: f64,
    pub x: Vec<f64>,
    pub f: f64,
    /// Gradient at `x`, when the search evaluated it.
    pub g: Option<Vec<f64>>,
    pub evaluations: usize,
}

fn trial(x: &[f64], p: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + alpha * b).collect()
}

/// Armijo backtracking: shrink `α` from `alpha0` until
/// `f(x + αp) ≤ f(x) + c₁α∇f(x)ᵀp`. Evaluates `f` only.
#[allow(clippy::too_many_arguments)]
pub fn backtracking(
    oracle: &SmoothOracle,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    alpha0: f64,
    c1: f64,
    shrink: f64,
) -> Result<LineSearchPoint, LineSearchError> {
    const MIN_ALPHA: f64 = 1e-20;
    let slope = dot(g0, p);
    if slope >= 0.0 {
        return Err(LineSearchError::NotDescent(slope));
    }
    let mut alpha = alpha0;
    let mut evals = 0;
    loop {
        let xt = trial(x, p, alpha);
        let ft = oracle.f(&xt);
        evals += 1;
        if ft <= f0 + c1 * alpha * slope {
            return Ok(LineSearchPoint {
                alpha,
                x: xt,
                f: ft,
                g: None,
                evaluations: evals,
            });
        }
        alpha *= shrink;
        if alpha < MIN_ALPHA {
            return Err(LineSearchError::Underflow(MIN_ALPHA));
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    alpha: f64,
    phi: f64,
    dphi: f64,
}

/// Minimizer of the cubic interpolating two samples, if it lies strictly
/// inside the safeguarded interval; bisection otherwise.
fn interpolate(lo: Sample, hi: Sample) -> f64 {
    let (a, b) = if lo.alpha < hi.alpha {
        (lo, hi)
    } else {
        (hi, lo)
    };
    let width = b.alpha - a.alpha;
    let d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    let mid = 0.5 * (a.alpha + b.alpha);
    if disc < 0.0 || !disc.is_finite() {
        return mid;
    }
    let d2 = disc.sqrt();
    let denom = b.dphi - a.dphi + 2.0 * d2;
    if denom == 0.0 {
        return mid;
    }
    let c = b.alpha - width * (b.dphi + d2 - d1) / denom;
    let margin = 0.1 * width;
    if c.is_finite() && c > a.alpha + margin && c < b.alpha - margin {
        c
    } else {
        mid
    }
}

/// Relative tolerance on `f` for the approximate-Wolfe fallback.
pub const APPROX_F_TOL: f64 = 1e-12;

/// Strong Wolfe search: sufficient decrease with `c1` and
/// `|φ′(α)| ≤ c2|φ′(0)|`. Each trial costs one `f` and one gradient call.
///
/// Near a minimizer the decrease `c1·α·φ′(0)` drops below the rounding in
/// `f`; a trial whose `φ` is within `APPROX_F_TOL·|f0|` of `f0` and which
/// meets the curvature condition is then accepted (approximate Wolfe).
#[allow(clippy::too_many_arguments)]
pub fn strong_wolfe(
    oracle: &SmoothOracle,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    alpha_init: f64,
    c1: f64,
    c2: f64,
) -> Result<LineSearchPoint, LineSearchError> {
    const MAX_EVALS: usize = 60;
    const ALPHA_MAX: f64 = 1e10;
    let dphi0 = dot(g0, p);
    if dphi0 >= 0.0 {
        return Err(LineSearchError::NotDescent(dphi0));
    }
    let mut evals = 0;
    let eval = |alpha: f64| {
        let xt = trial(x, p, alpha);
        let ft = oracle.f(&xt);
        let gt = oracle.grad(&xt);
        let s = Sample {
            alpha,
            phi: ft,
            dphi: dot(&gt, p),
        };
        (s, xt, gt)
    };
    let accept = |s: Sample, xt: Vec<f64>, gt: Vec<f64>, evals: usize| LineSearchPoint {
        alpha: s.alpha,
        x: xt,
        f: s.phi,
        g: Some(gt),
        evaluations: evals,
    };
    let armijo = |s: Sample| s.phi <= f0 + c1 * s.alpha * dphi0;
    let curvature = |s: Sample| s.dphi.abs() <= -c2 * dphi0;
    let approx_wolfe = |s: Sample| s.phi <= f0 + APPROX_F_TOL * f0.abs() && curvature(s);

    let mut prev = Sample {
        alpha: 0.0,
        phi: f0,
        dphi: dphi0,
    };
    let mut alpha = alpha_init.clamp(f64::MIN_POSITIVE, ALPHA_MAX);
    let (mut lo, mut hi);
    loop {
        let (s, xt, gt) = eval(alpha);
        evals += 1;
        if !s.phi.is_finite() {
            // Overshot into a region where f is undefined; treat as too long.
            lo = prev;
            hi = Sample {
                alpha,
                phi: f64::INFINITY,
                dphi: f64::INFINITY,
            };
            break;
        }
        if !armijo(s) && approx_wolfe(s) {
            return Ok(accept(s, xt, gt, evals));
        }
        if !armijo(s) || (evals > 1 && s.phi >= prev.phi) {
            lo = prev;
            hi = s;
            break;
        }
        if curvature(s) {
            return Ok(accept(s, xt, gt, evals));
        }
        if s.dphi >= 0.0 {
            lo = s;
            hi = prev;
            break;
        }
        if evals >= MAX_EVALS || alpha >= ALPHA_MAX {
            return Err(LineSearchError::Exhausted(evals));
        }
        prev = s;
        alpha = (2.0 * alpha).min(ALPHA_MAX);
    }
    // Zoom: `lo` satisfies Armijo and has the lowest φ seen; the minimizer
    // lies between `lo` and `hi`.
    while evals < MAX_EVALS {
        let a = if hi.phi.is_finite() {
            interpolate(lo, hi)
        } else {
            0.5 * (lo.alpha + hi.alpha)
        };
        if (a - lo.alpha).abs() <= f64::EPSILON * a.abs().max(1e-300) {
            break;
        }
        let (s, xt, gt) = eval(a);
        evals += 1;
        if s.phi.is_finite() && !armijo(s) && approx_wolfe(s) {
            return Ok(accept(s, xt, gt, evals));
        }
        if !s.phi.is_finite() || !armijo(s) || s.phi >= lo.phi {
            hi = s;
        } else {
            if curvature(s) {
                return Ok(accept(s, xt, gt, evals));
            }
            if s.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = s;
        }
    }
    Err(LineSearchError::Exhausted(evals))
}

/// Exact search: brackets a sign change of `φ′` by doubling from
/// `alpha_init`, then solves `φ′(α) = 0` by Illinois false position.
/// On a quadratic the first secant step is exact to rounding.
pub fn exact(
    oracle: &SmoothOracle,
    x: &[f64],
    g0: &[f64],
    p: &[f64],
    alpha_init: f64,
) -> Result<LineSearchPoint, LineSearchError> {
    const MAX_EVALS: usize = 200;
    let d0 = dot(g0, p);
    if d0 >= 0.0 {
        return Err(LineSearchError::NotDescent(d0));
    }
    let mut evals = 0;
    let dphi = |alpha: f64| {
        let xt = trial(x, p, alpha);
        let gt = oracle.grad(&xt);
        (dot(&gt, p), xt, gt)
    };
    let (mut lo, mut dlo) = (0.0, d0);
    let mut hi = alpha_init.max(f64::MIN_POSITIVE);
    let (mut dhi, mut best) = {
        let (d, xt, gt) = dphi(hi);
        evals += 1;
        (d, (hi, xt, gt))
    };
    while dhi < 0.0 {
        if evals >= MAX_EVALS {
            return Err(LineSearchError::Exhausted(evals));
        }
        lo = hi;
        dlo = dhi;
        hi *= 2.0;
        let (d, xt, gt) = dphi(hi);
        evals += 1;
        dhi = d;
        best = (hi, xt, gt);
    }
    let tol = 1e-14 * d0.abs();
    let mut side = 0i8;
    if dhi.abs() > tol {
        loop {
            if evals >= MAX_EVALS {
                return Err(LineSearchError::Exhausted(evals));
            }
            let a = (lo * dhi - hi * dlo) / (dhi - dlo);
            let a = if a > lo && a < hi { a } else { 0.5 * (lo + hi) };
            let (d, xt, gt) = dphi(a);
            evals += 1;
            best = (a, xt, gt);
            if d.abs() <= tol || hi - lo <= 1e-15 * hi {
                break;
            }
            if d < 0.0 {
                lo = a;
                dlo = d;
                if side == -1 {
                    dhi *= 0.5;
                }
                side = -1;
            } else {
                hi = a;
                dhi = d;
                if side == 1 {
                    dlo *= 0.5;
                }
                side = 1;
            }
        }
    }
    let (alpha, xt, gt) = best;
    let f = oracle.f(&xt);
    Ok(LineSearchPoint {
        alpha,
        x: xt,
        f,
        g: Some(gt),
        evaluations: evals,
    })
}
