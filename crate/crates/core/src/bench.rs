//! Convergence-rate fitting and the declarative experiment runner.
//!
//! An experiment is a JSON document naming problems, methods and seeds; every
//! `(problem, method, seed)` cell is solved independently, its trace written
//! to CSV, and a summary CSV collects iteration counts, oracle calls, the
//! final convergence measure `τ` and a fitted rate.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::first_order::{self as fo, Backtracking, CgVariant, PerturbedGd, StopRule};
use crate::ipm::{self, IpmParams};
use crate::lp::{gen_klee_minty, gen_random_feasible, LpInstance, PrimalDualPoint};
use crate::mps::{self, VariableMap};
use crate::pdhg::{self, PdhgParams, Restart, Variant};
use crate::second_order as so;
use crate::simplex::{solve_simplex, PivotRule, SimplexStatus};
use crate::smooth::{parse_params, problem_from_id, SmoothOracle};
use crate::trace::{RowFlags, SolveTrace, Status, Stopwatch, TraceFormat, TraceRow};

// ---- rate fitting ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateModel {
    /// `τ_k ≈ C·ρᵏ`.
    Linear(f64),
    /// `τ_k ≈ C·k⁻ᵖ`.
    Sublinear(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub model: RateModel,
    /// Inclusive iteration range used for the fit.
    pub window: (usize, usize),
    pub r2: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} samples in the fit window, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("value at iteration {0} is not a positive finite number")]
    NonPositiveValues(usize),
}

/// Smallest usable fit window.
pub const MIN_FIT_SAMPLES: usize = 5;

/// Least-squares line `y = a + b·x`; returns `(b, r²)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy <= f64::EPSILON * f64::EPSILON * n * (1.0 + my * my) {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, r2)
}

/// Default window: the middle 80% of `len` iterations, never including
/// iteration 0.
pub fn default_window(len: usize) -> (usize, usize) {
    let lo = ((len as f64 * 0.1).floor() as usize).max(1);
    let hi = ((len as f64 * 0.9).ceil() as usize)
        .saturating_sub(1)
        .min(len.saturating_sub(1));
    (lo, hi)
}

/// Fits `log τ_k` against `k` (linear model) and against `log k` (sublinear
/// model) on the inclusive window of iteration indices (`values[k] = τ_k`)
/// and returns whichever fits better. Iteration 0 is never used.
pub fn fit_rate(values: &[f64], window: Option<(usize, usize)>) -> Result<RateEstimate, FitError> {
    let (lo, hi) = window.unwrap_or_else(|| default_window(values.len()));
    let lo = lo.max(1);
    let hi = hi.min(values.len().saturating_sub(1));
    let got = if hi >= lo { hi - lo + 1 } else { 0 };
    if got < MIN_FIT_SAMPLES {
        return Err(FitError::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            got,
        });
    }
    if let Some(k) = (lo..=hi).find(|&k| !(values[k] > 0.0 && values[k].is_finite())) {
        return Err(FitError::NonPositiveValues(k));
    }
    let ks: Vec<f64> = (lo..=hi).map(|k| k as f64).collect();
    let logk: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let logt: Vec<f64> = (lo..=hi).map(|k| values[k].ln()).collect();
    let (b_lin, r2_lin) = least_squares(&ks, &logt);
    let (b_sub, r2_sub) = least_squares(&logk, &logt);
    let (model, r2) = if r2_lin >= r2_sub {
        (RateModel::Linear(b_lin.exp()), r2_lin)
    } else {
        (RateModel::Sublinear(-b_sub), r2_sub)
    };
    Ok(RateEstimate {
        model,
        window: (lo, hi),
        r2,
        samples: got,
    })
}

/// Leading run of positive finite values of a `τ` column.
pub fn positive_prefix(tau: &[Option<f64>]) -> Vec<f64> {
    tau.iter()
        .map_while(|v| v.filter(|x| *x > 0.0 && x.is_finite()))
        .collect()
}

/// Fits the positive prefix of `tau` with a window given as fractions of
/// its length.
pub fn fit_fraction(tau: &[Option<f64>], frac: (f64, f64)) -> Result<RateEstimate, FitError> {
    let vals = positive_prefix(tau);
    let len = vals.len();
    let lo = ((len as f64 * frac.0).floor() as usize).max(1);
    let hi = ((len as f64 * frac.1).ceil() as usize).saturating_sub(1);
    fit_rate(&vals, Some((lo, hi)))
}

// ---- problems and methods ----

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

fn config_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> BenchError {
    BenchError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// A constructed test problem.
pub enum Problem {
    Smooth {
        oracle: SmoothOracle,
        x0: Vec<f64>,
    },
    Lp {
        inst: LpInstance,
        /// Neighborhood start, available for generated random instances.
        start: Option<PrimalDualPoint>,
        /// Map back to an MPS model's original variables.
        map: Option<VariableMap>,
    },
}

impl Problem {
    fn family(&self) -> Family {
        match self {
            Problem::Smooth { .. } => Family::Smooth,
            Problem::Lp { .. } => Family::Lp,
        }
    }
}

/// Default starting point for a smooth problem: `(−1.2, 1, −1.2, 1, …)` for
/// Rosenbrock, the origin otherwise.
pub fn default_start(id: &str, dim: usize) -> Vec<f64> {
    if id.starts_with("rosenbrock") {
        (0..dim)
            .map(|i| if i % 2 == 0 { -1.2 } else { 1.0 })
            .collect()
    } else {
        vec![0.0; dim]
    }
}

/// Builds a problem from its id:
/// * `random:m=M,n=N,seed=S` — random feasible LP with a central start;
/// * `klee-minty:n=N` — Klee-Minty cube in standard form;
/// * a path ending in `.mps` — free-format MPS file;
/// * anything else — the smooth-problem registry
///   ([`problem_from_id`](crate::smooth::problem_from_id)).
pub fn build_problem(id: &str) -> Result<Problem, String> {
    if id.ends_with(".mps") || id.ends_with(".MPS") {
        let text = fs::read_to_string(id).map_err(|e| format!("cannot read {id}: {e}"))?;
        let model = mps::parse_mps(&text).map_err(|e| format!("{id}: {e}"))?;
        let (inst, map) = mps::mps_to_standard_form(&model).map_err(|e| format!("{id}: {e}"))?;
        return Ok(Problem::Lp {
            inst,
            start: None,
            map: Some(map),
        });
    }
    let (kind, rest) = id.split_once([':', ',']).unwrap_or((id, ""));
    let mut params = parse_params(id, rest).map_err(|e| e.to_string())?;
    let mut take = |key: &str| -> Result<usize, String> {
        params
            .remove(key)
            .ok_or_else(|| format!("problem '{id}': missing parameter '{key}'"))?
            .parse()
            .map_err(|_| format!("problem '{id}': invalid value for '{key}'"))
    };
    let built = match kind {
        "random" => {
            let (m, n, seed) = (take("m")?, take("n")?, take("seed")?);
            if m == 0 || n <= m {
                return Err(format!("problem '{id}': need 0 < m < n"));
            }
            let (inst, start) =
                gen_random_feasible(m, n, seed as u64).map_err(|e| e.to_string())?;
            Problem::Lp {
                inst,
                start: Some(start),
                map: None,
            }
        }
        "klee-minty" => {
            let n = take("n")?;
            if n == 0 {
                return Err(format!("problem '{id}': need n >= 1"));
            }
            Problem::Lp {
                inst: gen_klee_minty(n),
                start: None,
                map: None,
            }
        }
        _ => {
            let oracle = problem_from_id(id).map_err(|e| e.to_string())?;
            let x0 = default_start(id, oracle.dim());
            return Ok(Problem::Smooth { oracle, x0 });
        }
    };
    if let Some(k) = params.keys().next() {
        return Err(format!("problem '{id}': unknown parameter '{k}'"));
    }
    Ok(built)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Smooth,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Num,
    Int,
    Bool,
    /// `"none"`, `"adaptive"` or a positive period.
    Restart,
}

const METHODS: &[(&str, Family, &[(&str, Kind)])] = &[
    ("gd-fixed", Family::Smooth, &[("l", Kind::Num)]),
    (
        "gd-backtracking",
        Family::Smooth,
        &[
            ("alpha0", Kind::Num),
            ("c1", Kind::Num),
            ("shrink", Kind::Num),
        ],
    ),
    (
        "nesterov",
        Family::Smooth,
        &[("l", Kind::Num), ("mu", Kind::Num), ("convex", Kind::Bool)],
    ),
    (
        "heavy-ball",
        Family::Smooth,
        &[
            ("l", Kind::Num),
            ("mu", Kind::Num),
            ("alpha", Kind::Num),
            ("beta", Kind::Num),
        ],
    ),
    (
        "heavy-ball-modified",
        Family::Smooth,
        &[("l", Kind::Num), ("mu", Kind::Num)],
    ),
    ("bb", Family::Smooth, &[("first_step", Kind::Num)]),
    ("cg-fr", Family::Smooth, &[]),
    ("cg-prplus", Family::Smooth, &[]),
    ("bfgs", Family::Smooth, &[]),
    ("lbfgs", Family::Smooth, &[("m", Kind::Int)]),
    ("newton", Family::Smooth, &[]),
    ("trust-region", Family::Smooth, &[("delta0", Kind::Num)]),
    (
        "cubic-reg",
        Family::Smooth,
        &[("m0", Kind::Num), ("adaptive", Kind::Bool)],
    ),
    (
        "perturbed-gd",
        Family::Smooth,
        &[
            ("l", Kind::Num),
            ("eps_g", Kind::Num),
            ("radius", Kind::Num),
            ("window", Kind::Int),
        ],
    ),
    ("simplex-dantzig", Family::Lp, &[("pivot_limit", Kind::Int)]),
    ("simplex-bland", Family::Lp, &[("pivot_limit", Kind::Int)]),
    (
        "ipm-lpf",
        Family::Lp,
        &[
            ("gamma", Kind::Num),
            ("sigma_min", Kind::Num),
            ("sigma_max", Kind::Num),
        ],
    ),
    ("ipm-mpc", Family::Lp, &[]),
    ("pdhg", Family::Lp, &[("restart", Kind::Restart)]),
    ("pdhg-halpern", Family::Lp, &[("restart", Kind::Restart)]),
];

/// Registered method ids.
pub fn method_ids() -> impl Iterator<Item = &'static str> {
    METHODS.iter().map(|(id, _, _)| *id)
}

fn method_entry(
    id: &str,
) -> Option<&'static (&'static str, Family, &'static [(&'static str, Kind)])> {
    METHODS.iter().find(|(m, _, _)| *m == id)
}

/// A method id with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl MethodSpec {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Checks the id and every parameter's name and type.
    pub fn validate(&self) -> Result<(), String> {
        let (_, _, keys) =
            method_entry(&self.id).ok_or_else(|| format!("unknown method '{}'", self.id))?;
        for (k, v) in &self.params {
            let kind = keys
                .iter()
                .find(|(name, _)| name == k)
                .map(|(_, kind)| *kind)
                .ok_or_else(|| format!("method '{}': unknown parameter '{k}'", self.id))?;
            let ok = match kind {
                Kind::Num => v.as_f64().is_some(),
                Kind::Int => v.as_u64().is_some(),
                Kind::Bool => v.is_boolean(),
                Kind::Restart => {
                    v.as_u64().is_some_and(|p| p > 0)
                        || matches!(v.as_str(), Some("none") | Some("adaptive"))
                }
            };
            if !ok {
                return Err(format!("method '{}': invalid value {v} for '{k}'", self.id));
            }
        }
        Ok(())
    }

    fn num(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(Value::as_f64)
    }

    fn int(&self, key: &str) -> Option<usize> {
        self.params
            .get(key)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
    }

    fn flag(&self, key: &str) -> Option<bool> {
        self.params.get(key).and_then(Value::as_bool)
    }

    fn restart(&self) -> Restart {
        match self.params.get("restart") {
            Some(v) if v.as_str() == Some("none") => Restart::None,
            Some(v) => v
                .as_u64()
                .map_or(Restart::Adaptive, |p| Restart::Fixed(p as usize)),
            None => Restart::Adaptive,
        }
    }
}

/// Stopping rule shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub gap_tol: Option<f64>,
    /// Tolerance for the LP solvers.
    #[serde(default = "default_lp_tol")]
    pub tol: f64,
}

fn default_max_iter() -> usize {
    1000
}

fn default_lp_tol() -> f64 {
    1e-8
}

impl Default for StopSpec {
    fn default() -> Self {
        Self {
            max_iter: default_max_iter(),
            grad_tol: None,
            gap_tol: None,
            tol: default_lp_tol(),
        }
    }
}

impl StopSpec {
    fn rule(&self) -> StopRule {
        StopRule {
            max_iter: self.max_iter,
            grad_tol: self.grad_tol,
            gap_tol: self.gap_tol,
            f_target: None,
            stop_on_increase: false,
            record_iterates: false,
        }
    }

    /// Whether a smooth run was asked to reach a tolerance rather than just
    /// spend an iteration budget.
    fn has_target(&self) -> bool {
        self.grad_tol.is_some() || self.gap_tol.is_some()
    }
}

/// Result of one solve.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub trace: SolveTrace,
    pub format: TraceFormat,
    /// Convergence measure per trace row.
    pub tau: Vec<Option<f64>>,
    pub status: String,
    /// Whether the status counts as success.
    pub success: bool,
    /// Objective in the problem's original form.
    pub objective: Option<f64>,
}

impl CellOutcome {
    /// Trace CSV with a trailing `tau` column.
    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        let mut buf = Vec::new();
        self.trace.write_csv(self.format, &mut buf)?;
        let text = String::from_utf8(buf).expect("trace CSV is UTF-8");
        for (i, line) in text.lines().enumerate() {
            let extra = if i == 0 {
                "tau".to_string()
            } else {
                self.tau[i - 1].map(|v| v.to_string()).unwrap_or_default()
            };
            writeln!(out, "{line},{extra}")?;
        }
        Ok(())
    }
}

fn smooth_tau(trace: &SolveTrace, oracle: &SmoothOracle) -> Vec<Option<f64>> {
    match oracle.meta.f_star {
        Some(fs) => trace.rows.iter().map(|r| r.f.map(|f| f - fs)).collect(),
        None => trace.rows.iter().map(|r| r.grad_norm).collect(),
    }
}

fn status_success(status: Status, has_target: bool) -> bool {
    status.is_success() || (status == Status::IterationLimit && !has_target)
}

fn run_smooth(
    oracle: &SmoothOracle,
    x0: &[f64],
    method: &MethodSpec,
    seed: u64,
    stop: &StopSpec,
) -> Result<CellOutcome, String> {
    let rule = stop.rule();
    let meta = &oracle.meta;
    let need = |v: Option<f64>, what: &str| -> Result<f64, String> {
        v.ok_or_else(|| {
            format!(
                "method '{}' needs {what}: pass it as a parameter or use a problem that knows it",
                method.id
            )
        })
    };
    let l = || need(method.num("l").or(meta.l), "the Lipschitz constant 'l'");
    let mu = || {
        need(
            method.num("mu").or(meta.mu),
            "the strong-convexity constant 'mu'",
        )
    };
    let so_err = |e: so::SecondOrderError| e.to_string();
    let (trace, format) = match method.id.as_str() {
        "gd-fixed" => (
            fo::gd_fixed(oracle, x0, l()?, &rule),
            TraceFormat::FirstOrder,
        ),
        "gd-backtracking" => {
            let d = Backtracking::default();
            let p = Backtracking {
                alpha0: method.num("alpha0").unwrap_or(d.alpha0),
                c1: method.num("c1").unwrap_or(d.c1),
                shrink: method.num("shrink").unwrap_or(d.shrink),
            };
            (
                fo::gd_backtracking(oracle, x0, p, &rule),
                TraceFormat::FirstOrder,
            )
        }
        "nesterov" => {
            let convex = method.flag("convex").unwrap_or(false);
            let m = if convex {
                None
            } else {
                method.num("mu").or(meta.mu)
            };
            (
                fo::nesterov(oracle, x0, l()?, m, &rule),
                TraceFormat::FirstOrder,
            )
        }
        "heavy-ball" => {
            let (a, b) = match (method.num("alpha"), method.num("beta")) {
                (Some(a), Some(b)) => (a, b),
                _ => fo::polyak_params(l()?, mu()?),
            };
            (
                fo::heavy_ball(oracle, x0, a, b, &rule),
                TraceFormat::FirstOrder,
            )
        }
        "heavy-ball-modified" => (
            fo::heavy_ball_modified(oracle, x0, l()?, mu()?, &rule),
            TraceFormat::FirstOrder,
        ),
        "bb" => (
            fo::barzilai_borwein(oracle, x0, method.num("first_step"), &rule),
            TraceFormat::FirstOrder,
        ),
        "cg-fr" | "cg-prplus" => {
            let v = if method.id == "cg-fr" {
                CgVariant::FletcherReeves
            } else {
                CgVariant::PolakRibierePlus
            };
            (
                fo::nonlinear_cg(oracle, x0, v, fo::CG_WOLFE, &rule),
                TraceFormat::FirstOrder,
            )
        }
        "bfgs" => (so::bfgs(oracle, x0, &rule), TraceFormat::FirstOrder),
        "lbfgs" => (
            so::lbfgs(oracle, x0, method.int("m").unwrap_or(10), &rule),
            TraceFormat::FirstOrder,
        ),
        "newton" => (
            so::newton_solve(oracle, x0, &rule).map_err(so_err)?,
            TraceFormat::SecondOrder,
        ),
        "trust-region" => {
            let delta0 = method.num("delta0").unwrap_or(1.0);
            (
                so::trust_region_newton(oracle, x0, delta0, &rule).map_err(so_err)?,
                TraceFormat::SecondOrder,
            )
        }
        "cubic-reg" => {
            let m0 = method.num("m0").or(meta.hess_lipschitz).unwrap_or(1.0);
            let adaptive = method.flag("adaptive").unwrap_or(true);
            (
                so::cubic_reg(oracle, x0, m0, adaptive, &rule).map_err(so_err)?,
                TraceFormat::SecondOrder,
            )
        }
        "perturbed-gd" => {
            let p = PerturbedGd {
                l: l()?,
                eps_g: method.num("eps_g").unwrap_or(1e-3),
                radius: method.num("radius").unwrap_or(1e-2),
                escape_window: method.int("window").unwrap_or(50),
                seed,
            };
            (
                fo::perturbed_gd(oracle, x0, p, &rule),
                TraceFormat::FirstOrder,
            )
        }
        other => {
            return Err(format!(
                "method '{other}' does not apply to smooth problems"
            ))
        }
    };
    let tau = smooth_tau(&trace, oracle);
    Ok(CellOutcome {
        success: status_success(trace.status, stop.has_target()),
        status: trace.status.as_str().to_string(),
        objective: trace.objective,
        tau,
        format,
        trace,
    })
}

fn simplex_trace(inst: &LpInstance, rule: PivotRule, limit: usize) -> (SolveTrace, SimplexStatus) {
    let clock = Stopwatch::start();
    let res = solve_simplex(inst, rule, limit);
    let mut trace = SolveTrace::new(match rule {
        PivotRule::Dantzig => "simplex-dantzig",
        PivotRule::Bland => "simplex-bland",
    });
    if res.start_objective.is_finite() {
        trace.rows.push(TraceRow {
            iter: 0,
            f: Some(res.start_objective),
            gap: Some(res.start_objective - res.objective),
            time_ns: clock.elapsed_ns(),
            ..Default::default()
        });
    }
    for p in &res.trace {
        trace.rows.push(TraceRow {
            iter: p.pivot_index,
            f: Some(p.objective),
            gap: Some(p.objective - res.objective),
            flags: if p.degenerate {
                RowFlags::DEGENERATE
            } else {
                RowFlags::empty()
            },
            time_ns: clock.elapsed_ns(),
            ..Default::default()
        });
    }
    trace.status = match res.status {
        SimplexStatus::Optimal => Status::Converged,
        SimplexStatus::PivotLimit => Status::IterationLimit,
        SimplexStatus::Unbounded | SimplexStatus::Infeasible => Status::NumericalBreakdown,
    };
    trace.x = res.x;
    trace.objective = Some(res.objective);
    (trace, res.status)
}

fn run_lp(
    inst: &LpInstance,
    start: Option<&PrimalDualPoint>,
    map: Option<&VariableMap>,
    method: &MethodSpec,
    stop: &StopSpec,
) -> Result<CellOutcome, String> {
    let ipm_params = || IpmParams {
        gamma: method.num("gamma").unwrap_or(IpmParams::default().gamma),
        sigma_min: method
            .num("sigma_min")
            .unwrap_or(IpmParams::default().sigma_min),
        sigma_max: method
            .num("sigma_max")
            .unwrap_or(IpmParams::default().sigma_max),
        tol: stop.tol,
        max_iter: stop.max_iter,
    };
    let column = |trace: &SolveTrace, name: &str| trace.column(name).expect("known column");
    let (trace, format, tau, status) = match method.id.as_str() {
        "simplex-dantzig" | "simplex-bland" => {
            let rule = if method.id == "simplex-dantzig" {
                PivotRule::Dantzig
            } else {
                PivotRule::Bland
            };
            let limit = method.int("pivot_limit").unwrap_or(stop.max_iter);
            let (trace, st) = simplex_trace(inst, rule, limit);
            let tau = column(&trace, "gap");
            let status = match st {
                SimplexStatus::Optimal => "converged",
                SimplexStatus::PivotLimit => "iteration_limit",
                SimplexStatus::Unbounded => "unbounded",
                SimplexStatus::Infeasible => "infeasible",
            };
            (trace, TraceFormat::Simplex, tau, status.to_string())
        }
        "ipm-lpf" => {
            let start = start
                .ok_or("ipm-lpf needs a neighborhood start; only random: problems provide one")?;
            let trace = ipm::solve_lpf(inst, start, &ipm_params()).map_err(|e| e.to_string())?;
            let tau = column(&trace, "mu");
            let st = trace.status.as_str().to_string();
            (trace, TraceFormat::Ipm, tau, st)
        }
        "ipm-mpc" => {
            let trace = ipm::solve_mpc(inst, &ipm_params(), None).map_err(|e| e.to_string())?;
            let tau = column(&trace, "mu");
            let st = trace.status.as_str().to_string();
            (trace, TraceFormat::Ipm, tau, st)
        }
        "pdhg" | "pdhg-halpern" => {
            let variant = if method.id == "pdhg" {
                Variant::Plain
            } else {
                Variant::Halpern
            };
            let params =
                PdhgParams::default_for(inst, variant, method.restart(), stop.tol, stop.max_iter);
            let trace = pdhg::solve_pdhg(inst, &params).map_err(|e| e.to_string())?;
            let tau = trace
                .rows
                .iter()
                .map(|r| match (r.kkt_last, r.kkt_avg) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                })
                .collect();
            let st = trace.status.as_str().to_string();
            (trace, TraceFormat::Pdhg, tau, st)
        }
        other => return Err(format!("method '{other}' does not apply to LP problems")),
    };
    let objective = trace
        .objective
        .map(|v| map.map_or(v, |m| m.original_objective(v)));
    Ok(CellOutcome {
        success: status == "converged",
        status,
        objective,
        tau,
        format,
        trace,
    })
}

/// Solves `problem` with `method`; `seed` feeds randomized methods.
pub fn run_method(
    problem: &Problem,
    method: &MethodSpec,
    seed: u64,
    stop: &StopSpec,
) -> Result<CellOutcome, String> {
    method.validate()?;
    match problem {
        Problem::Smooth { oracle, x0 } => run_smooth(&oracle.fresh(), x0, method, seed, stop),
        Problem::Lp { inst, start, map } => {
            run_lp(inst, start.as_ref(), map.as_ref(), method, stop)
        }
    }
}

// ---- experiments ----

/// Declarative experiment. Problem ids may contain `{seed}`, replaced by each
/// seed in turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub problems: Vec<String>,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Output directory, used when none is given on the command line.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Rate-fit window as fractions of the positive `τ` prefix.
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// Environment variable that replaces the config's seed list
/// (comma-separated integers). It takes precedence over the config file.
pub const SEED_ENV: &str = "OPTLAB_SEED";

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text)
    }

    /// Seeds after applying an override value of [`SEED_ENV`].
    pub fn resolve_seeds(&self, env_value: Option<&str>) -> Result<Vec<u64>, BenchError> {
        match env_value {
            None => Ok(self.seeds.clone()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| {
                    config_err(format!(
                        "{SEED_ENV}='{v}' is not a comma-separated list of integers"
                    ))
                }),
        }
    }

    /// Checks everything that can be checked without solving: non-empty
    /// lists, method ids and parameters, problem ids, and that every method
    /// applies to every problem.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.problems.is_empty() || self.methods.is_empty() || self.seeds.is_empty() {
            return Err(config_err("problems, methods and seeds must be non-empty"));
        }
        if let Some((a, b)) = self.fit_window {
            if !(0.0..1.0).contains(&a) || !(a < b && b <= 1.0) {
                return Err(config_err("fit_window must satisfy 0 <= lo < hi <= 1"));
            }
        }
        for m in &self.methods {
            m.validate().map_err(config_err)?;
        }
        for p in &self.problems {
            let id = p.replace("{seed}", &self.seeds[0].to_string());
            let family = problem_family(&id).map_err(config_err)?;
            for m in &self.methods {
                let (_, mf, _) = method_entry(&m.id).expect("validated");
                if *mf != family {
                    return Err(config_err(format!(
                        "method '{}' does not apply to problem '{p}'",
                        m.id
                    )));
                }
            }
        }
        Ok(())
    }
}

fn problem_family(id: &str) -> Result<Family, String> {
    if id.ends_with(".mps") || id.ends_with(".MPS") {
        if !Path::new(id).is_file() {
            return Err(format!("MPS file '{id}' not found"));
        }
        return Ok(Family::Lp);
    }
    if id.starts_with("random:") || id.starts_with("klee-minty:") {
        // Cheap for the small generated instances used in configs.
        return build_problem(id).map(|p| p.family());
    }
    problem_from_id(id)
        .map(|_| Family::Smooth)
        .map_err(|e| e.to_string())
}

/// One summary row per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub problem: String,
    pub method: String,
    pub seed: u64,
    pub status: String,
    pub iterations: Option<usize>,
    pub f_calls: Option<u64>,
    pub grad_calls: Option<u64>,
    pub hess_calls: Option<u64>,
    pub hvp_calls: Option<u64>,
    pub objective: Option<f64>,
    pub final_tau: Option<f64>,
    pub rate_model: String,
    pub rate: Option<f64>,
    pub rate_r2: Option<f64>,
    pub trace_file: String,
    /// The only column that varies between identical runs.
    pub wall_time_s: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub rows: Vec<SummaryRow>,
    pub summary_path: PathBuf,
}

struct Cell {
    index: usize,
    problem: String,
    method: MethodSpec,
    seed: u64,
}

fn sanitize(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    out.truncate(48);
    out
}

fn run_cell(cell: &Cell, stop: &StopSpec, frac: (f64, f64)) -> (SummaryRow, Option<CellOutcome>) {
    let clock = Stopwatch::start();
    let trace_file = format!(
        "cell{:03}_{}_{}_s{}.csv",
        cell.index,
        sanitize(&cell.problem),
        cell.method.id,
        cell.seed
    );
    let mut row = SummaryRow {
        cell: cell.index,
        problem: cell.problem.clone(),
        method: cell.method.id.clone(),
        seed: cell.seed,
        status: "error".into(),
        iterations: None,
        f_calls: None,
        grad_calls: None,
        hess_calls: None,
        hvp_calls: None,
        objective: None,
        final_tau: None,
        rate_model: "none".into(),
        rate: None,
        rate_r2: None,
        trace_file: String::new(),
        wall_time_s: 0.0,
        message: String::new(),
    };
    let result = catch_unwind(AssertUnwindSafe(|| {
        let problem = build_problem(&cell.problem)?;
        run_method(&problem, &cell.method, cell.seed, stop)
    }));
    let outcome = match result {
        Ok(Ok(o)) => Some(o),
        Ok(Err(msg)) => {
            row.message = msg;
            None
        }
        Err(panic) => {
            row.status = "panic".into();
            row.message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            None
        }
    };
    if let Some(o) = &outcome {
        row.status = o.status.clone();
        row.iterations = Some(o.trace.iterations());
        if let Some(last) = o.trace.rows.last() {
            row.f_calls = Some(last.calls.f);
            row.grad_calls = Some(last.calls.grad);
            row.hess_calls = Some(last.calls.hess);
            row.hvp_calls = Some(last.calls.hvp);
        }
        row.objective = o.objective;
        row.final_tau = o.tau.iter().rev().find_map(|v| *v);
        if let Ok(fit) = fit_fraction(&o.tau, frac) {
            let (name, v) = match fit.model {
                RateModel::Linear(r) => ("linear", r),
                RateModel::Sublinear(p) => ("sublinear", p),
            };
            row.rate_model = name.into();
            row.rate = Some(v);
            row.rate_r2 = Some(fit.r2);
        }
        row.trace_file = trace_file;
    }
    row.wall_time_s = clock.elapsed_ns() as f64 * 1e-9;
    (row, outcome)
}

/// Runs every `(problem, method, seed)` cell on `workers` threads and writes
/// one trace CSV per solved cell plus `summary.csv` into `out_dir`. Results
/// do not depend on the worker count. Seeds come from [`SEED_ENV`] when set.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<ExperimentSummary, BenchError> {
    cfg.validate()?;
    let env = std::env::var(SEED_ENV).ok();
    let seeds = cfg.resolve_seeds(env.as_deref())?;
    let mut cells = Vec::new();
    for p in &cfg.problems {
        for m in &cfg.methods {
            for &seed in &seeds {
                cells.push(Cell {
                    index: cells.len(),
                    problem: p.replace("{seed}", &seed.to_string()),
                    method: m.clone(),
                    seed,
                });
            }
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let frac = cfg.fit_window.unwrap_or((0.1, 0.9));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| config_err(e.to_string()))?;
    let results: Vec<(SummaryRow, Option<CellOutcome>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(c, &cfg.stop, frac))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for (row, outcome) in results {
        if let Some(o) = outcome {
            let path = out_dir.join(&row.trace_file);
            let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            o.write_csv(io::BufWriter::new(file))
                .map_err(|e| io_err(&path, e))?;
        }
        rows.push(row);
    }
    let summary_path = out_dir.join("summary.csv");
    write_summary(&rows, &summary_path)?;
    Ok(ExperimentSummary { rows, summary_path })
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, BenchError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| io_err(path, e)))
        .collect()
}

/// Reads one column of a trace CSV; empty cells become `None`.
pub fn read_trace_column(path: &Path, column: &str) -> Result<Vec<Option<f64>>, BenchError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = r.headers().map_err(|e| io_err(path, e))?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| config_err(format!("column '{column}' not in {}", path.display())))?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let field = rec.get(idx).unwrap_or("");
        if field.is_empty() {
            out.push(None);
        } else {
            let v = field.parse().map_err(|_| {
                config_err(format!(
                    "{}: row {}: '{field}' is not a number",
                    path.display(),
                    line + 2
                ))
            })?;
            out.push(Some(v));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::{linear_spectrum, make_quadratic_spectrum};
    use proptest::prelude::*;

    #[test]
    fn fit_synthetic_models() {
        let geo: Vec<f64> = (0..200).map(|k| 0.9f64.powi(k)).collect();
        let fit = fit_rate(&geo, None).unwrap();
        match fit.model {
            RateModel::Linear(r) => assert!((r - 0.9).abs() <= 1e-6),
            m => panic!("{m:?}"),
        }
        assert!(fit.r2 >= 0.999999);
        let sub: Vec<f64> = (0..200)
            .map(|k| 5.0 / ((k.max(1) as f64).powi(2)))
            .collect();
        match fit_rate(&sub, None).unwrap().model {
            RateModel::Sublinear(p) => assert!((p - 2.0).abs() <= 1e-6),
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_rate(&[1.0, 0.5, 0.25], None),
            Err(FitError::InsufficientData { .. })
        ));
        let v = vec![1.0, 0.5, 0.0, 0.1, 0.1, 0.1, 0.1];
        assert_eq!(
            fit_rate(&v, Some((1, 6))),
            Err(FitError::NonPositiveValues(2))
        );
    }

    #[test]
    fn fit_gd_on_quadratic() {
        let q = make_quadratic_spectrum(&linear_spectrum(20, 100.0), 1);
        let o = q.oracle("q");
        let t = fo::gd_fixed(&o, &[0.0; 20], 100.0, &StopRule::iterations(600));
        let tau: Vec<f64> = t
            .rows
            .iter()
            .map(|r| r.f.unwrap() - q.meta.f_star.unwrap())
            .collect();
        match fit_rate(&tau, Some((50, 500))).unwrap().model {
            RateModel::Linear(r) => {
                assert!((1.0 - 1.0 / 50.0..=1.0 - 1.0 / 200.0).contains(&r), "{r}")
            }
            m => panic!("{m:?}"),
        }
    }

    proptest! {
        #[test]
        fn fit_is_scale_invariant(c in 1e-6f64..1e6, rho in 0.5f64..0.99) {
            let v: Vec<f64> = (0..60).map(|k| rho.powi(k) * (1.0 + 0.1 * (k as f64).sin())).collect();
            let w: Vec<f64> = v.iter().map(|x| c * x).collect();
            let a = fit_rate(&v, None).unwrap();
            let b = fit_rate(&w, None).unwrap();
            let val = |m: RateModel| match m { RateModel::Linear(x) | RateModel::Sublinear(x) => x };
            prop_assert!((val(a.model) - val(b.model)).abs() <= 1e-9 * val(a.model).abs().max(1.0));
        }
    }

    #[test]
    fn config_rejects_unknown_keys_and_methods() {
        let ok = r#"{"problems":["quad:kappa=10,n=5,seed=1"],"methods":[{"id":"gd-fixed"}]}"#;
        assert!(ExperimentConfig::from_json(ok).is_ok());
        let extra = r#"{"problems":["saddle"],"methods":[{"id":"gd-fixed"}],"colour":1}"#;
        assert!(ExperimentConfig::from_json(extra).is_err());
        let bad_method = r#"{"problems":["saddle"],"methods":[{"id":"gd-fancy"}]}"#;
        assert!(ExperimentConfig::from_json(bad_method).is_err());
        let bad_param =
            r#"{"problems":["saddle"],"methods":[{"id":"lbfgs","params":{"m":"five"}}]}"#;
        assert!(ExperimentConfig::from_json(bad_param).is_err());
        let mismatch = r#"{"problems":["klee-minty:n=3"],"methods":[{"id":"bfgs"}]}"#;
        assert!(ExperimentConfig::from_json(mismatch).is_err());
    }

    #[test]
    fn seed_override() {
        let cfg = ExperimentConfig::from_json(
            r#"{"problems":["saddle"],"methods":[{"id":"bb"}],"seeds":[1,2]}"#,
        )
        .unwrap();
        assert_eq!(cfg.resolve_seeds(None).unwrap(), vec![1, 2]);
        assert_eq!(cfg.resolve_seeds(Some("7, 8,9")).unwrap(), vec![7, 8, 9]);
        assert!(cfg.resolve_seeds(Some("x")).is_err());
    }
}
