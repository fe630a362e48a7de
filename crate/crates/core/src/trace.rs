//! Per-iteration solve logs and their CSV exports.

use std::io::{self, Write};
use std::time::Instant;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

bitflags! {
    /// Per-row event markers.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
    pub struct RowFlags: u32 {
        const RESTART = 1;
        const DEGENERATE = 1 << 1;
        const SKIPPED_UPDATE = 1 << 2;
        const NEGATIVE_CURVATURE = 1 << 3;
        const BOUNDARY = 1 << 4;
        const DEGENERATE_CURVATURE = 1 << 5;
        const PERTURBED = 1 << 6;
        const NOT_POSITIVE_DEFINITE = 1 << 7;
        const REJECTED = 1 << 8;
    }
}

impl RowFlags {
    fn label(self) -> String {
        let names: Vec<&str> = self.iter_names().map(|(n, _)| n).collect();
        names.join("|").to_ascii_lowercase()
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    IterationLimit,
    Divergence,
    LineSearchFail,
    NumericalBreakdown,
    StalledRadius,
    SubproblemFail,
    /// Perturbed GD stopped at an approximate second-order point.
    SecondOrderPoint,
}

impl Status {
    pub fn is_success(self) -> bool {
        matches!(self, Status::Converged | Status::SecondOrderPoint)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::IterationLimit => "iteration_limit",
            Status::Divergence => "divergence",
            Status::LineSearchFail => "line_search_fail",
            Status::NumericalBreakdown => "numerical_breakdown",
            Status::StalledRadius => "stalled_radius",
            Status::SubproblemFail => "subproblem_fail",
            Status::SecondOrderPoint => "second_order_point",
        }
    }
}

/// Cumulative oracle call counts at the time a row was logged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CallCounts {
    pub f: u64,
    pub grad: u64,
    pub hess: u64,
    pub hvp: u64,
}

/// One logged iteration. Fields a solver does not produce stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub f: Option<f64>,
    pub grad_norm: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub primal_res: Option<f64>,
    pub dual_res: Option<f64>,
    pub kkt_last: Option<f64>,
    pub kkt_avg: Option<f64>,
    /// Best KKT residual seen so far (nonincreasing by construction).
    pub kkt_best: Option<f64>,
    pub gap: Option<f64>,
    pub step_len: Option<f64>,
    pub beta: Option<f64>,
    pub delta_or_m: Option<f64>,
    pub rho_ratio: Option<f64>,
    pub calls: CallCounts,
    pub flags: RowFlags,
    pub time_ns: u64,
}

/// Result of an iterative solve: the final point plus the iteration log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveTrace {
    pub method: String,
    pub status: Status,
    pub rows: Vec<TraceRow>,
    /// Final primal iterate.
    pub x: Vec<f64>,
    /// Final dual multipliers, for LP solvers.
    pub lambda: Option<Vec<f64>>,
    /// Final dual slacks, for LP solvers.
    pub s: Option<Vec<f64>>,
    /// Final objective value.
    pub objective: Option<f64>,
    /// Every iterate, when the solver was asked to record them.
    #[serde(default)]
    pub iterates: Vec<Vec<f64>>,
}

impl SolveTrace {
    pub fn new(method: impl Into<String>) -> Self {
        Self {
            method: method.into(),
            status: Status::IterationLimit,
            rows: Vec::new(),
            x: Vec::new(),
            lambda: None,
            s: None,
            objective: None,
            iterates: Vec::new(),
        }
    }

    /// Number of completed iterations (rows after the initial one).
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Values of a named column; `None` where the row has no value.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let get: fn(&TraceRow) -> Option<f64> = match name {
            "iter" => |r| Some(r.iter as f64),
            "f" => |r| r.f,
            "grad_norm" => |r| r.grad_norm,
            "mu" => |r| r.mu,
            "sigma" => |r| r.sigma,
            "alpha" => |r| r.alpha,
            "primal_res" => |r| r.primal_res,
            "dual_res" => |r| r.dual_res,
            "kkt_last" => |r| r.kkt_last,
            "kkt_avg" => |r| r.kkt_avg,
            "kkt_best" => |r| r.kkt_best,
            "gap" => |r| r.gap,
            "step_len" => |r| r.step_len,
            "beta" => |r| r.beta,
            "delta_or_m" => |r| r.delta_or_m,
            "rho_ratio" => |r| r.rho_ratio,
            _ => return None,
        };
        Some(self.rows.iter().map(get).collect())
    }

    pub fn write_csv<W: Write>(&self, format: TraceFormat, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", format.columns().join(","))?;
        for r in &self.rows {
            let fields: Vec<String> = format
                .columns()
                .iter()
                .map(|c| format_field(r, c))
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Column layout of an exported trace, one per solver family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Ipm,
    Pdhg,
    FirstOrder,
    SecondOrder,
    /// Phase-2 simplex pivots: objective and gap to the final objective.
    Simplex,
}

impl TraceFormat {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            TraceFormat::Ipm => &[
                "iter",
                "mu",
                "sigma",
                "alpha",
                "primal_res",
                "dual_res",
                "time_ns",
            ],
            TraceFormat::Pdhg => &[
                "iter",
                "kkt_last",
                "kkt_avg",
                "gap",
                "restart_flag",
                "time_ns",
            ],
            TraceFormat::FirstOrder => &[
                "iter",
                "f",
                "grad_norm",
                "step_len",
                "beta",
                "oracle_grad_calls",
                "oracle_f_calls",
                "flags",
            ],
            TraceFormat::Simplex => &["iter", "f", "gap", "flags"],
            TraceFormat::SecondOrder => &[
                "iter",
                "f",
                "grad_norm",
                "step_len",
                "beta",
                "oracle_grad_calls",
                "oracle_f_calls",
                "flags",
                "delta_or_m",
                "rho_ratio",
                "negcurv_flag",
                "hvp_calls",
            ],
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn format_field(r: &TraceRow, col: &str) -> String {
    match col {
        "iter" => r.iter.to_string(),
        "time_ns" => r.time_ns.to_string(),
        "restart_flag" => u8::from(r.flags.contains(RowFlags::RESTART)).to_string(),
        "negcurv_flag" => u8::from(r.flags.contains(RowFlags::NEGATIVE_CURVATURE)).to_string(),
        "oracle_grad_calls" => r.calls.grad.to_string(),
        "oracle_f_calls" => r.calls.f.to_string(),
        "hvp_calls" => r.calls.hvp.to_string(),
        "flags" => r.flags.label(),
        "f" => opt(r.f),
        "grad_norm" => opt(r.grad_norm),
        "mu" => opt(r.mu),
        "sigma" => opt(r.sigma),
        "alpha" => opt(r.alpha),
        "primal_res" => opt(r.primal_res),
        "dual_res" => opt(r.dual_res),
        "kkt_last" => opt(r.kkt_last),
        "kkt_avg" => opt(r.kkt_avg),
        "gap" => opt(r.gap),
        "step_len" => opt(r.step_len),
        "beta" => opt(r.beta),
        "delta_or_m" => opt(r.delta_or_m),
        "rho_ratio" => opt(r.rho_ratio),
        other => unreachable!("unknown trace column {other}"),
    }
}

/// Monotone nanosecond clock for trace rows.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn elapsed_ns(&self) -> u64 {
        u64::try_from(self.0.elapsed().as_nanos()).unwrap_or(u64::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_blank_missing_fields() {
        let mut t = SolveTrace::new("demo");
        t.rows.push(TraceRow {
            iter: 0,
            mu: Some(0.5),
            ..Default::default()
        });
        t.rows.push(TraceRow {
            iter: 1,
            mu: Some(0.1),
            sigma: Some(0.3),
            flags: RowFlags::RESTART | RowFlags::BOUNDARY,
            ..Default::default()
        });
        let mut buf = Vec::new();
        t.write_csv(TraceFormat::Ipm, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iter,mu,sigma,alpha,primal_res,dual_res,time_ns");
        assert_eq!(lines[1], "0,0.5,,,,,0");
        assert_eq!(lines[2], "1,0.1,0.3,,,,0");
        assert!(!text.contains('\r'));
        assert_eq!(t.iterations(), 1);
    }

    #[test]
    fn flags_label() {
        assert_eq!(
            (RowFlags::RESTART | RowFlags::BOUNDARY).label(),
            "restart|boundary"
        );
        assert_eq!(RowFlags::empty().label(), "");
    }
}
