//! The `optlab` command line. Exit codes: 0 success, 1 solver finished
//! without the requested optimality, 2 usage, configuration or parse error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::bench::{
    self, build_problem, fit_rate, positive_prefix, ExperimentConfig, MethodSpec, Problem,
    RateModel, StopSpec,
};
use crate::mps;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_OPTIMAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "optlab",
    version,
    about = "LP and smooth-minimization solvers with a rate-benchmarking harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Linear programs.
    #[command(subcommand)]
    Lp(LpCommand),
    /// MPS files.
    #[command(subcommand)]
    Mps(MpsCommand),
    /// Smooth unconstrained minimization.
    #[command(subcommand)]
    Min(MinCommand),
    /// Experiments.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Fit a linear or sublinear rate to one column of a trace CSV.
    FitRate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        column: String,
        /// Inclusive iteration window `LO:HI` (default: middle 80%).
        #[arg(long, value_parser = parse_window)]
        window: Option<(usize, usize)>,
    },
}

#[derive(Debug, Subcommand)]
enum LpCommand {
    /// Solve an LP from a generator id or an MPS file.
    Solve {
        #[arg(long)]
        method: String,
        #[command(flatten)]
        source: LpSource,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, Value)>,
        /// Trace CSV destination.
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Write a generated LP as MPS (or JSON if the path ends in .json).
    Gen {
        #[arg(long)]
        gen: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct LpSource {
    /// `random:m=M,n=N,seed=S` or `klee-minty:n=N`.
    #[arg(long)]
    gen: Option<String>,
    /// Free-format MPS file.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum MpsCommand {
    /// Parse and summarize an MPS file.
    Check { file: PathBuf },
}

#[derive(Debug, Subcommand)]
enum MinCommand {
    /// Minimize a registry problem.
    Solve {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long)]
        grad_tol: Option<f64>,
        #[arg(long)]
        gap_tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, Value)>,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Run an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected LO:HI")?;
    Ok((
        a.parse().map_err(|_| format!("bad LO '{a}'"))?,
        b.parse().map_err(|_| format!("bad HI '{b}'"))?,
    ))
}

/// `key=value`; the value is read as JSON when possible, else as a string.
fn parse_param(s: &str) -> Result<(String, Value), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

fn method_spec(id: &str, params: Vec<(String, Value)>) -> MethodSpec {
    MethodSpec {
        id: id.to_string(),
        params: params.into_iter().collect(),
    }
}

fn write_trace(outcome: &bench::CellOutcome, path: &Path) -> Result<(), String> {
    let file =
        fs::File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    outcome
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn report(outcome: &bench::CellOutcome, out: &Path, stdout: &mut dyn Write) -> i32 {
    if let Err(e) = write_trace(outcome, out) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let _ = writeln!(stdout, "status: {}", outcome.status);
    let _ = writeln!(stdout, "iterations: {}", outcome.trace.iterations());
    if let Some(obj) = outcome.objective {
        let _ = writeln!(stdout, "objective: {obj}");
    }
    if let Some(t) = outcome.tau.iter().rev().find_map(|v| *v) {
        let _ = writeln!(stdout, "final tau: {t:e}");
    }
    let _ = writeln!(stdout, "trace: {}", out.display());
    if outcome.success {
        EXIT_OK
    } else {
        EXIT_NOT_OPTIMAL
    }
}

fn run_command(cmd: Command, stdout: &mut dyn Write) -> Result<i32, String> {
    match cmd {
        Command::Lp(LpCommand::Solve {
            method,
            source,
            tol,
            max_iter,
            params,
            out,
        }) => {
            let id = match (source.gen, source.input) {
                (Some(g), _) => g,
                (None, Some(p)) => p.to_string_lossy().into_owned(),
                (None, None) => unreachable!("clap enforces one source"),
            };
            let problem = build_problem(&id)?;
            if !matches!(problem, Problem::Lp { .. }) {
                return Err(format!("'{id}' is not an LP"));
            }
            let stop = StopSpec {
                max_iter,
                tol,
                ..Default::default()
            };
            let outcome = bench::run_method(&problem, &method_spec(&method, params), 0, &stop)?;
            Ok(report(&outcome, &out, stdout))
        }
        Command::Lp(LpCommand::Gen { gen, out }) => {
            let Problem::Lp { inst, .. } = build_problem(&gen)? else {
                return Err(format!("'{gen}' is not an LP generator"));
            };
            let text = if out.extension().is_some_and(|e| e == "json") {
                inst.to_json()
            } else {
                mps::write_mps(&mps::model_from_instance(&inst))
            };
            fs::write(&out, text).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
            let _ = writeln!(
                stdout,
                "wrote {} (m = {}, n = {})",
                out.display(),
                inst.m(),
                inst.n()
            );
            Ok(EXIT_OK)
        }
        Command::Mps(MpsCommand::Check { file }) => {
            let text = fs::read_to_string(&file)
                .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
            let model = mps::parse_mps(&text).map_err(|e| format!("{}: {e}", file.display()))?;
            let (inst, _) = mps::mps_to_standard_form(&model)
                .map_err(|e| format!("{}: {e}", file.display()))?;
            let nnz: usize = model.columns.iter().map(|c| c.entries.len()).sum();
            let _ = writeln!(
                stdout,
                "{}: {} rows, {} columns, {} nonzeros; standard form {} x {}",
                model.name,
                model.rows.len(),
                model.columns.len(),
                nnz,
                inst.m(),
                inst.n()
            );
            Ok(EXIT_OK)
        }
        Command::Min(MinCommand::Solve {
            problem,
            method,
            iters,
            grad_tol,
            gap_tol,
            seed,
            params,
            out,
        }) => {
            let p = build_problem(&problem)?;
            if !matches!(p, Problem::Smooth { .. }) {
                return Err(format!("'{problem}' is not a smooth problem"));
            }
            let stop = StopSpec {
                max_iter: iters,
                grad_tol,
                gap_tol,
                ..Default::default()
            };
            let outcome = bench::run_method(&p, &method_spec(&method, params), seed, &stop)?;
            Ok(report(&outcome, &out, stdout))
        }
        Command::Bench(BenchCommand::Run {
            config,
            out,
            workers,
        }) => {
            let cfg = ExperimentConfig::load(&config).map_err(|e| e.to_string())?;
            let dir = out
                .or_else(|| cfg.output.clone())
                .ok_or("no output directory: pass --out or set 'output' in the config")?;
            let summary = bench::run_experiment(&cfg, &dir, workers).map_err(|e| e.to_string())?;
            let failed = summary
                .rows
                .iter()
                .filter(|r| r.status == "error" || r.status == "panic")
                .count();
            let _ = writeln!(
                stdout,
                "{} cells ({} failed); summary: {}",
                summary.rows.len(),
                failed,
                summary.summary_path.display()
            );
            Ok(if failed == 0 {
                EXIT_OK
            } else {
                EXIT_NOT_OPTIMAL
            })
        }
        Command::FitRate {
            trace,
            column,
            window,
        } => {
            let col = bench::read_trace_column(&trace, &column).map_err(|e| e.to_string())?;
            let values = positive_prefix(&col);
            let fit = fit_rate(&values, window).map_err(|e| e.to_string())?;
            let (model, v) = match fit.model {
                RateModel::Linear(r) => ("linear", r),
                RateModel::Sublinear(p) => ("sublinear", p),
            };
            let label = if model == "linear" { "rho" } else { "p" };
            let _ = writeln!(
                stdout,
                "model: {model}\n{label}: {v}\nr2: {}\nwindow: {}:{}\nsamples: {}",
                fit.r2, fit.window.0, fit.window.1, fit.samples
            );
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `args` (including the program name), writing normal output
/// to `stdout` and diagnostics to stderr; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command, stdout) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}
