use std::path::{Path, PathBuf};

use optlab::cli::{run, EXIT_NOT_OPTIMAL, EXIT_OK, EXIT_USAGE};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/mps")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn optlab(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("optlab").chain(args.iter().copied());
    let code = run(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn field<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no '{key}' in output:\n{stdout}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn lp_solve_generated_instance() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("ipm.csv");
    let (code, out) = optlab(&[
        "lp",
        "solve",
        "--method",
        "ipm-lpf",
        "--gen",
        "random:m=10,n=30,seed=1",
        "--out",
        path_str(&trace),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(field(&out, "status"), "converged");
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("iter,mu,sigma,alpha,primal_res,dual_res,time_ns,tau"));
    assert_eq!(
        text.lines().count(),
        field(&out, "iterations").parse::<usize>().unwrap() + 2
    );
}

#[test]
fn every_lp_method_solves_wyndor() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    for method in [
        "simplex-dantzig",
        "simplex-bland",
        "ipm-mpc",
        "pdhg",
        "pdhg-halpern",
    ] {
        let (code, out) = optlab(&[
            "lp",
            "solve",
            "--method",
            method,
            "--input",
            &fixture("wyndor_max.mps"),
            "--tol",
            "1e-9",
            "--max-iter",
            "200000",
            "--out",
            path_str(&trace),
        ]);
        assert_eq!(code, EXIT_OK, "{method}: {out}");
        let obj: f64 = field(&out, "objective").parse().unwrap();
        assert!((obj - 36.0).abs() <= 1e-6, "{method}: {obj}");
    }
}

#[test]
fn generated_klee_minty_round_trips_through_mps() {
    let dir = tempfile::tempdir().unwrap();
    let mps = dir.path().join("km3.mps");
    let (code, _) = optlab(&[
        "lp",
        "gen",
        "--gen",
        "klee-minty:n=3",
        "--out",
        path_str(&mps),
    ]);
    assert_eq!(code, EXIT_OK);
    let (code, out) = optlab(&["mps", "check", path_str(&mps)]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out) = optlab(&[
        "lp",
        "solve",
        "--method",
        "simplex-dantzig",
        "--input",
        path_str(&mps),
        "--out",
        path_str(&dir.path().join("t.csv")),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&out, "objective"), "-10000");
    assert_eq!(field(&out, "iterations"), "7");

    let json = dir.path().join("km3.json");
    assert_eq!(
        optlab(&[
            "lp",
            "gen",
            "--gen",
            "klee-minty:n=3",
            "--out",
            path_str(&json)
        ])
        .0,
        EXIT_OK
    );
    let inst = optlab::lp::LpInstance::from_json(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!((inst.m(), inst.n()), (3, 6));
}

#[test]
fn malformed_mps_reports_line() {
    let (code, _) = optlab(&["mps", "check", &fixture("bad_number.mps")]);
    assert_eq!(code, EXIT_USAGE);
    let (code, out) = optlab(&["mps", "check", &fixture("covering.mps")]);
    assert_eq!(code, EXIT_OK);
    assert!(
        out.contains("rows") && out.contains("standard form"),
        "{out}"
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(optlab(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(
        optlab(&["lp", "solve", "--method", "simplex-dantzig"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        optlab(&[
            "lp",
            "solve",
            "--method",
            "nope",
            "--gen",
            "random:m=2,n=4,seed=0"
        ])
        .0,
        EXIT_USAGE
    );
    assert_eq!(
        optlab(&[
            "min",
            "solve",
            "--problem",
            "quad:kappa=0.5,n=3",
            "--method",
            "bfgs"
        ])
        .0,
        EXIT_USAGE
    );
    assert_eq!(
        optlab(&[
            "min",
            "solve",
            "--problem",
            "rosenbrock",
            "--method",
            "ipm-lpf"
        ])
        .0,
        EXIT_USAGE
    );
    assert_eq!(optlab(&["--help"]).0, EXIT_OK);
}

#[test]
fn unmet_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = optlab(&[
        "min",
        "solve",
        "--problem",
        "quad:kappa=1000,n=20",
        "--method",
        "gd-fixed",
        "--iters",
        "5",
        "--grad-tol",
        "1e-12",
        "--out",
        path_str(&dir.path().join("t.csv")),
    ]);
    assert_eq!(code, EXIT_NOT_OPTIMAL);
    assert_eq!(field(&out, "status"), "iteration_limit");
}

/// GD on the `n = 200` hard instance for 99 iterations: before the gradient
/// span reaches the last coordinates the gap decays like `k^(−1/2)`, so the
/// fitted sublinear exponent is about one half.
#[test]
fn gd_on_worst_case_fits_sublinear_rate() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("gd.csv");
    let (code, out) = optlab(&[
        "min",
        "solve",
        "--problem",
        "nesterov-worst:n=200",
        "--method",
        "gd-fixed",
        "--iters",
        "99",
        "--out",
        path_str(&trace),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out) = optlab(&["fit-rate", "--trace", path_str(&trace), "--column", "tau"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&out, "model"), "sublinear");
    let p: f64 = field(&out, "p").parse().unwrap();
    assert!((p - 0.5).abs() <= 0.1, "p = {p}");
    let r2: f64 = field(&out, "r2").parse().unwrap();
    assert!(r2 > 0.99);

    let (code, out) = optlab(&[
        "fit-rate",
        "--trace",
        path_str(&trace),
        "--column",
        "tau",
        "--window",
        "20:80",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(field(&out, "window"), "20:80");
    assert_eq!(
        optlab(&["fit-rate", "--trace", path_str(&trace), "--column", "nope"]).0,
        EXIT_USAGE
    );
}

#[test]
fn linear_rate_on_strongly_convex_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("gd.csv");
    let (code, _) = optlab(&[
        "min",
        "solve",
        "--problem",
        "quad:kappa=10,n=10,seed=3",
        "--method",
        "gd-fixed",
        "--iters",
        "60",
        "--out",
        path_str(&trace),
    ]);
    assert_eq!(code, EXIT_OK);
    let (_, out) = optlab(&["fit-rate", "--trace", path_str(&trace), "--column", "tau"]);
    assert_eq!(field(&out, "model"), "linear");
    let rho: f64 = field(&out, "rho").parse().unwrap();
    // f − f* contracts by at most (1 − 1/κ)² per step.
    assert!(rho > 0.0 && rho <= 0.81 + 1e-3, "rho = {rho}");
}

#[test]
fn bench_run_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{"problems": ["quad:kappa=50,n=8"], "methods": [{"id": "nesterov", "params": {"convex": true}}, {"id": "bfgs"}],
            "stop": {"max_iter": 300, "gap_tol": 1e-10}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let (code, out) = optlab(&[
        "bench",
        "run",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&out_dir),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.starts_with("2 cells (0 failed)"));
    assert!(out_dir.join("summary.csv").is_file());

    std::fs::write(
        &cfg,
        r#"{"problems": ["rosenbrock"], "methods": [{"id": "ipm-mpc"}]}"#,
    )
    .unwrap();
    assert_eq!(
        optlab(&[
            "bench",
            "run",
            "--config",
            path_str(&cfg),
            "--out",
            path_str(&out_dir)
        ])
        .0,
        EXIT_USAGE
    );
}
