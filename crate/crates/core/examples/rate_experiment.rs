//! Run a benchmark grid from a JSON config and print the fitted rates.
//!
//! `cargo run --example rate_experiment -- [config.json] [out_dir]`

use std::path::PathBuf;

use optlab::bench::{run_experiment, ExperimentConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/kappa_sweep.json")
    });
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("optlab-rate-experiment"));

    let cfg = ExperimentConfig::load(&config).expect("valid config");
    let summary = run_experiment(
        &cfg,
        &out,
        std::thread::available_parallelism().map_or(1, |n| n.get()),
    )
    .expect("experiment ran");
    println!(
        "{:<28} {:<22} {:<16} {:>6} {:<10} {:>10}",
        "problem", "method", "status", "iters", "model", "rate"
    );
    for r in &summary.rows {
        println!(
            "{:<28} {:<22} {:<16} {:>6} {:<10} {:>10.4}",
            r.problem,
            r.method,
            r.status,
            r.iterations.map_or("-".into(), |k| k.to_string()),
            r.rate_model,
            r.rate.unwrap_or(f64::NAN)
        );
    }
    println!("summary: {}", summary.summary_path.display());
}
