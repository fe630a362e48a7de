//! Solve one random standard-form LP with every solver and compare.
//!
//! `cargo run --example lp_solvers -- [m] [n] [seed]`

use optlab::ipm::{solve_lpf, solve_mpc, IpmParams};
use optlab::lp::gen_random_feasible;
use optlab::pdhg::{solve_pdhg, PdhgParams, Restart, Variant};
use optlab::simplex::{solve_simplex, PivotRule};

fn main() {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("integer argument"))
        .collect();
    let m = *args.first().unwrap_or(&20) as usize;
    let n = *args.get(1).unwrap_or(&60) as usize;
    let seed = *args.get(2).unwrap_or(&0);
    let (inst, start) = gen_random_feasible(m, n, seed).expect("generator");
    println!("{}: m = {m}, n = {n}", inst.name());

    for rule in [PivotRule::Dantzig, PivotRule::Bland] {
        let r = solve_simplex(&inst, rule, 100_000);
        println!(
            "simplex {:<8} {:?}  obj {:.10}  pivots {} (+{} phase 1, {} degenerate)",
            format!("{rule:?}"),
            r.status,
            r.objective,
            r.pivots,
            r.phase1_pivots,
            r.degenerate_pivots
        );
    }

    let params = IpmParams::default();
    let lpf = solve_lpf(&inst, &start, &params).expect("feasible interior start");
    let mpc = solve_mpc(&inst, &params, None).expect("full row rank");
    let pdhg = solve_pdhg(
        &inst,
        &PdhgParams::default_for(&inst, Variant::Plain, Restart::Adaptive, 1e-8, 200_000),
    )
    .expect("valid steps");
    for t in [&lpf, &mpc, &pdhg] {
        println!(
            "{:<14} {:?}  obj {:.10}  iterations {}",
            t.method,
            t.status,
            t.objective.unwrap_or(f64::NAN),
            t.iterations()
        );
    }
}
