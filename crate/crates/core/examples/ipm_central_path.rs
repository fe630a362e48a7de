//! Follow the central path: LPF from a feasible start versus Mehrotra's
//! predictor-corrector from an infeasible one.

use optlab::ipm::{solve_lpf, solve_mpc, IpmParams};
use optlab::lp::gen_random_feasible;

fn main() {
    let (inst, start) = gen_random_feasible(30, 90, 7).unwrap();
    let params = IpmParams {
        tol: 1e-10,
        ..IpmParams::default()
    };
    let lpf = solve_lpf(&inst, &start, &params).unwrap();
    let mpc = solve_mpc(&inst, &params, None).unwrap();

    println!("LPF ({} iterations): mu per iteration", lpf.iterations());
    let mu: Vec<f64> = lpf.rows.iter().filter_map(|r| r.mu).collect();
    for w in mu.windows(2).step_by(5) {
        println!("  mu {:.3e}  ratio {:.3}", w[1], w[1] / w[0]);
    }

    println!("MPC ({} iterations):", mpc.iterations());
    for r in &mpc.rows {
        println!(
            "  k {:>2}  mu {:.3e}  sigma {:.3}  alpha {:.3}  |rb| {:.2e}  |rc| {:.2e}",
            r.iter,
            r.mu.unwrap_or(f64::NAN),
            r.sigma.unwrap_or(f64::NAN),
            r.alpha.unwrap_or(f64::NAN),
            r.primal_res.unwrap_or(f64::NAN),
            r.dual_res.unwrap_or(f64::NAN),
        );
    }
    println!(
        "objectives: lpf {:.10}, mpc {:.10}",
        lpf.objective.unwrap(),
        mpc.objective.unwrap()
    );
}
