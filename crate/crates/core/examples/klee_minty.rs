//! Dantzig's rule on the Klee-Minty cube visits every vertex; Bland's rule
//! and the interior-point method do not care.
//!
//! The right-hand side spans `100^(n−1)`, so beyond `n = 10` double precision
//! can no longer separate neighbouring vertices. MPC stops on an absolute
//! `μ`, so its tolerance is scaled to the size of the optimum.

use optlab::ipm::{solve_mpc, IpmParams};
use optlab::lp::{gen_klee_minty, klee_minty_optimum};
use optlab::simplex::{solve_simplex, PivotRule};

fn main() {
    println!(
        "{:>3} {:>8} {:>8} {:>8} {:>6}  mpc status",
        "n", "2^n-1", "dantzig", "bland", "mpc"
    );
    for n in 2..=10 {
        let inst = gen_klee_minty(n);
        let d = solve_simplex(&inst, PivotRule::Dantzig, 1 << 20);
        let b = solve_simplex(&inst, PivotRule::Bland, 1 << 20);
        let params = IpmParams {
            tol: 1e-10 * klee_minty_optimum(n).abs(),
            ..IpmParams::default()
        };
        let mpc = solve_mpc(&inst, &params, None).unwrap();
        assert!((d.objective - klee_minty_optimum(n)).abs() <= 1e-9 * klee_minty_optimum(n).abs());
        println!(
            "{n:>3} {:>8} {:>8} {:>8} {:>6}  {}",
            (1u64 << n) - 1,
            d.pivots,
            b.pivots,
            mpc.iterations(),
            mpc.status.as_str()
        );
    }
}
