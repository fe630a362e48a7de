//! Iterations to reach `f − f* ≤ 1e-8` on quadratics of growing condition
//! number: gradient descent, Nesterov, heavy ball and Barzilai-Borwein.

use optlab::first_order::{
    barzilai_borwein, gd_fixed, heavy_ball, nesterov, polyak_params, StopRule,
};
use optlab::smooth::{linear_spectrum, make_quadratic_spectrum};

fn main() {
    let n = 50;
    println!(
        "{:>8} {:>8} {:>9} {:>8} {:>8}",
        "kappa", "gd", "nesterov", "polyak", "bb"
    );
    for kappa in [1e1, 1e2, 1e3, 1e4] {
        let q = make_quadratic_spectrum(&linear_spectrum(n, kappa), 1);
        let (l, mu) = (q.meta.l.unwrap(), q.meta.mu.unwrap());
        let x0 = vec![1.0; n];
        let stop = StopRule::iterations(500_000).gap_tol(1e-8);
        let (alpha, beta) = polyak_params(l, mu);
        let gd = gd_fixed(&q.oracle("q"), &x0, l, &stop);
        let ag = nesterov(&q.oracle("q"), &x0, l, Some(mu), &stop);
        let hb = heavy_ball(&q.oracle("q"), &x0, alpha, beta, &stop);
        let bb = barzilai_borwein(&q.oracle("q"), &x0, None, &stop);
        println!(
            "{kappa:>8.0e} {:>8} {:>9} {:>8} {:>8}",
            gd.iterations(),
            ag.iterations(),
            hb.iterations(),
            bb.iterations()
        );
    }
}
