//! Linear CG on an SPD system, then Fletcher-Reeves versus Polak-Ribière+
//! on the Rosenbrock function.

use optlab::first_order::{linear_cg, nonlinear_cg, CgVariant, StopRule, CG_WOLFE};
use optlab::smooth::{linear_spectrum, make_quadratic_spectrum, rosenbrock};

fn main() {
    let n = 40;
    let q = make_quadratic_spectrum(&linear_spectrum(n, 1e3), 4);
    let r = linear_cg(&q.h, &q.g, &vec![0.0; n], 1e-10, 10 * n).unwrap();
    println!(
        "linear CG, n = {n}, kappa = 1e3: {} iterations",
        r.iterations
    );

    // Only three distinct eigenvalues: at most three iterations.
    let eigs: Vec<f64> = (0..n).map(|i| [1.0, 10.0, 100.0][i % 3]).collect();
    let q3 = make_quadratic_spectrum(&eigs, 4);
    let r3 = linear_cg(&q3.h, &q3.g, &vec![0.0; n], 1e-10, 10 * n).unwrap();
    println!("linear CG, three clusters: {} iterations", r3.iterations);

    let x0 = [-1.2, 1.0, -1.2, 1.0, -1.2, 1.0, -1.2, 1.0];
    let stop = StopRule::iterations(20_000).grad_tol(1e-8);
    for v in [CgVariant::FletcherReeves, CgVariant::PolakRibierePlus] {
        let t = nonlinear_cg(&rosenbrock(8), &x0, v, CG_WOLFE, &stop);
        let calls = t.last().unwrap().calls;
        println!(
            "{v:?}: {} after {} iterations ({} f, {} grad calls)",
            t.status.as_str(),
            t.iterations(),
            calls.f,
            calls.grad
        );
    }
}
