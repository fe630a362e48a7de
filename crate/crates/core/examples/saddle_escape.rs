//! Starting exactly at the saddle of `x² − y² + y⁴/4`: gradient descent is
//! stuck, perturbed GD escapes, and trust-region / cubic-regularized Newton
//! follow negative curvature to a minimizer at `y = ±√2`.

use optlab::first_order::{gd_fixed, perturbed_gd, PerturbedGd, StopRule};
use optlab::second_order::{cubic_reg, trust_region_newton};
use optlab::smooth::{saddle_quartic, second_order_certificate};
use optlab::trace::SolveTrace;

fn report(t: &SolveTrace) {
    let oracle = saddle_quartic();
    let cert = second_order_certificate(&oracle, &t.x, 1e-6, 1e-3).unwrap();
    println!(
        "{:<16} {:<20} iters {:>5}  x = ({:+.6}, {:+.6})  f = {:+.6}  {cert:?}",
        t.method,
        t.status.as_str(),
        t.iterations(),
        t.x[0],
        t.x[1],
        t.objective.unwrap()
    );
}

fn main() {
    let x0 = [0.0, 0.0];
    let stop = StopRule::iterations(5000).grad_tol(1e-6);
    // Curvature is 2 along x and reaches 4 along y at the minimizers.
    report(&gd_fixed(&saddle_quartic(), &x0, 4.0, &stop));
    let params = PerturbedGd {
        l: 4.0,
        eps_g: 1e-6,
        radius: 1e-3,
        escape_window: 200,
        seed: 5,
    };
    report(&perturbed_gd(
        &saddle_quartic(),
        &x0,
        params,
        &StopRule::iterations(20_000),
    ));
    report(&trust_region_newton(&saddle_quartic(), &x0, 1.0, &stop).unwrap());
    report(&cubic_reg(&saddle_quartic(), &x0, 1.0, true, &stop).unwrap());
}
