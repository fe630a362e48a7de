//! BFGS and L-BFGS with several memory sizes on ridge logistic regression,
//! with Newton's method as the reference.

use optlab::first_order::StopRule;
use optlab::second_order::{bfgs, lbfgs, newton_solve};
use optlab::smooth::LogisticRidge;
use optlab::trace::SolveTrace;

fn report(name: &str, t: &SolveTrace) {
    let c = t.last().unwrap().calls;
    println!(
        "{name:<10} {:<16} iters {:>4}  f {:.12}  calls f/g/H {}/{}/{}",
        t.status.as_str(),
        t.iterations(),
        t.objective.unwrap(),
        c.f,
        c.grad,
        c.hess
    );
}

fn main() {
    let dim = 100;
    let problem = LogisticRidge::generate(500, dim, 1e-3, 11);
    let x0 = vec![0.0; dim];
    let stop = StopRule::iterations(2000).grad_tol(1e-8);

    report(
        "newton",
        &newton_solve(&problem.clone().oracle("logistic"), &x0, &stop).unwrap(),
    );
    report(
        "bfgs",
        &bfgs(&problem.clone().oracle("logistic"), &x0, &stop),
    );
    for m in [1, 3, 10, 30] {
        report(
            &format!("lbfgs m={m}"),
            &lbfgs(&problem.clone().oracle("logistic"), &x0, m, &stop),
        );
    }
}
