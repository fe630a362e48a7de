//! PDHG on an LP with no restarts, fixed-period restarts, adaptive restarts,
//! and the Halpern variant.

use optlab::lp::gen_random_feasible;
use optlab::pdhg::{solve_pdhg, PdhgParams, Restart, Variant};
use optlab::trace::{RowFlags, SolveTrace};

fn restarts(t: &SolveTrace) -> usize {
    t.rows
        .iter()
        .filter(|r| r.flags.contains(RowFlags::RESTART))
        .count()
}

fn main() {
    let (inst, _) = gen_random_feasible(20, 60, 3).unwrap();
    let tol = 1e-6;
    let runs = [
        ("plain", Variant::Plain, Restart::None),
        ("fixed(500)", Variant::Plain, Restart::Fixed(500)),
        ("adaptive", Variant::Plain, Restart::Adaptive),
        ("halpern", Variant::Halpern, Restart::None),
        ("halpern+adaptive", Variant::Halpern, Restart::Adaptive),
    ];
    println!(
        "{:<18} {:>16} {:>9} {:>9} {:>14}",
        "run", "status", "iters", "restarts", "objective"
    );
    for (name, variant, restart) in runs {
        let p = PdhgParams::default_for(&inst, variant, restart, tol, 300_000);
        let t = solve_pdhg(&inst, &p).unwrap();
        println!(
            "{name:<18} {:>16} {:>9} {:>9} {:>14.8}",
            t.status.as_str(),
            t.iterations(),
            restarts(&t),
            t.objective.unwrap_or(f64::NAN)
        );
    }
}
