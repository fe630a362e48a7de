//! Read an MPS file, convert to standard form, solve, and report the answer
//! in the original variables.
//!
//! `cargo run --example mps_model -- path/to/model.mps`
//! (defaults to the bundled `free_and_mirrored.mps`).

use optlab::mps::{mps_to_standard_form, parse_mps, write_mps};
use optlab::simplex::{solve_simplex, PivotRule, SimplexStatus};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/mps/free_and_mirrored.mps"
        )
        .to_string()
    });
    let text = std::fs::read_to_string(&path).expect("readable file");
    let model = match parse_mps(&text) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{path}: {e}");
            std::process::exit(2);
        }
    };
    println!(
        "{} ({:?}): {} rows, {} columns",
        model.name,
        model.sense,
        model.rows.len(),
        model.columns.len()
    );

    let (inst, map) = mps_to_standard_form(&model).expect("convertible model");
    println!(
        "standard form: m = {}, n = {}, rank {}",
        inst.m(),
        inst.n(),
        inst.rank()
    );

    let r = solve_simplex(&inst, PivotRule::Dantzig, 100_000);
    if r.status != SimplexStatus::Optimal {
        println!("simplex: {:?}", r.status);
        return;
    }
    println!("objective {}", map.original_objective(r.objective));
    for (name, v) in map.names.iter().zip(map.map_back(&r.x)) {
        println!("  {name:<8} = {v}");
    }

    println!("\n--- normalized MPS ---\n{}", write_mps(&model));
}
