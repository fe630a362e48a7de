use optlab::first_order::{nonlinear_cg, CgVariant, StopRule, CG_WOLFE};
use optlab::linalg::{dot, norm, symmetric_eigen, Matrix};
use optlab::second_order::{
    bfgs, cubic_reg, cubic_subproblem, lbfgs, newton_solve, tr_subproblem_cg, trust_region_newton,
    SecondOrderError,
};
use optlab::smooth::{hvp_only, rosenbrock, saddle_quartic, LogisticRidge, QuadraticProblem};
use optlab::trace::{RowFlags, Status};
use proptest::prelude::*;

fn grad_norms(t: &optlab::trace::SolveTrace) -> Vec<f64> {
    t.rows.iter().map(|r| r.grad_norm.unwrap()).collect()
}

#[test]
fn lbfgs_usually_beats_prplus_on_logistic() {
    let mut wins = 0;
    for seed in 0..10 {
        let o = LogisticRidge::generate(400, 200, 1e-3, seed).oracle("logistic");
        let x0 = vec![0.0; 200];
        let stop = StopRule::iterations(5000).grad_tol(1e-6);
        let a = lbfgs(&o.fresh(), &x0, 10, &stop);
        let b = nonlinear_cg(
            &o.fresh(),
            &x0,
            CgVariant::PolakRibierePlus,
            CG_WOLFE,
            &stop,
        );
        assert_eq!(a.status, Status::Converged, "seed {seed}");
        let calls = |t: &optlab::trace::SolveTrace| t.rows.last().unwrap().calls.grad;
        if calls(&a) < calls(&b) {
            wins += 1;
        }
    }
    assert!(wins >= 6, "L-BFGS won {wins}/10");
}

#[test]
fn bfgs_superlinear_tail_on_rosenbrock() {
    let t = bfgs(
        &rosenbrock(2),
        &[-1.2, 1.0],
        &StopRule::iterations(200).grad_tol(1e-10),
    );
    assert_eq!(t.status, Status::Converged);
    let g = grad_norms(&t);
    let tail: Vec<f64> = g.windows(2).rev().take(4).map(|w| w[1] / w[0]).collect();
    assert!(
        tail.iter().cloned().fold(f64::INFINITY, f64::min) < 0.1,
        "{tail:?}"
    );
}

#[test]
fn newton_is_quadratic_near_the_solution() {
    let o = LogisticRidge::generate(200, 10, 1e-2, 3).oracle("logistic");
    let t = newton_solve(&o, &[0.0; 10], &StopRule::iterations(50).grad_tol(1e-12)).unwrap();
    assert_eq!(t.status, Status::Converged);
    assert!(t.iterations() <= 12);
    let g = grad_norms(&t);
    for w in g.windows(2).filter(|w| w[0] < 1e-2 && w[1] > 1e-14) {
        assert!(w[1] <= 10.0 * w[0] * w[0], "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn newton_flags_indefinite_hessian() {
    let t = newton_solve(&saddle_quartic(), &[0.3, 0.2], &StopRule::iterations(5)).unwrap();
    assert!(t
        .rows
        .iter()
        .any(|r| r.flags.contains(RowFlags::NOT_POSITIVE_DEFINITE)));
    let err = newton_solve(
        &hvp_only(&saddle_quartic()),
        &[0.3, 0.2],
        &StopRule::iterations(5),
    )
    .unwrap_err();
    assert_eq!(err, SecondOrderError::MissingHessian);
}

#[test]
fn trust_region_from_hvp_matches_dense() {
    let o = rosenbrock(6);
    let x0 = [-1.2, 1.0, -1.2, 1.0, -1.2, 1.0];
    let stop = StopRule::iterations(300).grad_tol(1e-8);
    let dense = trust_region_newton(&o, &x0, 1.0, &stop).unwrap();
    let free = trust_region_newton(&hvp_only(&o), &x0, 1.0, &stop).unwrap();
    assert_eq!(dense.status, Status::Converged);
    assert_eq!(free.status, Status::Converged);
    assert!(optlab::linalg::dist(&dense.x, &free.x) <= 1e-6);
    assert_eq!(free.rows.last().unwrap().calls.hess, 0);
    assert!(free.rows.last().unwrap().calls.hvp > 0);
}

#[test]
fn trust_region_flags_negative_curvature_at_saddle() {
    let t = trust_region_newton(
        &saddle_quartic(),
        &[0.0, 0.0],
        0.5,
        &StopRule::iterations(100).grad_tol(1e-8),
    )
    .unwrap();
    assert!(t.rows[1].flags.contains(RowFlags::NEGATIVE_CURVATURE));
    assert!(t.rows[1].flags.contains(RowFlags::BOUNDARY));
    assert!((t.x[1].abs() - 2f64.sqrt()).abs() < 1e-6);
}

#[test]
fn cubic_iterations_grow_slowly_with_accuracy() {
    let o = rosenbrock(4);
    let x0 = [-1.2, 1.0, -1.2, 1.0];
    let count = |eps: f64| {
        let t = cubic_reg(
            &o.fresh(),
            &x0,
            1.0,
            true,
            &StopRule::iterations(5000).grad_tol(eps),
        )
        .unwrap();
        assert_eq!(t.status, Status::Converged, "ε = {eps}");
        t.iterations()
    };
    let (a, b) = (count(1e-3), count(1e-9));
    // Locally quadratic convergence: a million-fold accuracy costs only a
    // handful of extra steps, far below the ε^(−3/2) worst case.
    assert!(b <= a + 15, "{a} -> {b}");
}

#[test]
fn invalid_parameters_rejected() {
    let o = rosenbrock(2);
    let stop = StopRule::iterations(3);
    assert!(matches!(
        trust_region_newton(&o, &[0.0, 0.0], 0.0, &stop),
        Err(SecondOrderError::InvalidParams(_))
    ));
    assert!(matches!(
        cubic_reg(&o, &[0.0, 0.0], -1.0, true, &stop),
        Err(SecondOrderError::InvalidParams(_))
    ));
}

fn sym(n: usize, vals: &[f64]) -> Matrix {
    Matrix::symmetric_from_fn(n, |i, j| vals[i * n + j] + vals[j * n + i])
}

fn model(h: &Matrix, g: &[f64], s: &[f64]) -> f64 {
    dot(g, s) + 0.5 * h.quad_form(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Steihaug CG stays in the region and achieves at least the Cauchy
    /// decrease ½‖g‖·min(Δ, ‖g‖/‖H‖).
    #[test]
    fn steihaug_cauchy_decrease(vals in prop::collection::vec(-3.0f64..3.0, 25),
                                g in prop::collection::vec(-2.0f64..2.0, 5),
                                delta in 0.01f64..10.0) {
        prop_assume!(norm(&g) > 1e-3);
        let h = sym(5, &vals);
        let r = tr_subproblem_cg(|v| h.mul_vec(v), &g, delta);
        prop_assert!(norm(&r.step) <= delta * (1.0 + 1e-12));
        let hn = symmetric_eigen(&h).values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        let gn = norm(&g);
        let cauchy = 0.5 * gn * delta.min(gn / hn);
        prop_assert!(r.predicted_reduction >= cauchy * (1.0 - 1e-9), "{} < {}", r.predicted_reduction, cauchy);
        prop_assert!((r.predicted_reduction + model(&h, &g, &r.step)).abs() <= 1e-9 * (1.0 + r.predicted_reduction));
    }

    /// The cubic step is no worse than random competitors or the origin.
    #[test]
    fn cubic_step_is_global(vals in prop::collection::vec(-3.0f64..3.0, 16),
                            g in prop::collection::vec(-2.0f64..2.0, 4),
                            m in 0.1f64..20.0,
                            probes in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 20)) {
        let h = sym(4, &vals);
        let step = cubic_subproblem(&h, &g, m).unwrap();
        let cubic = |s: &[f64]| model(&h, &g, s) + m / 6.0 * norm(s).powi(3);
        prop_assert!((step.model_value - cubic(&step.step)).abs() <= 1e-9 * (1.0 + step.model_value.abs()));
        prop_assert!(step.model_value <= 1e-12);
        for p in &probes {
            prop_assert!(step.model_value <= cubic(p) + 1e-9);
        }
    }

    /// BFGS finds the minimizer of random SPD quadratics.
    #[test]
    fn bfgs_solves_spd_quadratics(seed in 0u64..500, n in 2usize..10) {
        let q = optlab::smooth::make_quadratic_spectrum(&optlab::smooth::linear_spectrum(n, 30.0), seed);
        let xs = q.meta.x_star.clone().unwrap();
        let t = bfgs(&q.oracle("q"), &vec![0.0; n], &StopRule::iterations(200).grad_tol(1e-9));
        prop_assert_eq!(t.status, Status::Converged);
        prop_assert!(optlab::linalg::dist(&t.x, &xs) <= 1e-7);
    }
}

#[test]
fn newton_solves_quadratic_in_one_step() {
    let q = QuadraticProblem::new(
        Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]),
        vec![1.0, -2.0],
    );
    let t = newton_solve(
        &q.oracle("q"),
        &[5.0, 5.0],
        &StopRule::iterations(10).grad_tol(1e-12),
    )
    .unwrap();
    assert_eq!(t.iterations(), 1);
    assert!(optlab::linalg::dist(&t.x, q.meta.x_star.as_ref().unwrap()) <= 1e-12);
}
