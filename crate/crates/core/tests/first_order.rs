use optlab::bench::fit_rate;
use optlab::bench::RateModel;
use optlab::first_order::{
    cg_beta, gd_backtracking, gd_fixed, heavy_ball, heavy_ball_modified, linear_cg, lyapunov_value,
    nesterov, perturbed_gd, polyak_params, restart_wrapper, Backtracking, CgVariant, PerturbedGd,
    RestartSchedule, StopRule,
};
use optlab::linalg::{dist, norm, Matrix};
use optlab::smooth::{
    linear_spectrum, make_quadratic_spectrum, rosenbrock, saddle_quadratic, QuadraticProblem,
};
use optlab::trace::{RowFlags, Status};
use proptest::prelude::*;

fn gaps(q: &QuadraticProblem, iterates: &[Vec<f64>]) -> Vec<f64> {
    let xs = q.meta.x_star.as_ref().unwrap();
    iterates
        .iter()
        .map(|x| {
            let d: Vec<f64> = x.iter().zip(xs).map(|(a, b)| a - b).collect();
            0.5 * q.h.quad_form(&d)
        })
        .collect()
}

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn nesterov_convex_schedule_is_order_k_squared() {
    // Eigenvalues down to zero: no linear rate, so the 1/k² regime shows.
    let mut eigs = vec![0.0];
    eigs.extend((1..60).map(|i| (i as f64 / 60.0).powi(3)));
    let q = make_quadratic_spectrum(&eigs, 4);
    let o = q.oracle("q");
    let l = q.meta.l.unwrap();
    let x0 = vec![0.0; eigs.len()];
    let t = nesterov(&o, &x0, l, None, &StopRule::iterations(2000).recording());
    let g = gaps(&q, &t.iterates);
    // Running minimum smooths the momentum oscillation.
    let mut best = f64::INFINITY;
    let pts: Vec<(f64, f64)> = g
        .iter()
        .enumerate()
        .map(|(k, v)| {
            best = best.min(*v);
            (k as f64, best)
        })
        .filter(|(k, _)| *k >= 20.0)
        .collect();
    let slope = loglog_slope(&pts);
    assert!(slope <= -1.7, "slope {slope}");
    // The classical bound 2L‖x⁰ − x*‖²/(k+1)².
    let d0 = dist(&x0, q.meta.x_star.as_ref().unwrap()).powi(2);
    for (k, v) in g.iter().enumerate().skip(1) {
        assert!(
            *v <= 2.0 * l * d0 / ((k + 1) as f64).powi(2) * (1.0 + 1e-9),
            "k = {k}"
        );
    }
}

#[test]
fn nesterov_needs_a_fifth_of_gd_iterations_at_high_condition() {
    let q = make_quadratic_spectrum(&linear_spectrum(40, 1e4), 5);
    let (l, mu) = (q.meta.l.unwrap(), q.meta.mu.unwrap());
    let o = q.oracle("q");
    let x0 = vec![0.0; 40];
    let stop = StopRule::iterations(1_000_000).gap_tol(1e-8);
    let gd = gd_fixed(&o.fresh(), &x0, l, &stop);
    let acc = nesterov(&o.fresh(), &x0, l, Some(mu), &stop);
    assert_eq!(gd.status, Status::Converged);
    assert_eq!(acc.status, Status::Converged);
    assert!(
        5 * acc.iterations() <= gd.iterations(),
        "{} vs {}",
        acc.iterations(),
        gd.iterations()
    );
}

#[test]
fn nesterov_lyapunov_function_contracts() {
    for seed in 0..10u64 {
        let kappa = 10f64.powf(1.0 + seed as f64 * 0.3);
        let q = make_quadratic_spectrum(&linear_spectrum(25, kappa), seed);
        let (l, mu) = (q.meta.l.unwrap(), q.meta.mu.unwrap());
        let o = q.oracle("q");
        let t = nesterov(
            &o,
            &[0.0; 25],
            l,
            Some(mu),
            &StopRule::iterations(300).recording(),
        );
        let rho2 = 1.0 - 1.0 / kappa.sqrt();
        let v: Vec<f64> = (1..t.iterates.len())
            .map(|k| lyapunov_value(&o, &t.iterates[k], &t.iterates[k - 1], kappa).unwrap())
            .collect();
        let floor = 1e-12 * v[0];
        for k in 1..v.len() {
            assert!(
                v[k] <= rho2 * v[k - 1] * (1.0 + 1e-9) + floor,
                "seed {seed} k {k}: {} > {}",
                v[k],
                rho2 * v[k - 1]
            );
        }
    }
}

#[test]
fn polyak_heavy_ball_attains_accelerated_rate() {
    for (seed, kappa) in [(1u64, 50.0), (2, 400.0), (3, 2000.0)] {
        let q = make_quadratic_spectrum(&linear_spectrum(30, kappa), seed);
        let (l, mu) = (q.meta.l.unwrap(), q.meta.mu.unwrap());
        let (alpha, beta) = polyak_params(l, mu);
        let o = q.oracle("q");
        let t = heavy_ball(
            &o,
            &vec![0.0; 30],
            alpha,
            beta,
            &StopRule::iterations(4000).gap_tol(1e-20).recording(),
        );
        let xs = q.meta.x_star.as_ref().unwrap();
        let d: Vec<f64> = t
            .iterates
            .iter()
            .map(|x| dist(x, xs))
            .take_while(|&v| v > 1e-10)
            .collect();
        let fit = fit_rate(&d, None).unwrap();
        let RateModel::Linear(rho) = fit.model else {
            panic!("{fit:?}")
        };
        let target = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
        assert!(rho <= target + 0.05, "κ={kappa}: ρ̂ = {rho}, ρ* = {target}");
    }
}

#[test]
fn modified_heavy_ball_contracts_uniformly() {
    let kappa: f64 = 400.0;
    let q = make_quadratic_spectrum(&linear_spectrum(30, kappa), 8);
    let (l, mu) = (q.meta.l.unwrap(), q.meta.mu.unwrap());
    let o = q.oracle("q");
    let stop = StopRule::iterations(5000).gap_tol(1e-12);
    let hb = heavy_ball_modified(&o.fresh(), &vec![0.0; 30], l, mu, &stop);
    let gd = gd_fixed(&o.fresh(), &vec![0.0; 30], l, &stop);
    assert_eq!(hb.status, Status::Converged);
    // Rate 1 − 1/(√κ + 1) against GD's 1 − 1/κ: about √κ/2 fewer steps.
    let speedup = gd.iterations() as f64 / hb.iterations() as f64;
    assert!((5.0..=20.0).contains(&speedup), "speedup {speedup}");
}

#[test]
fn restart_on_increase_beats_plain_momentum() {
    // The convex momentum schedule overshoots on a strongly convex problem;
    // restarting it once f rises recovers a linear rate. The benefit is
    // asymptotic, so the tolerance is tight (but well above rounding in f).
    let q = make_quadratic_spectrum(&linear_spectrum(50, 1e3), 6);
    let l = q.meta.l.unwrap();
    let o = q.oracle("q");
    let stop = StopRule::iterations(20_000).gap_tol(1e-10);
    let plain = nesterov(&o.fresh(), &vec![0.0; 50], l, None, &stop);
    let restarted = restart_wrapper(
        &vec![0.0; 50],
        RestartSchedule::OnIncrease,
        &stop,
        |x, s| nesterov(&o.fresh(), x, l, None, s),
    );
    assert_eq!(restarted.status, Status::Converged);
    assert!(restarted
        .rows
        .iter()
        .any(|r| r.flags.contains(RowFlags::RESTART)));
    assert!(
        2 * restarted.iterations() < plain.iterations(),
        "{} vs {}",
        restarted.iterations(),
        plain.iterations()
    );
    let iters: Vec<usize> = restarted.rows.iter().map(|r| r.iter).collect();
    assert!(iters.windows(2).all(|w| w[1] == w[0] + 1));
}

#[test]
fn perturbation_escapes_where_gd_stalls() {
    let o = saddle_quadratic();
    // Exactly on the stable manifold: GD converges to the saddle.
    let gd = gd_fixed(
        &o,
        &[1.0, 0.0],
        2.0,
        &StopRule::iterations(500).grad_tol(1e-10),
    );
    assert_eq!(gd.status, Status::Converged);
    assert!(norm(&gd.x) < 1e-9);
    let mut escaped = 0;
    for seed in 0..100 {
        let params = PerturbedGd {
            l: 2.0,
            eps_g: 1e-3,
            radius: 1e-3,
            escape_window: 50,
            seed,
        };
        let t = perturbed_gd(
            &o.fresh(),
            &[1.0, 1e-12],
            params,
            &StopRule::iterations(5000).f_target(-1.0),
        );
        if t.status == Status::Converged && t.objective.unwrap() <= -1.0 {
            escaped += 1;
        }
    }
    assert!(escaped >= 95, "escaped {escaped}/100");
}

#[test]
fn backtracking_is_monotone_on_rosenbrock() {
    let o = rosenbrock(2);
    let t = gd_backtracking(
        &o,
        &[-1.2, 1.0],
        Backtracking::default(),
        &StopRule::iterations(20_000).grad_tol(1e-4),
    );
    assert_eq!(t.status, Status::Converged);
    let f: Vec<f64> = t.rows.iter().map(|r| r.f.unwrap()).collect();
    assert!(f.windows(2).all(|w| w[1] <= w[0]));
    assert!(t.rows.last().unwrap().calls.f > t.rows.last().unwrap().calls.grad);
}

#[test]
fn cg_detects_indefinite_matrix() {
    let h = Matrix::from_diag(&[1.0, -1.0, 2.0]);
    let err = linear_cg(&h, &[1.0, 1.0, 1.0], &[0.0; 3], 1e-10, 10).unwrap_err();
    let optlab::first_order::CgError::IndefiniteDetected {
        curvature,
        direction,
        ..
    } = err;
    assert!(curvature <= 0.0);
    assert!(h.quad_form(&direction) <= 0.0);
}

fn spd(n: usize, seed: u64, kappa: f64) -> QuadraticProblem {
    make_quadratic_spectrum(&linear_spectrum(n, kappa), seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// One step of size 1/L decreases f by at least ‖∇f‖²/(2L).
    #[test]
    fn gd_descent_lemma(seed in 0u64..1000, n in 2usize..12, kappa in 1.0f64..1e3,
                        x0 in prop::collection::vec(-5.0f64..5.0, 12)) {
        let q = spd(n, seed, kappa);
        let o = q.oracle("q");
        let l = q.meta.l.unwrap();
        let x0 = &x0[..n];
        let t = gd_fixed(&o, x0, l, &StopRule::iterations(1));
        let g0 = t.rows[0].grad_norm.unwrap();
        let (f0, f1) = (t.rows[0].f.unwrap(), t.rows[1].f.unwrap());
        prop_assert!(f1 <= f0 - g0 * g0 / (2.0 * l) + 1e-10 * (1.0 + f0.abs()));
    }

    /// CG directions are H-conjugate and the residual drops to tolerance.
    #[test]
    fn linear_cg_conjugacy(seed in 0u64..1000, n in 2usize..30, kappa in 1.0f64..100.0) {
        let q = spd(n, seed, kappa);
        let r = linear_cg(&q.h, &q.g, &vec![0.0; n], 1e-10, 4 * n).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.max_conjugacy <= 1e-6, "conjugacy {}", r.max_conjugacy);
    }

    #[test]
    fn prplus_beta_is_nonnegative(a in prop::collection::vec(-10.0f64..10.0, 5),
                                  b in prop::collection::vec(-10.0f64..10.0, 5)) {
        prop_assume!(norm(&b) > 1e-6);
        prop_assert!(cg_beta(CgVariant::PolakRibierePlus, &a, &b) >= 0.0);
        prop_assert!(cg_beta(CgVariant::FletcherReeves, &a, &b) >= 0.0);
    }
}
