mod common;

use common::{direct_rk4, grid, rel, sup_diff, trapezoid_running};
use proptest::prelude::*;
use spotforward_core::deterministic_engine::{
    alpha_t, assemble_paths, beta_closed, beta_t, delta_closed, h_quadrature, large_rho_asymptotics, p_closed,
    solve_delta_backward, solve_paths, solve_riccati_backward,
};
use spotforward_core::{CostPath, Error};

const E: f64 = std::f64::consts::E;

#[test]
fn p_closed_examples() {
    assert_eq!(p_closed(1.0, 0.3, 7.0, 1.0).unwrap(), 1.0);
    for t in [0.0, 0.4, 1.3] {
        let v = p_closed(t, 0.7, 0.0, 2.0).unwrap();
        assert!((v - (t - 2.0_f64).exp()).abs() < 1e-15);
    }
    let p0 = p_closed(0.0, 1.0, 1.0, 1.0).unwrap();
    assert!((p0 - 1.0 / (2.0 * E - 1.0)).abs() < 1e-15);
    assert!((p0 - 0.225400).abs() < 5e-7);
    let (p, _) = direct_rk4(|_| 1.0, 1.0, 1.0, 1.0, 4096);
    assert!((p[0] - p0).abs() < 1e-12);
}

#[test]
fn delta_closed_examples() {
    assert_eq!(delta_closed(0.5, 1.0, 0.0, 1.0, 1.0).unwrap(), 0.0);
    assert!(delta_closed(1.0, 1.0, 1.0, 1.0, 1.0).unwrap().abs() < 1e-15);
    let d0 = delta_closed(0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    assert!((d0 - 0.549201).abs() < 5e-7, "{d0}");
    let (_, d) = direct_rk4(|_| 1.0, 1.0, 1.0, 1.0, 4096);
    assert!((d[0] - d0).abs() < 1e-12);
}

#[test]
fn beta_closed_examples() {
    assert_eq!(beta_closed(0.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
    assert_eq!(beta_closed(0.7, 1.0, 0.0, 1.0, 1.0).unwrap(), 0.0);
    let bt = beta_closed(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    assert!((bt - 1.0 / (2.0 * E - 1.0)).abs() < 1e-14);

    // β(T) = e^{−H(T)+T} ∫ (e^{−s}/c) e^{H} δ ds, everything from the plain RK4 oracle
    for (c, m, rho, horizon) in [(1.0, 1.0, 1.0, 1.0), (0.4, 2.0, 3.0, 0.5)] {
        let n = 20_000;
        let h = horizon / n as f64;
        let (p, d) = direct_rk4(|_| c, m, rho, horizon, n);
        let hh = trapezoid_running(&p.iter().map(|x| rho * x / c + 1.0).collect::<Vec<_>>(), h);
        let integrand: Vec<f64> = (0..=n).map(|i| (-(i as f64) * h + hh[i]).exp() / c * d[i]).collect();
        let total = trapezoid_running(&integrand, h)[n];
        let oracle = (horizon - hh[n]).exp() * total;
        assert!(rel(beta_closed(horizon, c, m, rho, horizon).unwrap(), oracle) < 1e-7);
    }
}

#[test]
fn closed_forms_reject_bad_inputs() {
    assert!(matches!(p_closed(0.0, 0.0, 1.0, 1.0), Err(Error::Invalid { .. })));
    assert!(matches!(p_closed(0.0, 1.0, -1.0, 1.0), Err(Error::Invalid { .. })));
    assert!(matches!(p_closed(1.5, 1.0, 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(delta_closed(-0.1, 1.0, 1.0, 1.0, 1.0), Err(Error::Domain(_))));
}

#[test]
fn riccati_matches_closed_form() {
    for (c, rho, horizon) in [(1.0, 1.0, 1.0), (0.02, 1000.0, 0.25), (5.0, 0.5, 1.0)] {
        let g = grid(horizon, 4096);
        let p = solve_riccati_backward(&CostPath::Constant(c), rho, &g).unwrap();
        let d = solve_delta_backward(&CostPath::Constant(c), &p, 1.3, rho, &g).unwrap();
        let pc: Vec<f64> = g.knots.iter().map(|&t| p_closed(t, c, rho, horizon).unwrap()).collect();
        let dc: Vec<f64> = g.knots.iter().map(|&t| delta_closed(t, c, 1.3, rho, horizon).unwrap()).collect();
        assert!(sup_diff(&p, &pc) <= 1e-8);
        assert!(sup_diff(&d, &dc) <= 1e-8);
    }
}

#[test]
fn riccati_fourth_order() {
    let (c, rho, horizon) = (0.2, 2.0, 1.0);
    let err = |n: usize| {
        let g = grid(horizon, n);
        let p = solve_riccati_backward(&CostPath::Constant(c), rho, &g).unwrap();
        let pc: Vec<f64> = g.knots.iter().map(|&t| p_closed(t, c, rho, horizon).unwrap()).collect();
        sup_diff(&p, &pc)
    };
    let (e1, e2) = (err(8), err(16));
    let ratio = e1 / e2;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn zero_rho_gives_exponential() {
    let g = grid(1.5, 1024);
    let p = solve_riccati_backward(&CostPath::Constant(0.3), 0.0, &g).unwrap();
    for (t, v) in g.knots.iter().zip(&p) {
        assert!((v - (t - 1.5_f64).exp()).abs() < 1e-12);
    }
}

#[test]
fn piecewise_cost_glues_closed_forms() {
    let (rho, horizon, c1, c2) = (1.5, 1.0, 0.5, 2.0);
    let g = grid(horizon, 4096);
    let cost = CostPath::Piecewise { breaks: vec![0.5], levels: vec![c1, c2] };
    let p = solve_riccati_backward(&cost, rho, &g).unwrap();
    let p_half = p_closed(0.5, c2, rho, horizon).unwrap();
    // before the break, 1/P solves w' = −w − ρ/c₁ from w(T/2) = 1/P(T/2)
    let glued = |t: f64| {
        if t >= 0.5 {
            p_closed(t, c2, rho, horizon).unwrap()
        } else {
            let w = (1.0 / p_half + rho / c1) * (0.5 - t).exp() - rho / c1;
            1.0 / w
        }
    };
    let oracle: Vec<f64> = g.knots.iter().map(|&t| glued(t)).collect();
    assert!(sup_diff(&p, &oracle) <= 1e-8);

    let m = 0.8;
    let d = solve_delta_backward(&cost, &p, m, rho, &g).unwrap();
    let (pd, dd) = direct_rk4(|t| if t < 0.5 { c1 } else { c2 }, m, rho, horizon, 4096);
    assert!(sup_diff(&p, &pd) <= 1e-8);
    assert!(sup_diff(&d, &dd) <= 1e-8);
}

#[test]
fn delta_zero_supply() {
    let g = grid(1.0, 128);
    let p = solve_riccati_backward(&CostPath::Constant(1.0), 1.0, &g).unwrap();
    let d = solve_delta_backward(&CostPath::Constant(1.0), &p, 0.0, 1.0, &g).unwrap();
    assert!(d.iter().all(|&x| x == 0.0));
}

#[test]
fn delta_rejects_grid_mismatch() {
    let g = grid(1.0, 128);
    let e = solve_delta_backward(&CostPath::Constant(1.0), &[1.0; 10], 1.0, 1.0, &g).unwrap_err();
    assert!(matches!(e, Error::GridMismatch { .. }));
}

#[test]
fn delta_linear_in_supply() {
    let g = grid(1.0, 1024);
    let cost = CostPath::function(|t| 0.4 + 0.2 * (2.0 * t).sin());
    let p = solve_riccati_backward(&cost, 2.0, &g).unwrap();
    let d1 = solve_delta_backward(&cost, &p, 0.7, 2.0, &g).unwrap();
    let d2 = solve_delta_backward(&cost, &p, 1.4, 2.0, &g).unwrap();
    assert!((d2[0] - 2.0 * d1[0]).abs() <= 1e-14 * d1[0].abs().max(1.0));
}

#[test]
fn homogeneous_paths_vanish() {
    let g = grid(1.0, 256);
    let paths = solve_paths(&CostPath::Constant(0.8), 0.0, 1.0, 0.0, &g).unwrap();
    for v in [&paths.lambda, &paths.inventory, &paths.q, &paths.mu, &paths.q_tilde] {
        assert!(v.iter().all(|x| x.abs() < 1e-15));
    }
}

#[test]
fn terminal_inventory_decomposition() {
    let (c, rho, horizon, m, s) = (1.0, 1.0, 1.0, 1.0, 1.0);
    let g = grid(horizon, 4096);
    let cost = CostPath::Constant(c);
    let paths = solve_paths(&cost, m, rho, s, &g).unwrap();
    let n = g.n_steps;
    assert_eq!(paths.lambda[n], s);
    let alpha = alpha_t(&paths.p, &cost, rho, &g).unwrap();
    let beta = beta_t(&paths.p, &paths.delta, &cost, rho, &g).unwrap();
    assert!((paths.inventory[n] - (rho * alpha * s + beta)).abs() <= 1e-10);

    // Q' = ρ(Λ − P Q)/c, Q(0) = 0 by implicit trapezoid on the knots
    let h = g.step();
    let mut q = 0.0;
    for i in 0..n {
        let (a0, a1) = (rho * paths.p[i] / c, rho * paths.p[i + 1] / c);
        let (b0, b1) = (rho * paths.lambda[i] / c, rho * paths.lambda[i + 1] / c);
        q = (q * (1.0 - 0.5 * h * a0) + 0.5 * h * (b0 + b1)) / (1.0 + 0.5 * h * a1);
    }
    assert!((paths.inventory[n] - q).abs() <= 1e-6);
}

#[test]
fn alpha_identity_on_cost_shapes() {
    let rho = 1.0;
    let g = grid(1.0, 4096);
    let costs = [
        CostPath::Constant(1.0),
        CostPath::Piecewise { breaks: vec![0.25, 0.75], levels: vec![0.6, 1.4, 0.9] },
        CostPath::function(|t| 0.8 + 0.3 * (3.0 * t).sin()),
    ];
    for cost in &costs {
        let p = solve_riccati_backward(cost, rho, &g).unwrap();
        let alpha = alpha_t(&p, cost, rho, &g).unwrap();
        let lhs = 1.0 - rho * alpha;
        assert!((lhs - E * p[0]).abs() <= 1e-8, "{cost:?}: {lhs} vs {}", E * p[0]);
    }
    let p = solve_riccati_backward(&CostPath::Constant(1.0), 1.0, &g).unwrap();
    let lhs = 1.0 - alpha_t(&p, &CostPath::Constant(1.0), 1.0, &g).unwrap();
    assert!((lhs - 0.612700).abs() < 5e-7);
}

#[test]
fn alpha_identity_small_rho_limit() {
    let g = grid(1.0, 1024);
    let cost = CostPath::Constant(0.5);
    let mut prev = 0.0;
    for rho in [1e-1, 1e-3, 1e-6] {
        let p = solve_riccati_backward(&cost, rho, &g).unwrap();
        let x = rho * alpha_t(&p, &cost, rho, &g).unwrap();
        assert!(x > 0.0 && (prev == 0.0 || x < prev));
        prev = x;
    }
    assert!(prev < 1e-5);
}

#[test]
fn h_matches_log_ratio() {
    let g = grid(1.0, 2048);
    let cost = CostPath::function(|t| 0.5 + t * t);
    let paths = solve_paths(&cost, 1.0, 2.0, 1.0, &g).unwrap();
    let hq = h_quadrature(&paths.p, &cost, 2.0, &g).unwrap();
    assert!(sup_diff(&hq, &paths.h) <= 1e-9);
}

#[test]
fn large_rho_limit_examples() {
    let (a, b, d) = large_rho_asymptotics(1.0, 1.0, 1.0);
    assert!((a - 1.0 / (1.0 - (-1.0_f64).exp())).abs() < 1e-14);
    assert!((a - 1.581977).abs() < 5e-7);
    let rho = 1e6;
    let exact = rho * E * p_closed(0.0, 1.0, rho, 1.0).unwrap();
    assert!(rel(exact, a) < 1e-5);
    let (_, b0, d0) = large_rho_asymptotics(1.0, 0.0, 1.0);
    assert_eq!((b0, d0), (0.0, 0.0));
    assert!(b > 0.0 && d > 0.0);
}

fn cost_strategy() -> impl Strategy<Value = CostPath> {
    prop_oneof![
        (0.05..3.0f64).prop_map(CostPath::Constant),
        (0.05..3.0f64, 0.05..3.0f64).prop_map(|(a, b)| CostPath::Piecewise { breaks: vec![0.5], levels: vec![a, b] }),
        (0.2..2.0f64, 0.0..0.15f64).prop_map(|(a, b)| CostPath::function(move |t| a + b * (5.0 * t).cos())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_increasing_in_cost(c1 in 0.01..5.0f64, bump in 1e-3..5.0f64, rho in 1e-2..1e3f64, horizon in 0.1..3.0f64) {
        let a = p_closed(0.0, c1, rho, horizon).unwrap();
        let b = p_closed(0.0, c1 + bump, rho, horizon).unwrap();
        prop_assert!(a < b);
    }

    #[test]
    fn paths_respect_invariants(cost in cost_strategy(), rho in 0.05..50.0f64, m in -2.0..2.0f64, s in -3.0..3.0f64) {
        let g = grid(1.0, 512);
        let paths = solve_paths(&cost, m, rho, s, &g).unwrap();
        let n = g.n_steps;
        prop_assert_eq!(paths.p[n], 1.0);
        prop_assert!((paths.lambda[n] - s).abs() < 1e-12);
        prop_assert_eq!(paths.delta[n], 0.0);
        prop_assert_eq!(paths.inventory[0], 0.0);
        prop_assert_eq!(paths.h[0], 0.0);
        prop_assert!(paths.p.iter().all(|&p| p > 0.0 && p <= 1.0));
        let cm = cost.sup(&g) * m.abs();
        let c_lambda = 2.0 * s.abs() + 4.0 * cm / rho;
        let lam_sup = paths.lambda.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
        prop_assert!(lam_sup <= c_lambda + 1e-9);
        let h_q = rho / cost.inf(&g) * c_lambda;
        let q_sup = paths.inventory.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
        prop_assert!(q_sup <= h_q + 1e-9);
        for i in 0..g.len() {
            prop_assert!((paths.c[i] * paths.q_tilde[i] - paths.mu[i]).abs() <= 1e-12 * paths.mu[i].abs().max(1.0));
        }
    }

    #[test]
    fn assemble_matches_solve(c in 0.1..2.0f64, rho in 0.1..10.0f64, m in 0.0..2.0f64, s in -2.0..2.0f64) {
        let g = grid(1.0, 256);
        let cost = CostPath::Constant(c);
        let p = solve_riccati_backward(&cost, rho, &g).unwrap();
        let d = solve_delta_backward(&cost, &p, m, rho, &g).unwrap();
        let a = assemble_paths(&p, &d, s, &cost, m, rho, &g).unwrap();
        let b = solve_paths(&cost, m, rho, s, &g).unwrap();
        prop_assert_eq!(a, b);
    }
}
