mod common;

use common::{grid, rel, sup_diff};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use spotforward_core::deterministic_engine::{beta_closed, delta_closed, p_closed};
use spotforward_core::jump_regime::{
    conditional_beta, conditional_beta_at, conditional_path, delta_normal_voc, expected_beta, solve_jump,
    stressed_coefficients,
};
use spotforward_core::Error;

fn closed_paths(c: f64, m: f64, rho: f64, horizon: f64, knots: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        knots.iter().map(|&t| p_closed(t, c, rho, horizon).unwrap()).collect(),
        knots.iter().map(|&t| delta_closed(t, c, m, rho, horizon).unwrap()).collect(),
    )
}

#[test]
fn stressed_state_is_deterministic_solution() {
    let g = grid(1.0, 4096);
    let (p, d) = stressed_coefficients(0.1, 1.0, 100.0, &g).unwrap();
    let (pc, dc) = closed_paths(0.1, 1.0, 100.0, 1.0, &g.knots);
    assert!(sup_diff(&p, &pc) <= 1e-8);
    assert!(sup_diff(&d, &dc) <= 1e-8);
    assert!(matches!(stressed_coefficients(0.0, 1.0, 1.0, &g), Err(Error::Invalid { .. })));
}

#[test]
fn zero_intensity_collapses() {
    let (cn, m, rho, horizon) = (0.3, 1.2, 2.0, 1.0);
    let g = grid(horizon, 4096);
    let j = solve_jump(cn, 0.9, 0.0, m, rho, &g).unwrap();
    let (pc, dc) = closed_paths(cn, m, rho, horizon, &g.knots);
    assert!(sup_diff(&j.p_normal, &pc) <= 1e-8);
    assert!(sup_diff(&j.delta_normal, &dc) <= 1e-8);
    let bc = beta_closed(horizon, cn, m, rho, horizon).unwrap();
    assert!((expected_beta(&j) - bc).abs() <= 1e-8);
    assert!((j.expected_beta_compensator() - bc).abs() <= 1e-8);
    let no_jump = conditional_path(None, &j).unwrap();
    assert!((conditional_beta(&no_jump, &j).unwrap() - bc).abs() <= 1e-8);
}

#[test]
fn terminal_values_and_bounds() {
    let g = grid(1.0, 1024);
    let j = solve_jump(0.02, 0.1, 1.0, 1.0, 100.0, &g).unwrap();
    let n = g.n_steps;
    assert_eq!((j.p_normal[n], j.p_stress[n]), (1.0, 1.0));
    assert_eq!((j.delta_normal[n], j.delta_stress[n]), (0.0, 0.0));
    assert!(j.p_normal.iter().chain(&j.p_stress).all(|&p| p > 0.0 && p <= 1.0));
}

#[test]
fn invalid_inputs() {
    let g = grid(1.0, 64);
    assert!(solve_jump(0.0, 1.0, 1.0, 1.0, 1.0, &g).is_err());
    assert!(solve_jump(1.0, -1.0, 1.0, 1.0, 1.0, &g).is_err());
    assert!(solve_jump(1.0, 1.0, -0.5, 1.0, 1.0, &g).is_err());
    let j = solve_jump(1.0, 2.0, 1.0, 1.0, 1.0, &g).unwrap();
    assert!(matches!(conditional_path(Some(0.0), &j), Err(Error::Domain(_))));
    assert!(matches!(conditional_path(Some(1.5), &j), Err(Error::Domain(_))));
}

#[test]
fn normal_delta_variation_of_constants() {
    let g = grid(1.0, 4096);
    let j = solve_jump(0.3, 0.8, 2.0, 1.0, 3.0, &g).unwrap();
    assert!(sup_diff(&delta_normal_voc(&j), &j.delta_normal) <= 1e-8);
}

#[test]
fn alpha_identity_with_jumps() {
    let g = grid(1.0, 4096);
    for (cn, cs, lam, rho) in [(0.5, 1.5, 1.0, 1.0), (0.2, 0.6, 3.0, 2.0), (1.0, 0.5, 0.5, 0.7)] {
        let j = solve_jump(cn, cs, lam, 1.0, rho, &g).unwrap();
        let lhs = 1.0 - rho * j.expected_alpha();
        let rhs = 1.0_f64.exp() * j.p_normal[0];
        assert!((lhs - rhs).abs() <= 1e-8, "{lhs} vs {rhs}");
    }
}

#[test]
fn quadrature_matches_compensator() {
    let g = grid(1.0, 4096);
    for (cn, cs, lam, rho) in [(0.2, 1.0, 1.0, 10.0), (0.5, 1.5, 4.0, 1.0), (0.3, 0.3, 2.0, 5.0)] {
        let j = solve_jump(cn, cs, lam, 1.0, rho, &g).unwrap();
        let (a, b) = (expected_beta(&j), j.expected_beta_compensator());
        assert!(rel(a, b) <= 1e-7, "{cn} {cs} {lam} {rho}: {a} vs {b}");
    }
}

#[test]
fn normal_delta_increases_with_intensity() {
    let g = grid(1.0, 1024);
    let mut prev = f64::NEG_INFINITY;
    for lam in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0] {
        let j = solve_jump(0.04, 0.09, lam, 1.0, 0.5, &g).unwrap();
        assert!(j.delta_normal[0] >= prev);
        prev = j.delta_normal[0];
    }
}

#[test]
fn scaled_normal_state_asymptotics() {
    // (ρP̲)' ≈ ρP̲(ρP̲/c̲ + 1 + λ) − λ c̄ e^{t−T}/(1 − e^{t−T}) for t ≤ T − 0.1
    let (cn, cs, lam, rho) = (0.02, 0.1, 1.0, 1e3);
    let g = grid(1.0, 8192);
    let j = solve_jump(cn, cs, lam, 1.0, rho, &g).unwrap();
    let h = g.step();
    let x: Vec<f64> = j.p_normal.iter().map(|p| rho * p).collect();
    let mut worst: f64 = 0.0;
    for i in 1..g.n_steps {
        let t = g.knots[i];
        if t > 0.9 {
            break;
        }
        let dx = (x[i + 1] - x[i - 1]) / (2.0 * h);
        let e = (t - 1.0_f64).exp();
        let rhs = x[i] * (x[i] / cn + 1.0 + lam) - lam * cs * e / (1.0 - e);
        let scale = x[i] * (x[i] / cn + 1.0 + lam);
        worst = worst.max((dx - rhs).abs() / scale);
    }
    assert!(worst < 1e-3, "worst relative residual {worst}");
}

#[test]
fn conditional_paths() {
    let g = grid(1.0, 512);
    let j = solve_jump(0.3, 0.9, 1.5, 1.0, 2.0, &g).unwrap();
    let none = conditional_path(None, &j).unwrap();
    assert_eq!(none.jump_time, None);
    assert_eq!(none.realized_p, j.p_normal);
    let early = conditional_path(Some(1e-9), &j).unwrap();
    assert_eq!(early.realized_p[0], j.p_normal[0]);
    assert_eq!(&early.realized_p[1..], &j.p_stress[1..]);
    let mid = conditional_path(Some(0.5), &j).unwrap();
    assert_eq!(mid.jump_time, Some(0.5));
    let k = g.knot_index(0.5).unwrap();
    assert_eq!(mid.realized_cost[k - 1], 0.3);
    assert_eq!(mid.realized_cost[k], 0.9);
    assert_eq!(&mid.realized_delta[..k], &j.delta_normal[..k]);
    assert_eq!(&mid.realized_delta[k..], &j.delta_stress[k..]);
    for path in [&none, &early, &mid] {
        assert_eq!(path.realized_h[0], 0.0);
        assert!(path.realized_h.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn conditional_beta_curve_matches_paths() {
    let g = grid(1.0, 512);
    let j = solve_jump(0.3, 0.9, 1.5, 1.0, 2.0, &g).unwrap();
    let curve = j.conditional_beta_curve();
    for u in [0.25, 0.5, 0.75, 1.0] {
        let path = conditional_path(Some(u), &j).unwrap();
        let direct = conditional_beta(&path, &j).unwrap();
        assert!((direct - conditional_beta_at(&curve, &g, u - 1e-12)).abs() <= 1e-10);
    }
    let none = conditional_beta(&conditional_path(None, &j).unwrap(), &j).unwrap();
    assert!((none - curve.1).abs() <= 1e-12);
}

#[test]
fn conditional_beta_zero_supply() {
    let g = grid(1.0, 256);
    let j = solve_jump(0.3, 0.9, 1.5, 0.0, 2.0, &g).unwrap();
    let path = conditional_path(Some(0.4), &j).unwrap();
    assert_eq!(conditional_beta(&path, &j).unwrap(), 0.0);
    assert_eq!(expected_beta(&j), 0.0);
}

#[test]
fn conditional_beta_grid_refinement() {
    let value = |n: usize| {
        let g = grid(1.0, n);
        let j = solve_jump(0.02, 0.10, 1.0, 1.0, 100.0, &g).unwrap();
        conditional_beta(&conditional_path(Some(0.5), &j).unwrap(), &j).unwrap()
    };
    let coarse = value(4096);
    let fine = value(4 * 4096);
    assert!((coarse - fine).abs() <= 1e-6, "{coarse} vs {fine}");
}

#[test]
fn expected_beta_monte_carlo() {
    let (cn, cs, lam, rho) = (0.02, 0.10, 1.0, 100.0);
    let g = grid(1.0, 4096);
    let j = solve_jump(cn, cs, lam, 1.0, rho, &g).unwrap();
    let curve = j.conditional_beta_curve();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tau = Exp::new(lam).unwrap();
    let draws = 200_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..draws {
        let b = conditional_beta_at(&curve, &g, tau.sample(&mut rng));
        sum += b;
        sq += b * b;
    }
    let mean = sum / draws as f64;
    let se = ((sq / draws as f64 - mean * mean) / draws as f64).sqrt();
    assert!((expected_beta(&j) - mean).abs() <= 3.0 * se, "{} vs {mean} ± {se}", expected_beta(&j));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_intensity_collapse_random(cn in 0.05..2.0f64, cs in 0.05..2.0f64, rho in 0.05..50.0f64, m in 0.0..2.0f64) {
        let g = grid(1.0, 1024);
        let j = solve_jump(cn, cs, 0.0, m, rho, &g).unwrap();
        let (pc, dc) = closed_paths(cn, m, rho, 1.0, &g.knots);
        prop_assert!(sup_diff(&j.p_normal, &pc) <= 1e-8);
        prop_assert!(sup_diff(&j.delta_normal, &dc) <= 1e-8);
    }

    #[test]
    fn normal_state_bounded(cn in 0.01..2.0f64, cs in 0.01..2.0f64, lam in 0.0..20.0f64, rho in 0.05..500.0f64) {
        let g = grid(1.0, 1024);
        let j = solve_jump(cn, cs, lam, 1.0, rho, &g).unwrap();
        prop_assert!(j.p_normal.iter().all(|&p| p > 0.0 && p <= 1.0));
    }
}
