//! Riccati coefficients for deterministic trading costs.
//!
//! With `φ = 0` the hedging coefficient solves the backward equation
//!
//! ```text
//! P' = P (ρP/c + 1),   P(T) = 1
//! δ' = δ (ρP/c + 1) − c m,   δ(T) = 0
//! ```
//!
//! The numerical route integrates `w = 1/P` instead, which satisfies the
//! linear equation `w' = −w − ρ/c`. It stays accurate when `ρ/c` is large and
//! `P` has a thin boundary layer at `T`. `δ/P` is then a plain integral,
//! `(δ/P)' = −c m / P`.
//!
//! For constant `c` the closed forms are
//!
//! ```text
//! P(t) = c e^{t−T} / (c + (1 − e^{t−T}) ρ)
//! δ(t) = c m [(c+ρ)(1 − e^{t−T}) − ρ e^{t−T}(T − t)] / (c + (1 − e^{t−T}) ρ)
//! β(t) = m [t − (c + ρT)(e^t − 1) / ((c+ρ) e^T − ρ)]
//! ```

use serde::{Deserialize, Serialize};

use crate::core_model::{CostPath, TimeGrid};
use crate::error::{Error, Result};
use crate::numerics::{cumulative_simpson, cumulative_simpson_segments, rk4_backward};

/// Discretised coefficient and equilibrium paths on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPaths {
    pub grid: TimeGrid,
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
    pub delta: Vec<f64>,
    /// Cumulative `∫_0^t (ρP/c + 1) ds`.
    pub h: Vec<f64>,
    /// Dealer inventory `Q`.
    pub inventory: Vec<f64>,
    pub mu: Vec<f64>,
    /// Dealer trading rate.
    pub q: Vec<f64>,
    /// Arbitrageur trading rate.
    pub q_tilde: Vec<f64>,
    /// Cost at each knot.
    pub c: Vec<f64>,
    pub s: f64,
    pub m: f64,
    pub rho: f64,
}

fn check_time(t: f64, horizon: f64) -> Result<()> {
    let eps = 1e-12 * horizon.max(1.0);
    if !(t >= -eps && t <= horizon + eps) {
        return Err(Error::Domain(format!("t = {t} outside [0, {horizon}]")));
    }
    Ok(())
}

fn check_constant(c: f64, rho: f64, horizon: f64) -> Result<()> {
    if !(c > 0.0) {
        return Err(Error::invalid("c", "cost must be strictly positive"));
    }
    if !(rho >= 0.0) {
        return Err(Error::invalid("rho", "rho must be nonnegative"));
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon_T", "horizon must be strictly positive"));
    }
    Ok(())
}

pub fn p_closed(t: f64, c: f64, rho: f64, horizon: f64) -> Result<f64> {
    check_constant(c, rho, horizon)?;
    check_time(t, horizon)?;
    let e = (t - horizon).exp();
    Ok(c * e / (c + (1.0 - e) * rho))
}

pub fn delta_closed(t: f64, c: f64, m: f64, rho: f64, horizon: f64) -> Result<f64> {
    check_constant(c, rho, horizon)?;
    check_time(t, horizon)?;
    let e = (t - horizon).exp();
    let num = (c + rho) * (1.0 - e) - rho * e * (horizon - t);
    Ok(c * m * num / (c + (1.0 - e) * rho))
}

pub fn beta_closed(t: f64, c: f64, m: f64, rho: f64, horizon: f64) -> Result<f64> {
    check_constant(c, rho, horizon)?;
    check_time(t, horizon)?;
    let den = (c + rho) * horizon.exp() - rho;
    Ok(m * (t - (c + rho * horizon) * t.exp_m1() / den))
}

/// Backward RK4 for `w = 1/P`; returns `w` at every knot.
pub fn solve_reciprocal_backward(cost: &CostPath, rho: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    if !(rho >= 0.0) {
        return Err(Error::invalid("rho", "rho must be nonnegative"));
    }
    cost.check(grid)?;
    let ys = rk4_backward(&grid.knots, [1.0], |t, y, k| {
        let c = cost.on_interval(grid, k, t);
        [-y[0] - rho / c]
    });
    Ok(ys.into_iter().map(|y| y[0]).collect())
}

/// `P` on the grid, `P(T) = 1`.
pub fn solve_riccati_backward(cost: &CostPath, rho: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    let w = solve_reciprocal_backward(cost, rho, grid)?;
    Ok(w.into_iter().map(|w| 1.0 / w).collect())
}

/// `δ` from `δ(t) = P(t) ∫_t^T c m / P ds`, the integrating-factor form of the
/// backward equation.
pub fn solve_delta_backward(cost: &CostPath, p: &[f64], m: f64, rho: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    grid.check_len(p.len())?;
    if !(rho >= 0.0) {
        return Err(Error::invalid("rho", "rho must be nonnegative"));
    }
    cost.check(grid)?;
    if m == 0.0 {
        return Ok(vec![0.0; grid.len()]);
    }
    let segs = cost.segments(grid);
    let cum = cumulative_simpson_segments(&segs, grid.len(), grid.step(), |s, i| {
        cost.in_segment(grid, segs[s], i) * m / p[i]
    });
    let total = cum[grid.n_steps];
    Ok(p.iter().zip(&cum).map(|(pi, ci)| pi * (total - ci)).collect())
}

/// Running `∫_0^t e^{−s} c(s) ds`.
pub fn discounted_cost_integral(cost: &CostPath, grid: &TimeGrid) -> Vec<f64> {
    let segs = cost.segments(grid);
    cumulative_simpson_segments(&segs, grid.len(), grid.step(), |s, i| {
        (-grid.knots[i]).exp() * cost.in_segment(grid, segs[s], i)
    })
}

/// Fills `Λ`, `H`, `Q`, `q`, `μ`, `q̃` from `P` and `δ`.
///
/// `Q = ρ α 𝔰 + β` with the integrating-factor solutions
/// `α(t) = (1 − e^t P(0)/P(t))/ρ` and
/// `β(t) = e^t/(ρP(t)) [e^{−t} δ(t) − δ(0) + m ∫_0^t e^{−s} c ds]`.
pub fn assemble_paths(
    p: &[f64],
    delta: &[f64],
    s: f64,
    cost: &CostPath,
    m: f64,
    rho: f64,
    grid: &TimeGrid,
) -> Result<CoefficientPaths> {
    grid.check_len(p.len())?;
    grid.check_len(delta.len())?;
    if !(rho > 0.0) {
        return Err(Error::invalid("rho", "rho must be strictly positive"));
    }
    cost.check(grid)?;
    let n = grid.len();
    let c = cost.knot_values(grid);
    let k_int = discounted_cost_integral(cost, grid);
    let (p0, d0) = (p[0], delta[0]);
    let mut out = CoefficientPaths {
        grid: grid.clone(),
        p: p.to_vec(),
        lambda: vec![0.0; n],
        delta: delta.to_vec(),
        h: vec![0.0; n],
        inventory: vec![0.0; n],
        mu: vec![0.0; n],
        q: vec![0.0; n],
        q_tilde: vec![0.0; n],
        c: c.clone(),
        s,
        m,
        rho,
    };
    for i in 0..n {
        let t = grid.knots[i];
        let lam = p[i] * s + delta[i] / rho;
        let alpha = (1.0 - t.exp() * p0 / p[i]) / rho;
        let beta = if i == 0 {
            0.0
        } else {
            t.exp() / (rho * p[i]) * ((-t).exp() * delta[i] - d0 + m * k_int[i])
        };
        let qq = rho * alpha * s + beta;
        let rate = rho * (lam - p[i] * qq) / c[i];
        out.lambda[i] = lam;
        out.h[i] = (p[i] / p0).ln();
        out.inventory[i] = qq;
        out.q[i] = rate;
        out.q_tilde[i] = m - rate;
        out.mu[i] = c[i] * (m - rate);
    }
    Ok(out)
}

/// Solves `P`, `δ` and assembles every path for a deterministic cost.
pub fn solve_paths(cost: &CostPath, m: f64, rho: f64, s: f64, grid: &TimeGrid) -> Result<CoefficientPaths> {
    let p = solve_riccati_backward(cost, rho, grid)?;
    let delta = solve_delta_backward(cost, &p, m, rho, grid)?;
    assemble_paths(&p, &delta, s, cost, m, rho, grid)
}

/// Running `H(t) = ∫_0^t (ρP/c + 1) ds` by quadrature.
pub fn h_quadrature(p: &[f64], cost: &CostPath, rho: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    grid.check_len(p.len())?;
    let segs = cost.segments(grid);
    Ok(cumulative_simpson_segments(&segs, grid.len(), grid.step(), |s, i| {
        rho * p[i] / cost.in_segment(grid, segs[s], i) + 1.0
    }))
}

/// `e^{−H(T)+T} ∫_0^T (e^{−s}/c) e^{H} x ds` with `H` from quadrature.
fn weighted_terminal(x: &[f64], p: &[f64], cost: &CostPath, rho: f64, grid: &TimeGrid) -> Result<f64> {
    grid.check_len(x.len())?;
    let h = h_quadrature(p, cost, rho, grid)?;
    let segs = cost.segments(grid);
    let cum = cumulative_simpson_segments(&segs, grid.len(), grid.step(), |s, i| {
        let t = grid.knots[i];
        (-t + h[i]).exp() / cost.in_segment(grid, segs[s], i) * x[i]
    });
    let horizon = grid.horizon();
    Ok((horizon - h[grid.n_steps]).exp() * cum[grid.n_steps])
}

/// `α(T) = e^{−H(T)+T} ∫_0^T (e^{−s}/c) e^{H} P ds` by quadrature.
///
/// Needs the boundary layer of width `c/ρ` to be resolved by the grid.
pub fn alpha_t(p: &[f64], cost: &CostPath, rho: f64, grid: &TimeGrid) -> Result<f64> {
    grid.check_len(p.len())?;
    cost.check(grid)?;
    weighted_terminal(p, p, cost, rho, grid)
}

/// `β(T) = e^{−H(T)+T} ∫_0^T (e^{−s}/c) e^{H} δ ds` by quadrature.
pub fn beta_t(p: &[f64], delta: &[f64], cost: &CostPath, rho: f64, grid: &TimeGrid) -> Result<f64> {
    grid.check_len(p.len())?;
    cost.check(grid)?;
    weighted_terminal(delta, p, cost, rho, grid)
}

/// Limits as `ρ → ∞` of `(ρ e^T P(0), ρ β(T), δ(0))` for constant `c`.
pub fn large_rho_asymptotics(c: f64, m: f64, horizon: f64) -> (f64, f64, f64) {
    let a = -(-horizon).exp_m1(); // 1 - e^{-T}
    let e = (-horizon).exp();
    (
        c / a,
        c * m * (horizon - a) / a,
        c * m * (a - horizon * e) / a,
    )
}

/// Knot-wise reciprocal of a path.
pub fn reciprocal(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| 1.0 / v).collect()
}

/// Running integral of a knot-sampled function on a uniform grid.
pub fn running_integral(y: &[f64], grid: &TimeGrid) -> Vec<f64> {
    cumulative_simpson(y, grid.step())
}
