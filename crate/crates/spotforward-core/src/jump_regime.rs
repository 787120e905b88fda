//! Offshore cost that jumps once from `c̲` to `c̄` at the first arrival `τ`
//! of a Poisson clock with intensity `λ`.
//!
//! Stressed state: the deterministic equations with `c̄`. Normal state:
//!
//! ```text
//! P̲' + λ(P̄ − P̲) = P̲ (ρP̲/c̲ + 1)
//! δ̲' = δ̲ (ρP̲/c̲ + 1 + λ) − λ δ̄ − c̲ m
//! ```
//!
//! Both states are integrated together in reciprocal variables
//! `(1/P̄, δ̄/P̄, 1/P̲, δ̲/P̲)`:
//!
//! ```text
//! w̄' = −w̄ − ρ/c̄                  ḡ' = −c̄ m w̄
//! w̲' = −ρ/c̲ − (1+λ) w̲ + λ w̲²/w̄   g̲' = λ w̲ g̲/w̄ − w̲ (c̲ m + λ ḡ/w̄)
//! ```

use serde::{Deserialize, Serialize};

use crate::core_model::{CostPath, TimeGrid};
use crate::deterministic_engine::{solve_delta_backward, solve_riccati_backward};
use crate::error::{Error, Result};
use crate::numerics::{cumulative_simpson, rk4_backward, simpson};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpCoefficients {
    pub grid: TimeGrid,
    pub p_normal: Vec<f64>,
    pub p_stress: Vec<f64>,
    pub delta_normal: Vec<f64>,
    pub delta_stress: Vec<f64>,
    pub lambda: f64,
    pub c_normal: f64,
    pub c_stress: f64,
    pub m: f64,
    pub rho: f64,
}

/// Realised coefficients given the stress time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPath {
    /// Effective jump time (first knot at or after the requested time);
    /// `None` when no stress occurs before `T`.
    pub jump_time: Option<f64>,
    /// Knot index where the stressed state starts (`n + 1` when no jump).
    pub jump_index: usize,
    pub realized_cost: Vec<f64>,
    pub realized_p: Vec<f64>,
    pub realized_delta: Vec<f64>,
    pub realized_h: Vec<f64>,
}

fn check_costs(c_normal: f64, c_stress: f64, lambda: f64, rho: f64) -> Result<()> {
    if !(c_normal > 0.0) {
        return Err(Error::invalid("cost.c_normal", "cost must be strictly positive"));
    }
    if !(c_stress > 0.0) {
        return Err(Error::invalid("cost.c_stress", "cost must be strictly positive"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("cost.lambda", "lambda must be nonnegative"));
    }
    if !(rho >= 0.0) {
        return Err(Error::invalid("rho", "rho must be nonnegative"));
    }
    Ok(())
}

/// `(P̄, δ̄)`: the deterministic solution with cost `c̄`.
pub fn stressed_coefficients(c_stress: f64, m: f64, rho: f64, grid: &TimeGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(c_stress > 0.0) {
        return Err(Error::invalid("cost.c_stress", "cost must be strictly positive"));
    }
    let cost = CostPath::Constant(c_stress);
    let p = solve_riccati_backward(&cost, rho, grid)?;
    let d = solve_delta_backward(&cost, &p, m, rho, grid)?;
    Ok((p, d))
}

/// Joint backward solve of both states.
pub fn solve_jump(c_normal: f64, c_stress: f64, lambda: f64, m: f64, rho: f64, grid: &TimeGrid) -> Result<JumpCoefficients> {
    check_costs(c_normal, c_stress, lambda, rho)?;
    let (rl, rb) = (rho / c_normal, rho / c_stress);
    let ys = rk4_backward(&grid.knots, [1.0, 0.0, 1.0, 0.0], |_, y, _| {
        let [wb, gb, wl, gl] = *y;
        let ratio = wl / wb;
        [
            -wb - rb,
            -c_stress * m * wb,
            -rl - (1.0 + lambda) * wl + lambda * wl * ratio,
            lambda * ratio * gl - wl * (c_normal * m + lambda * gb / wb),
        ]
    });
    let n = grid.len();
    let mut out = JumpCoefficients {
        grid: grid.clone(),
        p_normal: Vec::with_capacity(n),
        p_stress: Vec::with_capacity(n),
        delta_normal: Vec::with_capacity(n),
        delta_stress: Vec::with_capacity(n),
        lambda,
        c_normal,
        c_stress,
        m,
        rho,
    };
    for y in &ys {
        let [wb, gb, wl, gl] = *y;
        if !(wl > 0.0 && wb > 0.0) || !wl.is_finite() {
            return Err(Error::NonConvergence("normal-state coefficient left (0, inf)".into()));
        }
        out.p_stress.push(1.0 / wb);
        out.delta_stress.push(gb / wb);
        out.p_normal.push(1.0 / wl);
        out.delta_normal.push(gl / wl);
    }
    Ok(out)
}

/// `(P̲, δ̲)` for the normal state.
pub fn normal_coefficients(
    c_normal: f64,
    c_stress: f64,
    lambda: f64,
    m: f64,
    rho: f64,
    grid: &TimeGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let j = solve_jump(c_normal, c_stress, lambda, m, rho, grid)?;
    Ok((j.p_normal, j.delta_normal))
}

/// `δ̲(t) = e^{H̲(t)} ∫_t^T e^{−H̲(s)} (λ δ̄ + c̲ m) ds` with
/// `H̲(t) = ∫_0^t (ρP̲/c̲ + 1 + λ) ds`, all by quadrature.
pub fn delta_normal_voc(j: &JumpCoefficients) -> Vec<f64> {
    let g = &j.grid;
    let h = g.step();
    let integrand: Vec<f64> = j.p_normal.iter().map(|p| j.rho * p / j.c_normal + 1.0 + j.lambda).collect();
    let hh = cumulative_simpson(&integrand, h);
    let src: Vec<f64> = (0..g.len())
        .map(|i| (-hh[i]).exp() * (j.lambda * j.delta_stress[i] + j.c_normal * j.m))
        .collect();
    let cum = cumulative_simpson(&src, h);
    let total = cum[g.n_steps];
    (0..g.len()).map(|i| hh[i].exp() * (total - cum[i])).collect()
}

impl JumpCoefficients {
    /// Running integrals shared by the conditional path functionals.
    fn realized_parts(&self, x_normal: &[f64], x_stress: &[f64]) -> RealizedParts {
        let g = &self.grid;
        let h = g.step();
        let hn: Vec<f64> = self.p_normal.iter().map(|p| self.rho * p / self.c_normal + 1.0).collect();
        let hs: Vec<f64> = self.p_stress.iter().map(|p| self.rho * p / self.c_stress + 1.0).collect();
        let hn = cumulative_simpson(&hn, h);
        let hs = cumulative_simpson(&hs, h);
        let an: Vec<f64> = (0..g.len())
            .map(|i| (hn[i] - g.knots[i]).exp() / self.c_normal * x_normal[i])
            .collect();
        let bs: Vec<f64> = (0..g.len())
            .map(|i| (hs[i] - g.knots[i]).exp() / self.c_stress * x_stress[i])
            .collect();
        let an = cumulative_simpson(&an, h);
        let bs = cumulative_simpson(&bs, h);
        RealizedParts { hn, hs, an, bs }
    }

    /// `x(T | τ = t_j)` for every knot `j`, plus the no-jump value, where
    /// `x(T) = e^{−H(T)+T} ∫_0^T (e^{−s}/c) e^{H} y ds` along the realised path.
    fn terminal_functional(&self, y_normal: &[f64], y_stress: &[f64]) -> (Vec<f64>, f64) {
        let g = &self.grid;
        let n = g.n_steps;
        let horizon = g.horizon();
        let r = self.realized_parts(y_normal, y_stress);
        let b_total = r.bs[n];
        let by_jump = (0..=n)
            .map(|j| {
                let h_terminal = r.hn[j] + r.hs[n] - r.hs[j];
                let tail = (r.hn[j] - r.hs[j]).exp() * (b_total - r.bs[j]);
                (horizon - h_terminal).exp() * (r.an[j] + tail)
            })
            .collect();
        let none = (horizon - r.hn[n]).exp() * r.an[n];
        (by_jump, none)
    }

    /// `β(T | τ = t_j)` for every knot and the no-jump value.
    pub fn conditional_beta_curve(&self) -> (Vec<f64>, f64) {
        self.terminal_functional(&self.delta_normal, &self.delta_stress)
    }

    /// `α(T | τ = t_j)` for every knot and the no-jump value.
    pub fn conditional_alpha_curve(&self) -> (Vec<f64>, f64) {
        self.terminal_functional(&self.p_normal, &self.p_stress)
    }

    fn expectation(&self, curve: &(Vec<f64>, f64)) -> f64 {
        let g = &self.grid;
        let lam = self.lambda;
        if lam == 0.0 {
            return curve.1;
        }
        let weighted: Vec<f64> = g
            .knots
            .iter()
            .zip(&curve.0)
            .map(|(u, b)| lam * (-lam * u).exp() * b)
            .collect();
        simpson(&weighted, g.step()) + (-lam * g.horizon()).exp() * curve.1
    }

    /// `E[α(T)]` over the law of `τ`.
    pub fn expected_alpha(&self) -> f64 {
        self.expectation(&self.conditional_alpha_curve())
    }

    /// `∫_0^T e^{−s} E[c(s)] ds`.
    pub fn expected_discounted_cost(&self) -> f64 {
        expected_discounted_cost(self.c_normal, self.c_stress, self.lambda, self.grid.horizon())
    }

    /// `E[β(T)]` from `ρ E[β(T)] = e^T (m ∫_0^T e^{−s} E[c] ds − δ̲(0))`.
    pub fn expected_beta_compensator(&self) -> f64 {
        let horizon = self.grid.horizon();
        horizon.exp() * (self.m * self.expected_discounted_cost() - self.delta_normal[0]) / self.rho
    }
}

struct RealizedParts {
    hn: Vec<f64>,
    hs: Vec<f64>,
    an: Vec<f64>,
    bs: Vec<f64>,
}

/// `∫_0^T e^{−s} E[c(s)] ds` for the single-jump cost.
pub fn expected_discounted_cost(c_normal: f64, c_stress: f64, lambda: f64, horizon: f64) -> f64 {
    let a = -(-horizon).exp_m1();
    let b = -(-(1.0 + lambda) * horizon).exp_m1() / (1.0 + lambda);
    c_stress * a + (c_normal - c_stress) * b
}

/// Splices the two states at the first knot at or after `jump_time`.
pub fn conditional_path(jump_time: Option<f64>, coeffs: &JumpCoefficients) -> Result<ConditionalPath> {
    let g = &coeffs.grid;
    let n = g.n_steps;
    let j = match jump_time {
        None => n + 1,
        Some(u) => {
            if !(u > 0.0 && u <= g.horizon() * (1.0 + 1e-12)) {
                return Err(Error::Domain(format!("jump time {u} outside (0, T]")));
            }
            g.ceil_index(u).max(1)
        }
    };
    let h = g.step();
    let rho = coeffs.rho;
    let hn: Vec<f64> = coeffs.p_normal.iter().map(|p| rho * p / coeffs.c_normal + 1.0).collect();
    let hs: Vec<f64> = coeffs.p_stress.iter().map(|p| rho * p / coeffs.c_stress + 1.0).collect();
    let hn = cumulative_simpson(&hn, h);
    let hs = cumulative_simpson(&hs, h);
    let mut path = ConditionalPath {
        jump_time: if j <= n { Some(g.knots[j]) } else { None },
        jump_index: j,
        realized_cost: Vec::with_capacity(g.len()),
        realized_p: Vec::with_capacity(g.len()),
        realized_delta: Vec::with_capacity(g.len()),
        realized_h: Vec::with_capacity(g.len()),
    };
    for i in 0..g.len() {
        if i < j {
            path.realized_cost.push(coeffs.c_normal);
            path.realized_p.push(coeffs.p_normal[i]);
            path.realized_delta.push(coeffs.delta_normal[i]);
            path.realized_h.push(hn[i]);
        } else {
            path.realized_cost.push(coeffs.c_stress);
            path.realized_p.push(coeffs.p_stress[i]);
            path.realized_delta.push(coeffs.delta_stress[i]);
            path.realized_h.push(hn[j] + hs[i] - hs[j]);
        }
    }
    Ok(path)
}

/// `β(T | τ)` along a realised path by quadrature, split at the jump knot.
pub fn conditional_beta(path: &ConditionalPath, coeffs: &JumpCoefficients) -> Result<f64> {
    let g = &coeffs.grid;
    g.check_len(path.realized_p.len())?;
    let n = g.n_steps;
    let h = g.step();
    let horizon = g.horizon();
    let j = path.jump_index.min(n);
    let integrand = |t: f64, hh: f64, c: f64, d: f64| (hh - t).exp() / c * d;
    // normal piece on [0, t_j], stressed piece on [t_j, T]
    let normal: Vec<f64> = (0..=j)
        .map(|i| integrand(g.knots[i], path.realized_h[i], coeffs.c_normal, coeffs.delta_normal[i]))
        .collect();
    let mut total = simpson(&normal, h);
    if path.jump_index <= n {
        let stressed: Vec<f64> = (j..=n)
            .map(|i| integrand(g.knots[i], path.realized_h[i], coeffs.c_stress, coeffs.delta_stress[i]))
            .collect();
        total += simpson(&stressed, h);
    }
    Ok((horizon - path.realized_h[n]).exp() * total)
}

/// `E[β(T)] = ∫_0^T λ e^{−λu} β(T|u) du + e^{−λT} β(T|no jump)` by Simpson
/// over the grid knots.
pub fn expected_beta(coeffs: &JumpCoefficients) -> f64 {
    let curve = coeffs.conditional_beta_curve();
    coeffs.expectation(&curve)
}

/// `β(T | τ = u)` for any `u`, linear between knots; `u ≥ T` means no jump.
pub fn conditional_beta_at(curve: &(Vec<f64>, f64), grid: &TimeGrid, u: f64) -> f64 {
    let horizon = grid.horizon();
    if u >= horizon {
        return curve.1;
    }
    let x = (u / grid.step()).max(0.0);
    let k = (x.floor() as usize).min(grid.n_steps - 1);
    let w = x - k as f64;
    curve.0[k] * (1.0 - w) + curve.0[k + 1] * w
}
