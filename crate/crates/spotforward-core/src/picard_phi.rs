//! Small risk aversion `φ > 0` with a deterministic volatility `σ̄(t)`.
//!
//! The perturbation `(μ̂, Q̂, Ŝ)` around the `φ = 0` equilibrium `(μ̄, Q̄, S̄)`
//! solves the linear two-point problem
//!
//! ```text
//! μ̂(t) = ρ Q̂(T) − ∫_t^T (μ̂ − φ σ̄² (Q̂ + Q̄)) ds
//! Q̂(t) = −∫_0^t μ̂ / c ds
//! Ŝ(t) = −∫_t^T μ̂ ds
//! ```
//!
//! One Picard step takes `Q̂` from the previous iterate in both the terminal
//! value and the source, integrates `μ̂` backward and `Q̂` forward with the
//! trapezoid rule. A fixed point of the step is the solution of the
//! discretised two-point system.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::core_model::{demand_at, CostPath, DemandCurve, TimeGrid};
use crate::deterministic_engine::{solve_paths, CoefficientPaths};
use crate::equilibrium_calibration::bisect_monotone;
use crate::error::{Error, Result};
use crate::numerics::{rk4_backward, simpson, sup_diff, sup_norm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationState {
    pub grid: TimeGrid,
    pub hat_mu: Vec<f64>,
    pub hat_q: Vec<f64>,
    pub hat_s: Vec<f64>,
    pub sigma_bar: Vec<f64>,
    pub phi: f64,
}

impl PerturbationState {
    pub fn zero(grid: &TimeGrid, sigma_bar: &[f64], phi: f64) -> Result<Self> {
        grid.check_len(sigma_bar.len())?;
        if !(phi >= 0.0 && phi.is_finite()) {
            return Err(Error::invalid("phi", "phi must be nonnegative"));
        }
        if sigma_bar.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("sigma_bar", "volatility must be finite"));
        }
        let n = grid.len();
        Ok(PerturbationState {
            grid: grid.clone(),
            hat_mu: vec![0.0; n],
            hat_q: vec![0.0; n],
            hat_s: vec![0.0; n],
            sigma_bar: sigma_bar.to_vec(),
            phi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiThresholds {
    pub eta: f64,
    pub phi_0: f64,
    pub phi_1: f64,
    pub phi_2: f64,
    pub h_q0: f64,
    /// `R̄² = ∫σ̄² + R²`.
    pub r_bar_sq: f64,
    pub r_tilde: f64,
    pub c_lambda: f64,
    pub h_q: f64,
    pub c_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub eta: f64,
    pub iterate_norms: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `(φ₁, φ₂)` at ball radius `R = 1`; `None` when `η ≤ 0`.
    pub phi_thresholds: Option<(f64, f64)>,
    pub converged: bool,
    pub iterations: usize,
}

/// `1 − ρ²T²‖1/c‖²`.
pub fn structural_eta(rho: f64, horizon: f64, c_min: f64) -> f64 {
    let x = rho * horizon / c_min;
    1.0 - x * x
}

fn check_benchmark(prev: &PerturbationState, b: &CoefficientPaths) -> Result<()> {
    if prev.grid.n_steps != b.grid.n_steps {
        return Err(Error::GridMismatch { expected: b.grid.len(), got: prev.grid.len() });
    }
    let n = b.grid.len();
    for len in [prev.hat_mu.len(), prev.hat_q.len(), prev.sigma_bar.len(), b.inventory.len(), b.c.len()] {
        if len != n {
            return Err(Error::GridMismatch { expected: n, got: len });
        }
    }
    Ok(())
}

fn backward_mu(terminal: f64, src: &[f64], h: f64) -> Vec<f64> {
    let n = src.len() - 1;
    let mut mu = vec![0.0; n + 1];
    mu[n] = terminal;
    for i in (0..n).rev() {
        mu[i] = (mu[i + 1] * (1.0 - 0.5 * h) + 0.5 * h * (src[i] + src[i + 1])) / (1.0 + 0.5 * h);
    }
    mu
}

fn forward_q(mu: &[f64], c: &[f64], h: f64) -> Vec<f64> {
    let mut q = vec![0.0; mu.len()];
    for i in 1..mu.len() {
        q[i] = q[i - 1] - 0.5 * h * (mu[i - 1] / c[i - 1] + mu[i] / c[i]);
    }
    q
}

fn source(prev: &PerturbationState, b: &CoefficientPaths) -> Vec<f64> {
    prev.sigma_bar
        .iter()
        .zip(prev.hat_q.iter().zip(&b.inventory))
        .map(|(s, (qh, qb))| prev.phi * s * s * (qh + qb))
        .collect()
}

/// One lagged Picard step.
pub fn picard_step(prev: &PerturbationState, benchmark: &CoefficientPaths) -> Result<PerturbationState> {
    check_benchmark(prev, benchmark)?;
    let h = benchmark.grid.step();
    let n = benchmark.grid.n_steps;
    let src = source(prev, benchmark);
    let mu = backward_mu(benchmark.rho * prev.hat_q[n], &src, h);
    let q = forward_q(&mu, &benchmark.c, h);
    let mut s_hat = vec![0.0; n + 1];
    for i in (0..n).rev() {
        s_hat[i] = s_hat[i + 1] - 0.5 * h * (mu[i] + mu[i + 1]);
    }
    Ok(PerturbationState {
        grid: prev.grid.clone(),
        hat_mu: mu,
        hat_q: q,
        hat_s: s_hat,
        sigma_bar: prev.sigma_bar.clone(),
        phi: prev.phi,
    })
}

/// Slope of the terminal shooting map `z ↦ Q̂(T)` with `μ̂(T) = ρz` and the
/// source frozen at `prev`.
pub fn shooting_gain(prev: &PerturbationState, benchmark: &CoefficientPaths) -> Result<f64> {
    check_benchmark(prev, benchmark)?;
    let h = benchmark.grid.step();
    let n = benchmark.grid.n_steps;
    let src = source(prev, benchmark);
    let at = |z: f64| forward_q(&backward_mu(benchmark.rho * z, &src, h), &benchmark.c, h)[n];
    Ok(at(1.0) - at(0.0))
}

/// Iterates [`picard_step`] from the zero state.
pub fn run_picard(
    benchmark: &CoefficientPaths,
    sigma_bar: &[f64],
    phi: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(PerturbationState, ContractionReport)> {
    let mut state = PerturbationState::zero(&benchmark.grid, sigma_bar, phi)?;
    let c_min = benchmark.c.iter().cloned().fold(f64::INFINITY, f64::min);
    let eta = structural_eta(benchmark.rho, benchmark.grid.horizon(), c_min);
    let phi_thresholds = if eta > 0.0 {
        phi_thresholds(benchmark, 1.0, sigma_bar).ok().map(|t| (t.phi_1, t.phi_2))
    } else {
        None
    };
    let mut norms = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let next = picard_step(&state, benchmark)?;
        let d = sup_diff(&next.hat_mu, &state.hat_mu).max(sup_diff(&next.hat_q, &state.hat_q));
        if let Some(&last) = norms.last() {
            if last > 0.0 && d > 0.0 {
                ratios.push(d / last);
            }
        }
        norms.push(d);
        state = next;
        if d <= tol {
            converged = true;
            break;
        }
        if !d.is_finite() {
            break;
        }
    }
    debug!("run_picard: {} iterations, converged = {converged}", norms.len());
    let iterations = norms.len();
    Ok((
        state,
        ContractionReport { eta, iterate_norms: norms, ratios, phi_thresholds, converged, iterations },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaBoundReport {
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
    pub inventory: Vec<f64>,
    pub c_p: f64,
    pub c_lambda: f64,
    pub h_q: f64,
    /// `C_P − max P`.
    pub margin_p: f64,
    pub margin_lambda: f64,
    pub margin_q: f64,
    pub violations: Vec<String>,
}

impl LemmaBoundReport {
    pub fn into_result(self) -> Result<Self> {
        match self.violations.first() {
            Some(v) => Err(Error::BoundViolation(v.clone())),
            None => Ok(self),
        }
    }
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

/// Solves `P` with the `−(φ/ρ)σ̄²` driver, `Λ` and `Q`, then checks the
/// a-priori bounds `0 < P ≤ C_P`, `|Λ| ≤ C_Λ`, `|Q| ≤ h_Q`.
pub fn lemma_bounds(
    cost: &CostPath,
    rho: f64,
    m: f64,
    s: f64,
    sigma_bar: &[f64],
    phi: f64,
    grid: &TimeGrid,
) -> Result<LemmaBoundReport> {
    grid.check_len(sigma_bar.len())?;
    cost.check(grid)?;
    if !(rho > 0.0) {
        return Err(Error::invalid("rho", "rho must be strictly positive"));
    }
    if !(phi >= 0.0) {
        return Err(Error::invalid("phi", "phi must be nonnegative"));
    }
    let knots = &grid.knots;
    let h = grid.step();
    let sig2 = |k: usize, t: f64| {
        let w = (t - knots[k]) / h;
        let v = lerp(sigma_bar[k], sigma_bar[k + 1], w);
        v * v
    };
    let ys = rk4_backward(knots, [1.0, s], |t, y, k| {
        let c = cost.on_interval(grid, k, t);
        let a = rho * y[0] / c + 1.0;
        [y[0] * a - phi / rho * sig2(k, t), y[1] * a - c * m / rho]
    });
    let p: Vec<f64> = ys.iter().map(|y| y[0]).collect();
    let lam: Vec<f64> = ys.iter().map(|y| y[1]).collect();
    let mut q = vec![0.0; grid.len()];
    for k in 0..grid.n_steps {
        let t0 = knots[k];
        let at = |t: f64, qq: f64| {
            let w = (t - t0) / h;
            let c = cost.on_interval(grid, k, t);
            rho * (lerp(lam[k], lam[k + 1], w) - lerp(p[k], p[k + 1], w) * qq) / c
        };
        let y = q[k];
        let k1 = at(t0, y);
        let k2 = at(t0 + 0.5 * h, y + 0.5 * h * k1);
        let k3 = at(t0 + 0.5 * h, y + 0.5 * h * k2);
        let k4 = at(t0 + h, y + h * k3);
        q[k + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let horizon = grid.horizon();
    let sig_int = simpson(&sigma_bar.iter().map(|v| v * v).collect::<Vec<_>>(), h);
    let c_p = 1.0 + phi / rho * sig_int;
    let cm_sup = (cost.sup(grid) * m).abs().max((cost.inf(grid) * m).abs());
    let c_lambda = 2.0 * s.abs() + 4.0 * cm_sup * horizon / rho;
    let h_q = rho / cost.inf(grid) * c_lambda * horizon;
    // room for quadrature error in ∫σ̄² and the discrete paths
    let slack = 1e-9;
    let mut violations = Vec::new();
    for i in 0..grid.len() {
        let t = knots[i];
        if !(p[i] > 0.0) || p[i] > c_p + slack {
            violations.push(format!("P = {} outside (0, {c_p}] at t = {t}", p[i]));
        }
        if lam[i].abs() > c_lambda + slack {
            violations.push(format!("|Lambda| = {} exceeds {c_lambda} at t = {t}", lam[i].abs()));
        }
        if q[i].abs() > h_q + slack {
            violations.push(format!("|Q| = {} exceeds {h_q} at t = {t}", q[i].abs()));
        }
    }
    Ok(LemmaBoundReport {
        margin_p: c_p - p.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        margin_lambda: c_lambda - sup_norm(&lam),
        margin_q: h_q - sup_norm(&q),
        p,
        lambda: lam,
        inventory: q,
        c_p,
        c_lambda,
        h_q,
        violations,
    })
}

/// Explicit small-`φ` thresholds for a ball of radius `R`.
pub fn phi_thresholds(benchmark: &CoefficientPaths, radius: f64, sigma_bar: &[f64]) -> Result<PhiThresholds> {
    benchmark.grid.check_len(sigma_bar.len())?;
    if !(radius > 0.0) {
        return Err(Error::invalid("radius", "radius must be strictly positive"));
    }
    let rho = benchmark.rho;
    let horizon = benchmark.grid.horizon();
    let c_min = benchmark.c.iter().cloned().fold(f64::INFINITY, f64::min);
    let cm_sup = benchmark.c.iter().map(|c| (c * benchmark.m).abs()).fold(0.0, f64::max);
    let eta = structural_eta(rho, horizon, c_min);
    if !(eta > 0.0) {
        return Err(Error::StructuralCondition { eta });
    }
    let rc = rho / c_min;
    let h_q0 = rc * sup_norm(&benchmark.lambda) * horizon;
    let sig_sq = simpson(&sigma_bar.iter().map(|v| v * v).collect::<Vec<_>>(), benchmark.grid.step());
    let r_bar_sq = sig_sq + radius * radius;
    let r_tilde = radius + sig_sq.sqrt();
    let c_lambda = 2.0 * benchmark.s.abs() + 4.0 * cm_sup * horizon / rho;
    let h_q = rc * c_lambda * horizon;
    let rt2 = rc * rc * horizon * horizon;
    let c_tilde = 4.0 * c_lambda * c_lambda * rt2;
    let c_bar = 2.0 * rt2 * (c_tilde + rt2 * c_lambda * c_lambda);
    let kappa = |phi: f64| {
        let g = 4.0 * phi / rho * r_tilde;
        let b = rho * c_bar.sqrt() * g;
        let c = 2.0 * phi * r_tilde * (h_q + 4.0 * c_bar.sqrt() * phi / rho * r_tilde * r_tilde);
        b + 2.0 * c
    };
    let excess = |phi: f64| 16.0 * horizon * horizon * kappa(phi).powi(2) - 1.0;
    let mut hi = 1.0;
    while excess(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NonConvergence("kappa threshold not bracketed".into()));
        }
    }
    let phi_2 = bisect_monotone(excess, 0.0, hi, 1e-15 * hi)?;
    let phi_1 = eta * radius / (16.0 * horizon * h_q0 * r_bar_sq);
    let phi_0 = eta / (8.0 * horizon / c_min * r_bar_sq);
    Ok(PhiThresholds { eta, phi_0, phi_1, phi_2, h_q0, r_bar_sq, r_tilde, c_lambda, h_q, c_bar })
}

/// `(8/η) φ h_Q⁰ R̄²` with `R̄² = ∫σ̄² + R²`.
pub fn mu_hat_bound(t: &PhiThresholds, phi: f64) -> f64 {
    8.0 / t.eta * phi * t.h_q0 * t.r_bar_sq
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiForward {
    pub forward: f64,
    /// Root at `φ = 0`.
    pub forward_benchmark: f64,
    pub quantity: f64,
    pub expected_q_hat_t: f64,
    /// Empirical Lipschitz constant of `𝔰 ↦ Q̂*(T)`.
    pub lipschitz: f64,
}

/// Inputs for the `φ > 0` forward price.
#[derive(Debug, Clone)]
pub struct PhiMarket<'a> {
    pub cost: &'a CostPath,
    pub m: f64,
    pub rho: f64,
    pub demand: DemandCurve,
    pub expected_terminal: f64,
    pub sigma_bar: &'a [f64],
    pub phi: f64,
    pub grid: &'a TimeGrid,
    pub max_iter: usize,
    pub tol: f64,
}

impl PhiMarket<'_> {
    fn terminal(&self, s: f64) -> Result<(f64, f64)> {
        let b = solve_paths(self.cost, self.m, self.rho, s, self.grid)?;
        let (st, rep) = run_picard(&b, self.sigma_bar, self.phi, self.max_iter, self.tol)?;
        if !rep.converged {
            return Err(Error::NonConvergence(format!(
                "perturbation iteration did not converge in {} steps",
                rep.iterations
            )));
        }
        let n = self.grid.n_steps;
        Ok((b.inventory[n], st.hat_q[n]))
    }

    /// `Φ(F) = (F − E[𝔊])/ρ + Q̄(T) − 𝔡(F) + Q̂*(T)` with `Q̄`, `Q̂*` evaluated at `𝔰 = 𝔡(F)`.
    pub fn phi_map(&self, forward: f64) -> Result<f64> {
        let d = demand_at(&self.demand, forward);
        let (qb, qh) = self.terminal(d)?;
        Ok((forward - self.expected_terminal) / self.rho + qb - d + qh)
    }

    pub fn solve(&self) -> Result<PhiForward> {
        let base = |f: f64| -> Result<f64> {
            let d = demand_at(&self.demand, f);
            let b = solve_paths(self.cost, self.m, self.rho, d, self.grid)?;
            Ok((f - self.expected_terminal) / self.rho + b.inventory[self.grid.n_steps] - d)
        };
        let bracket = |g: &dyn Fn(f64) -> Result<f64>, centre: f64| -> Result<(f64, f64)> {
            let mut w = 1.0 + centre.abs();
            for _ in 0..200 {
                if g(centre - w)? < 0.0 && g(centre + w)? > 0.0 {
                    return Ok((centre - w, centre + w));
                }
                w *= 2.0;
            }
            Err(Error::NonConvergence("forward price not bracketed".into()))
        };
        let mut err: Option<Error> = None;
        let (a, b) = bracket(&base, self.expected_terminal)?;
        let f0 = bisect_monotone(
            |f| base(f).unwrap_or_else(|e| {
                err.get_or_insert(e);
                f64::NAN
            }),
            a,
            b,
            1e-13 * (1.0 + a.abs().max(b.abs())),
        )?;
        let phi_fn = |f: f64| self.phi_map(f);
        let (a, b) = bracket(&phi_fn, f0)?;
        let forward = bisect_monotone(
            |f| self.phi_map(f).unwrap_or_else(|e| {
                err.get_or_insert(e);
                f64::NAN
            }),
            a,
            b,
            1e-13 * (1.0 + a.abs().max(b.abs())),
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        let quantity = demand_at(&self.demand, forward);
        let (_, q1) = self.terminal(quantity)?;
        let (_, q2) = self.terminal(quantity + 1.0)?;
        Ok(PhiForward {
            forward,
            forward_benchmark: f0,
            quantity,
            expected_q_hat_t: q1,
            lipschitz: (q2 - q1).abs(),
        })
    }
}
