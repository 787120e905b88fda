//! Venue prices, market clearing, spot parity between an onshore venue with
//! constant cost and an offshore venue with a stress jump, and the inverse
//! map from a forward wedge to the implied stress `(λ, c̄)`.
//!
//! For constant demand `𝔡̄` a venue quotes
//!
//! ```text
//! F    = E[𝔊] + ρ [e^T P(0) 𝔡̄ − E[β(T)]]
//! S(0) = F − ρ P(0) 𝔡̄ − δ(0)
//! ```
//!
//! For the jump venue `P(0)`, `δ(0)` are the normal-state values and
//! `ρ E[β(T)] = e^T (m ∫_0^T e^{−s} E[c(s)] ds − δ̲(0))`.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::core_model::{demand_at, CostProcess, DemandCurve, Model, ModelParams, SupplySpec, TimeGrid};
use crate::deterministic_engine::{beta_closed, delta_closed, p_closed};
use crate::error::{Error, Result};
use crate::jump_regime::solve_jump;
use crate::numerics::{bisect, brent};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VenueQuote {
    pub forward: f64,
    pub spot0: f64,
    pub premium: f64,
    pub p0: f64,
    pub delta0: f64,
    pub expected_beta_t: f64,
    /// Forward quantity the quote was computed for.
    pub quantity: f64,
}

/// `(P(0), δ(0), E[β(T)])` for a venue.
#[derive(Debug, Clone, Copy, PartialEq)]
struct VenueCoefficients {
    p0: f64,
    delta0: f64,
    expected_beta: f64,
}

fn venue_coefficients(cost: &CostProcess, m: f64, rho: f64, horizon: f64, grid: &TimeGrid) -> Result<VenueCoefficients> {
    match *cost {
        CostProcess::Constant { c } => Ok(VenueCoefficients {
            p0: p_closed(0.0, c, rho, horizon)?,
            delta0: delta_closed(0.0, c, m, rho, horizon)?,
            expected_beta: beta_closed(horizon, c, m, rho, horizon)?,
        }),
        CostProcess::RegimeSwitch { c_normal, c_stress, lambda } => {
            let j = solve_jump(c_normal, c_stress, lambda, m, rho, grid)?;
            Ok(VenueCoefficients {
                p0: j.p_normal[0],
                delta0: j.delta_normal[0],
                expected_beta: j.expected_beta_compensator(),
            })
        }
    }
}

fn quote_from(k: VenueCoefficients, rho: f64, horizon: f64, eg: f64, s: f64) -> VenueQuote {
    let forward = eg + rho * (horizon.exp() * k.p0 * s - k.expected_beta);
    let premium = rho * k.p0 * s + k.delta0;
    VenueQuote {
        forward,
        spot0: forward - premium,
        premium,
        p0: k.p0,
        delta0: k.delta0,
        expected_beta_t: k.expected_beta,
        quantity: s,
    }
}

fn check_grid(params: &ModelParams, grid: &TimeGrid) -> Result<()> {
    if (grid.horizon() - params.horizon_t).abs() > 1e-12 * params.horizon_t {
        return Err(Error::invalid("grid", "grid horizon differs from horizon_T"));
    }
    Ok(())
}

/// Forward and spot prices for a venue supplying `s` forwards.
pub fn venue_quote(model: &Model, s: f64, grid: &TimeGrid) -> Result<VenueQuote> {
    let p = &model.params;
    check_grid(p, grid)?;
    let k = venue_coefficients(&model.cost, model.supply.m_rate, p.rho, p.horizon_t, grid)?;
    Ok(quote_from(k, p.rho, p.horizon_t, p.expected_terminal, s))
}

/// Dealer supply `𝔰(F) = e^{−T} E[β(T)]/P(0) + e^{−T}(F − E[𝔊])/(ρ P(0))`.
pub fn supply_curve(model: &Model, forward: f64, grid: &TimeGrid) -> Result<f64> {
    let p = &model.params;
    check_grid(p, grid)?;
    let k = venue_coefficients(&model.cost, model.supply.m_rate, p.rho, p.horizon_t, grid)?;
    Ok(supply_from(k, p, forward))
}

fn supply_from(k: VenueCoefficients, p: &ModelParams, forward: f64) -> f64 {
    let e = (-p.horizon_t).exp();
    e * k.expected_beta / k.p0 + e * (forward - p.expected_terminal) / (p.rho * k.p0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketClearing {
    pub forward: f64,
    pub quantity: f64,
    /// Root of the monotone excess supply found by bisection.
    pub forward_bisection: f64,
}

/// Forward price and quantity with `𝔡(F) = 𝔰(F)`.
pub fn clear_market(model: &Model, grid: &TimeGrid) -> Result<MarketClearing> {
    let p = &model.params;
    check_grid(p, grid)?;
    let k = venue_coefficients(&model.cost, model.supply.m_rate, p.rho, p.horizon_t, grid)?;
    let e = (-p.horizon_t).exp();
    let a = e * k.expected_beta / k.p0;
    let b = e / (p.rho * k.p0);
    let (forward, quantity) = match p.demand {
        DemandCurve::Constant { d_bar } => {
            let q = quote_from(k, p.rho, p.horizon_t, p.expected_terminal, d_bar);
            (q.forward, d_bar)
        }
        DemandCurve::Affine { d0, k: slope } => {
            if (slope + b).abs() < f64::EPSILON * b {
                return Err(Error::Domain("demand and supply slopes coincide".into()));
            }
            let x = (d0 - slope * p.expected_terminal - a) / (slope + b);
            let f = p.expected_terminal + x;
            (f, demand_at(&p.demand, f))
        }
    };
    let forward_bisection = match p.demand {
        DemandCurve::Constant { .. } => forward,
        DemandCurve::Affine { .. } => {
            let excess = |f: f64| supply_from(k, p, f) - demand_at(&p.demand, f);
            let mut width = 1.0 + forward.abs();
            let mut tries = 0;
            while excess(forward - width) > 0.0 || excess(forward + width) < 0.0 {
                width *= 2.0;
                tries += 1;
                if tries > 200 {
                    return Err(Error::NonConvergence("could not bracket the clearing price".into()));
                }
            }
            bisect(excess, forward - width, forward + width, 1e-14 * (1.0 + forward.abs()), 400)?
        }
    };
    debug!("clear_market: closed {forward}, bisection {forward_bisection}");
    Ok(MarketClearing { forward, quantity, forward_bisection })
}

/// Bisection on a monotone function, exposed for price determination.
pub fn bisect_monotone<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    bisect(f, lo, hi, tol, 400)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    /// `Sʸ(0) − Sᴴ(0)` from the venue quotes.
    pub residual: f64,
    /// Same quantity from `(e^T−1)ρΔP(0)𝔡̄ − ρΔE[β(T)] − Δδ(0)`.
    pub residual_closed: f64,
    /// `Fʸ − Fᴴ`.
    pub wedge: f64,
    /// `ρΔP(0)𝔡̄ + Δδ(0)`, equal to the wedge when parity holds.
    pub wedge_closed: f64,
    pub onshore: VenueQuote,
    pub offshore: VenueQuote,
}

fn check_pair(params: &ModelParams, cost_y: &CostProcess, cost_h: &CostProcess) -> Result<()> {
    if !matches!(cost_y, CostProcess::Constant { .. }) {
        return Err(Error::invalid("onshore", "onshore cost must be constant"));
    }
    if !matches!(cost_h, CostProcess::RegimeSwitch { .. }) {
        return Err(Error::invalid("offshore", "offshore cost must be regime-switching"));
    }
    if !(params.rho > 0.0 && params.horizon_t > 0.0) {
        return Err(Error::invalid("params", "rho and horizon must be positive"));
    }
    Ok(())
}

/// Spot parity residual and forward wedge between the two venues.
pub fn parity_report(
    params: &ModelParams,
    cost_y: &CostProcess,
    cost_h: &CostProcess,
    supply: &SupplySpec,
    d_bar: f64,
    grid: &TimeGrid,
) -> Result<ParityReport> {
    check_pair(params, cost_y, cost_h)?;
    check_grid(params, grid)?;
    let (rho, horizon, m) = (params.rho, params.horizon_t, supply.m_rate);
    let ky = venue_coefficients(cost_y, m, rho, horizon, grid)?;
    let kh = venue_coefficients(cost_h, m, rho, horizon, grid)?;
    let y = quote_from(ky, rho, horizon, params.expected_terminal, d_bar);
    let h = quote_from(kh, rho, horizon, params.expected_terminal, d_bar);
    let (dp, db, dd) = (ky.p0 - kh.p0, ky.expected_beta - kh.expected_beta, ky.delta0 - kh.delta0);
    Ok(ParityReport {
        residual: y.spot0 - h.spot0,
        residual_closed: horizon.exp_m1() * rho * dp * d_bar - rho * db - dd,
        wedge: y.forward - h.forward,
        wedge_closed: rho * dp * d_bar + dd,
        onshore: y,
        offshore: h,
    })
}

/// `Sʸ(0) − Sᴴ(0)`.
pub fn parity_residual(
    params: &ModelParams,
    cost_y: &CostProcess,
    cost_h: &CostProcess,
    supply: &SupplySpec,
    d_bar: f64,
    grid: &TimeGrid,
) -> Result<f64> {
    Ok(parity_report(params, cost_y, cost_h, supply, d_bar, grid)?.residual)
}

/// `Fʸ − Fᴴ`.
pub fn forward_wedge(
    params: &ModelParams,
    cost_y: &CostProcess,
    cost_h: &CostProcess,
    supply: &SupplySpec,
    d_bar: f64,
    grid: &TimeGrid,
) -> Result<f64> {
    Ok(parity_report(params, cost_y, cost_h, supply, d_bar, grid)?.wedge)
}

/// Parameters held fixed by the calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSetup {
    pub horizon_t: f64,
    pub rho: f64,
    pub m: f64,
    pub c_y: f64,
    pub c_normal: f64,
    pub d_bar: f64,
    pub expected_terminal: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Residual tolerance in price units.
    pub tol: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Upper end of the stress-cost bracket as a multiple of `cʸ`.
    pub c_ratio_max: f64,
    pub lambda_scan: usize,
    pub c_scan: usize,
    pub max_newton: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            tol: 1e-9,
            lambda_min: 1e-6,
            lambda_max: 50.0,
            c_ratio_max: 100.0,
            lambda_scan: 64,
            c_scan: 64,
            max_newton: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub target: f64,
    pub lambda_implied: f64,
    /// `None` at `λ = 0`, where the stress cost does not enter prices.
    pub c_stress_implied: Option<f64>,
    pub parity_residual: f64,
    pub wedge_residual: f64,
    pub stress_probability: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Several parity-consistent pairs match the target; the smallest `λ` is reported.
    pub multiple_roots: bool,
}

pub const IRRELEVANT_AT_ZERO: &str = "irrelevant at lambda=0";

/// Onshore quote plus a solver for the offshore venue on a fixed grid.
#[derive(Debug, Clone)]
pub struct ParitySystem {
    pub setup: CalibrationSetup,
    pub grid: TimeGrid,
    onshore: VenueQuote,
    /// Residual at `λ = 0` (independent of `c̄`).
    r0: f64,
    w0: f64,
}

impl ParitySystem {
    pub fn new(setup: CalibrationSetup) -> Result<Self> {
        validate_setup(&setup)?;
        let grid = TimeGrid::uniform(setup.horizon_t, setup.n_steps)?;
        let ky = venue_coefficients(&CostProcess::Constant { c: setup.c_y }, setup.m, setup.rho, setup.horizon_t, &grid)?;
        let onshore = quote_from(ky, setup.rho, setup.horizon_t, setup.expected_terminal, setup.d_bar);
        let mut sys = ParitySystem { setup, grid, onshore, r0: 0.0, w0: 0.0 };
        let (r0, w0) = sys.eval(0.0, setup.c_y)?;
        sys.r0 = r0;
        sys.w0 = w0;
        Ok(sys)
    }

    /// Demand level that puts the deterministic pair (`λ = 0`) on spot parity.
    pub fn parity_demand(setup: &CalibrationSetup) -> Result<f64> {
        if setup.c_y == setup.c_normal {
            return Err(Error::invalid("offshore.c_normal", "parity demand is undefined when c_normal equals the onshore cost"));
        }
        let mut s = *setup;
        s.d_bar = 0.0;
        let r_at_0 = ParitySystem::new(s)?.r0;
        s.d_bar = 1.0;
        let r_at_1 = ParitySystem::new(s)?.r0;
        Ok(-r_at_0 / (r_at_1 - r_at_0))
    }

    pub fn onshore(&self) -> VenueQuote {
        self.onshore
    }

    pub fn offshore(&self, lambda: f64, c_stress: f64) -> Result<VenueQuote> {
        let s = &self.setup;
        let cost = CostProcess::RegimeSwitch { c_normal: s.c_normal, c_stress, lambda };
        let k = venue_coefficients(&cost, s.m, s.rho, s.horizon_t, &self.grid)?;
        Ok(quote_from(k, s.rho, s.horizon_t, s.expected_terminal, s.d_bar))
    }

    /// `(Sʸ − Sᴴ, Fʸ − Fᴴ)` at `(λ, c̄)`.
    pub fn eval(&self, lambda: f64, c_stress: f64) -> Result<(f64, f64)> {
        let h = self.offshore(lambda, c_stress)?;
        Ok((self.onshore.spot0 - h.spot0, self.onshore.forward - h.forward))
    }

    /// Wedge of the deterministic pair.
    pub fn benchmark_wedge(&self) -> f64 {
        self.w0
    }

    pub fn benchmark_residual(&self) -> f64 {
        self.r0
    }

    fn degenerate(&self, tol: f64) -> bool {
        self.r0.abs() <= tol
    }

    fn lambda_grid(&self, opts: &CalibrationOptions) -> Vec<f64> {
        let n = opts.lambda_scan.max(2);
        let (a, b) = (opts.lambda_min.ln(), opts.lambda_max.ln());
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    fn stress_grid(&self, opts: &CalibrationOptions) -> Vec<f64> {
        let n = opts.c_scan.max(2);
        let (a, b) = (1e-6_f64.ln(), (opts.c_ratio_max - 1.0).ln());
        (0..n)
            .map(|i| self.setup.c_y * (1.0 + (a + (b - a) * i as f64 / (n - 1) as f64).exp()))
            .collect()
    }

    /// Smallest `λ ∈ [λ_min, λ_max]` restoring parity at stress cost `c̄`.
    pub fn lambda_for_stress(&self, c_stress: f64, opts: &CalibrationOptions) -> Result<Option<f64>> {
        let deg = self.degenerate(opts.tol);
        let g = |lam: f64| -> Result<f64> {
            let r = self.eval(lam, c_stress)?.0;
            Ok(if deg { r / lam } else { r })
        };
        let grid = self.lambda_grid(opts);
        let mut prev = (grid[0], g(grid[0])?);
        for &lam in &grid[1..] {
            let cur = (lam, g(lam)?);
            if prev.1 == 0.0 {
                return Ok(Some(prev.0));
            }
            if prev.1.signum() != cur.1.signum() {
                let mut failed = None;
                let (root, _) = brent(
                    |x| match g(x) {
                        Ok(v) => v,
                        Err(e) => {
                            failed = Some(e);
                            f64::NAN
                        }
                    },
                    prev.0,
                    cur.0,
                    1e-15 * cur.0,
                    200,
                )?;
                if let Some(e) = failed {
                    return Err(e);
                }
                return Ok(Some(root));
            }
            prev = cur;
        }
        Ok(None)
    }

    /// Stress cost `c̄ ∈ (cʸ, c_max]` restoring parity at intensity `λ`.
    pub fn stress_for_lambda(&self, lambda: f64, opts: &CalibrationOptions) -> Result<Option<f64>> {
        let g = |c: f64| self.eval(lambda, c).map(|v| v.0);
        let grid = self.stress_grid(opts);
        let mut prev = (grid[0], g(grid[0])?);
        for &c in &grid[1..] {
            let cur = (c, g(c)?);
            if prev.1.signum() != cur.1.signum() {
                let (root, _) = brent(|x| g(x).unwrap_or(f64::NAN), prev.0, cur.0, 1e-15 * cur.0, 200)?;
                return Ok(Some(root));
            }
            prev = cur;
        }
        Ok(None)
    }

    fn finish(&self, target: f64, lambda: f64, c_stress: f64, iterations: usize, multiple: bool, opts: &CalibrationOptions) -> Result<CalibrationResult> {
        let (r, w) = self.eval(lambda, c_stress)?;
        let wedge_residual = w - target;
        let converged = r.abs() <= opts.tol
            && wedge_residual.abs() <= opts.tol
            && lambda > 0.0
            && lambda <= opts.lambda_max
            && c_stress > self.setup.c_y;
        Ok(CalibrationResult {
            target,
            lambda_implied: lambda,
            c_stress_implied: Some(c_stress),
            parity_residual: r,
            wedge_residual,
            stress_probability: -(-lambda * self.setup.horizon_t).exp_m1(),
            iterations,
            converged,
            multiple_roots: multiple,
        })
    }

    /// Damped Newton on `(S-residual, wedge − target)` with a finite-difference
    /// Jacobian. Returns the refined point and iteration count.
    pub fn newton(&self, target: f64, start: (f64, f64), opts: &CalibrationOptions) -> Result<((f64, f64), usize, bool)> {
        let (mut lam, mut cs) = start;
        let resid = |l: f64, c: f64| -> Result<[f64; 2]> {
            let (r, w) = self.eval(l, c)?;
            Ok([r, w - target])
        };
        let norm = |f: &[f64; 2]| f[0].abs().max(f[1].abs());
        let mut f = resid(lam, cs)?;
        let mut it = 0;
        while it < opts.max_newton {
            it += 1;
            let dl = 1e-7 * lam.max(1e-3);
            let dc = 1e-7 * cs;
            let fl = resid(lam + dl, cs)?;
            let fc = resid(lam, cs + dc)?;
            let j = [
                [(fl[0] - f[0]) / dl, (fc[0] - f[0]) / dc],
                [(fl[1] - f[1]) / dl, (fc[1] - f[1]) / dc],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let step_l = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
            let step_c = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let (nl, nc) = (lam - t * step_l, cs - t * step_c);
                if nl > 0.0 && nc > 0.0 {
                    let nf = resid(nl, nc)?;
                    if norm(&nf) <= norm(&f) {
                        lam = nl;
                        cs = nc;
                        f = nf;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            let rel = (t * step_l / lam).abs().max((t * step_c / cs).abs());
            if rel < 1e-12 || norm(&f) < 1e-16 {
                break;
            }
        }
        let ok = norm(&f) <= opts.tol && lam > 0.0 && cs > self.setup.c_y;
        Ok(((lam, cs), it, ok))
    }

    /// Implied `(λ, c̄)` for a target wedge.
    pub fn calibrate(&self, target: f64, opts: &CalibrationOptions) -> Result<CalibrationResult> {
        if !target.is_finite() {
            return Err(Error::invalid("target", "target must be finite"));
        }
        if self.degenerate(opts.tol) && (self.w0 - target).abs() <= opts.tol {
            return Ok(CalibrationResult {
                target,
                lambda_implied: 0.0,
                c_stress_implied: None,
                parity_residual: self.r0,
                wedge_residual: self.w0 - target,
                stress_probability: 0.0,
                iterations: 0,
                converged: true,
                multiple_roots: false,
            });
        }
        // trace the parity curve on the lambda grid
        let lam_grid = self.lambda_grid(opts);
        let mut pts: Vec<(f64, Option<(f64, f64)>)> = Vec::with_capacity(lam_grid.len());
        for &lam in &lam_grid {
            let p = match self.stress_for_lambda(lam, opts)? {
                Some(c) => Some((c, self.eval(lam, c)?.1 - target)),
                None => None,
            };
            pts.push((lam, p));
        }
        if pts.iter().all(|p| p.1.is_none()) {
            return Err(Error::NoParitySolution(format!(
                "no stress cost in ({}, {}] restores parity for any lambda in [{}, {}]",
                self.setup.c_y,
                opts.c_ratio_max * self.setup.c_y,
                opts.lambda_min,
                opts.lambda_max
            )));
        }
        let mut brackets = Vec::new();
        for w in pts.windows(2) {
            if let (Some(a), Some(b)) = (w[0].1, w[1].1) {
                if a.1 == 0.0 || a.1.signum() != b.1.signum() {
                    brackets.push((w[0].0, w[1].0));
                }
            }
        }
        if brackets.is_empty() {
            let (lo, hi) = pts
                .iter()
                .filter_map(|p| p.1.map(|v| v.1 + target))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w), hi.max(w)));
            return Err(Error::TargetOutOfRange(format!(
                "target {target} outside the attainable wedge range [{lo}, {hi}] along the parity curve"
            )));
        }
        let multiple = brackets.len() > 1;
        let (la, lb) = brackets[0];
        let mut failure: Option<Error> = None;
        let mut outer = |lam: f64| -> f64 {
            let res = self
                .stress_for_lambda(lam, opts)
                .and_then(|c| c.ok_or_else(|| Error::NoParitySolution(format!("parity lost at lambda = {lam}"))))
                .and_then(|c| self.eval(lam, c).map(|v| v.1 - target));
            match res {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let (lam, evals) = brent(&mut outer, la, lb, 1e-15 * lb, 200)?;
        if let Some(e) = failure {
            return Err(e);
        }
        let c_star = self
            .stress_for_lambda(lam, opts)?
            .ok_or_else(|| Error::NoParitySolution(format!("parity lost at lambda = {lam}")))?;
        let ((lam, c_star), it, _) = self.newton(target, (lam, c_star), opts)?;
        self.finish(target, lam, c_star, evals + it, multiple, opts)
    }

    /// Calibration warm-started from a previous solution; falls back to the
    /// bracketing search when Newton does not converge.
    pub fn calibrate_from(&self, target: f64, warm: Option<(f64, f64)>, opts: &CalibrationOptions) -> Result<CalibrationResult> {
        if let Some((l, c)) = warm {
            if l > 0.0 && c > self.setup.c_y && !(self.degenerate(opts.tol) && (self.w0 - target).abs() <= opts.tol) {
                let ((nl, nc), it, ok) = self.newton(target, (l, c), opts)?;
                if ok && nl <= opts.lambda_max && nc <= opts.c_ratio_max * self.setup.c_y {
                    return self.finish(target, nl, nc, it, false, opts);
                }
            }
        }
        self.calibrate(target, opts)
    }
}

fn validate_setup(s: &CalibrationSetup) -> Result<()> {
    let pos = [
        ("horizon_T", s.horizon_t),
        ("rho", s.rho),
        ("onshore.c", s.c_y),
        ("offshore.c_normal", s.c_normal),
    ];
    for (f, v) in pos {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(f, "must be strictly positive"));
        }
    }
    if !s.m.is_finite() || !s.d_bar.is_finite() || !s.expected_terminal.is_finite() {
        return Err(Error::invalid("setup", "parameters must be finite"));
    }
    if s.n_steps == 0 {
        return Err(Error::invalid("grid.n_steps", "n_steps must be positive"));
    }
    Ok(())
}

/// Implied stress parameters for one target.
pub fn calibrate(target: f64, setup: &CalibrationSetup, opts: &CalibrationOptions) -> Result<CalibrationResult> {
    if !(setup.c_normal < setup.c_y) {
        return Err(Error::invalid("offshore.c_normal", "calibration requires c_normal < onshore cost"));
    }
    ParitySystem::new(*setup)?.calibrate(target, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub target: f64,
    pub result: Option<CalibrationResult>,
    pub error: Option<String>,
}

/// One calibration per target. Each row is solved from scratch so that the
/// smallest-`λ` branch and the multiplicity flag do not depend on row order.
pub fn sweep(targets: &[f64], setup: &CalibrationSetup, opts: &CalibrationOptions) -> Result<Vec<SweepRow>> {
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    if !(setup.c_normal < setup.c_y) {
        return Err(Error::invalid("offshore.c_normal", "calibration requires c_normal < onshore cost"));
    }
    let sys = ParitySystem::new(*setup)?;
    let mut rows = Vec::with_capacity(targets.len());
    for &x in targets {
        match sys.calibrate(x, opts) {
            Ok(r) => rows.push(SweepRow { target: x, result: Some(r), error: None }),
            Err(e) => {
                log::warn!("sweep: target {x}: {e}");
                rows.push(SweepRow { target: x, result: None, error: Some(e.to_string()) });
            }
        }
    }
    Ok(rows)
}
