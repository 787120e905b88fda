//! Model parameters, cost and demand specifications, time grids.
//!
//! Units: time in years, prices in the unit of the expected terminal value,
//! costs in price units per squared trading rate.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandCurve {
    /// Perfectly inelastic demand.
    Constant { d_bar: f64 },
    /// `d(F) = d0 - k F`.
    Affine { d0: f64, k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub horizon_t: f64,
    /// Terminal mismatch penalty.
    pub rho: f64,
    /// Risk aversion.
    pub phi: f64,
    pub expected_terminal: f64,
    pub demand: DemandCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostProcess {
    Constant { c: f64 },
    /// Cost `c_normal` until the first arrival of a Poisson clock with
    /// intensity `lambda`, `c_stress` afterwards.
    RegimeSwitch { c_normal: f64, c_stress: f64, lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupplySpec {
    pub m_rate: f64,
    pub m0: f64,
}

/// A validated model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: ModelParams,
    pub cost: CostProcess,
    pub supply: SupplySpec,
}

impl ModelParams {
    pub fn new(horizon_t: f64, rho: f64, phi: f64, expected_terminal: f64, demand: DemandCurve) -> Self {
        ModelParams { horizon_t, rho, phi, expected_terminal, demand }
    }
}

impl CostProcess {
    /// Cost in force at time 0.
    pub fn initial(&self) -> f64 {
        match *self {
            CostProcess::Constant { c } => c,
            CostProcess::RegimeSwitch { c_normal, .. } => c_normal,
        }
    }
}

fn check_finite(field: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be finite"))
    }
}

fn check_cost(field: &str, c: f64) -> Result<()> {
    check_finite(field, c)?;
    if c <= 0.0 {
        return Err(Error::invalid(field, "cost must be strictly positive"));
    }
    Ok(())
}

/// Checks every type invariant and returns the model unchanged.
pub fn validate(params: ModelParams, cost: CostProcess, supply: SupplySpec) -> Result<Model> {
    check_finite("horizon_T", params.horizon_t)?;
    if params.horizon_t <= 0.0 {
        return Err(Error::invalid("horizon_T", "horizon must be strictly positive"));
    }
    check_finite("rho", params.rho)?;
    if params.rho <= 0.0 {
        return Err(Error::invalid("rho", "rho must be strictly positive"));
    }
    check_finite("phi", params.phi)?;
    if params.phi < 0.0 {
        return Err(Error::invalid("phi", "phi must be nonnegative"));
    }
    check_finite("expected_terminal", params.expected_terminal)?;
    match params.demand {
        DemandCurve::Constant { d_bar } => check_finite("demand.d_bar", d_bar)?,
        DemandCurve::Affine { d0, k } => {
            check_finite("demand.d0", d0)?;
            check_finite("demand.k", k)?;
            if k <= 0.0 {
                return Err(Error::invalid("demand.k", "affine demand slope must be strictly positive"));
            }
        }
    }
    match cost {
        CostProcess::Constant { c } => check_cost("cost.c", c)?,
        CostProcess::RegimeSwitch { c_normal, c_stress, lambda } => {
            check_cost("cost.c_normal", c_normal)?;
            check_cost("cost.c_stress", c_stress)?;
            check_finite("cost.lambda", lambda)?;
            if lambda < 0.0 {
                return Err(Error::invalid("cost.lambda", "lambda must be nonnegative"));
            }
        }
    }
    check_finite("supply.m", supply.m_rate)?;
    check_finite("supply.M0", supply.m0)?;
    Ok(Model { params, cost, supply })
}

impl Model {
    pub fn revalidate(&self) -> Result<Model> {
        validate(self.params, self.cost, self.supply)
    }
}

pub fn demand_at(d: &DemandCurve, f: f64) -> f64 {
    match *d {
        DemandCurve::Constant { d_bar } => d_bar,
        DemandCurve::Affine { d0, k } => d0 - k * f,
    }
}

/// Uniform knots `0 = t_0 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub n_steps: usize,
    pub knots: Vec<f64>,
}

pub const DEFAULT_STEPS: usize = 4096;

impl TimeGrid {
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::invalid("grid.n_steps", "n_steps must be positive"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon_T", "horizon must be strictly positive"));
        }
        let h = horizon / n_steps as f64;
        let mut knots: Vec<f64> = (0..=n_steps).map(|i| i as f64 * h).collect();
        knots[n_steps] = horizon;
        Ok(TimeGrid { n_steps, knots })
    }

    pub fn horizon(&self) -> f64 {
        self.knots[self.n_steps]
    }

    pub fn step(&self) -> f64 {
        self.horizon() / self.n_steps as f64
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Index of the knot equal to `t` (within rounding), if any.
    pub fn knot_index(&self, t: f64) -> Option<usize> {
        let x = t / self.step();
        let i = x.round();
        if (x - i).abs() <= 1e-9 && i >= 0.0 && (i as usize) <= self.n_steps {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Smallest knot index with `knots[i] >= t`.
    pub fn ceil_index(&self, t: f64) -> usize {
        if let Some(i) = self.knot_index(t) {
            return i;
        }
        ((t / self.step()).ceil().max(0.0) as usize).min(self.n_steps)
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::GridMismatch { expected: self.len(), got });
        }
        Ok(())
    }
}

/// Deterministic cost as a function of time.
#[derive(Clone)]
pub enum CostPath {
    Constant(f64),
    /// `levels[j]` holds on `[breaks[j-1], breaks[j])`; `levels.len() == breaks.len() + 1`.
    /// Breaks must sit on grid knots.
    Piecewise { breaks: Vec<f64>, levels: Vec<f64> },
    /// Per-knot values, linear in between.
    Knots(Vec<f64>),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CostPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostPath::Constant(c) => write!(f, "Constant({c})"),
            CostPath::Piecewise { breaks, levels } => {
                write!(f, "Piecewise {{ breaks: {breaks:?}, levels: {levels:?} }}")
            }
            CostPath::Knots(v) => write!(f, "Knots(len={})", v.len()),
            CostPath::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl CostPath {
    pub fn function<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        CostPath::Function(Arc::new(f))
    }

    /// Checks positivity and break placement against `grid`.
    pub fn check(&self, grid: &TimeGrid) -> Result<()> {
        match self {
            CostPath::Constant(c) => check_cost("cost_path", *c),
            CostPath::Piecewise { breaks, levels } => {
                if levels.len() != breaks.len() + 1 {
                    return Err(Error::invalid("cost_path", "need one more level than breaks"));
                }
                for &l in levels {
                    check_cost("cost_path", l)?;
                }
                let mut prev = 0.0;
                for &b in breaks {
                    if !(b > prev && b < grid.horizon()) {
                        return Err(Error::invalid("cost_path", "breaks must be increasing inside (0, T)"));
                    }
                    if grid.knot_index(b).is_none() {
                        return Err(Error::invalid("cost_path", "break must coincide with a grid knot"));
                    }
                    prev = b;
                }
                Ok(())
            }
            CostPath::Knots(v) => {
                grid.check_len(v.len())?;
                for &c in v {
                    check_cost("cost_path", c)?;
                }
                Ok(())
            }
            CostPath::Function(f) => {
                let h = grid.step();
                for (i, &t) in grid.knots.iter().enumerate() {
                    check_cost("cost_path", f(t))?;
                    if i + 1 < grid.len() {
                        check_cost("cost_path", f(t + 0.5 * h))?;
                    }
                }
                Ok(())
            }
        }
    }

    /// Cost at time `t` inside grid interval `k` (`[t_k, t_{k+1}]`).
    pub fn on_interval(&self, grid: &TimeGrid, k: usize, t: f64) -> f64 {
        match self {
            CostPath::Constant(c) => *c,
            CostPath::Piecewise { .. } => {
                let mid = 0.5 * (grid.knots[k] + grid.knots[k + 1]);
                self.level_at(mid)
            }
            CostPath::Knots(v) => {
                let (a, b) = (grid.knots[k], grid.knots[k + 1]);
                let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
                v[k] * (1.0 - w) + v[k + 1] * w
            }
            CostPath::Function(f) => f(t),
        }
    }

    fn level_at(&self, t: f64) -> f64 {
        match self {
            CostPath::Piecewise { breaks, levels } => {
                let j = breaks.iter().take_while(|&&b| t >= b).count();
                levels[j]
            }
            _ => unreachable!(),
        }
    }

    /// Right-continuous value at knot `i` (left limit at `T`).
    pub fn at_knot(&self, grid: &TimeGrid, i: usize) -> f64 {
        match self {
            CostPath::Constant(c) => *c,
            CostPath::Piecewise { .. } => {
                let k = i.min(grid.n_steps - 1);
                self.on_interval(grid, k, grid.knots[i])
            }
            CostPath::Knots(v) => v[i],
            CostPath::Function(f) => f(grid.knots[i]),
        }
    }

    pub fn knot_values(&self, grid: &TimeGrid) -> Vec<f64> {
        (0..grid.len()).map(|i| self.at_knot(grid, i)).collect()
    }

    /// Knot-index segments on which the path is continuous.
    pub fn segments(&self, grid: &TimeGrid) -> Vec<(usize, usize)> {
        match self {
            CostPath::Piecewise { breaks, .. } => {
                let mut out = Vec::with_capacity(breaks.len() + 1);
                let mut a = 0;
                for &b in breaks {
                    let i = grid.knot_index(b).unwrap_or_else(|| grid.ceil_index(b));
                    out.push((a, i));
                    a = i;
                }
                out.push((a, grid.n_steps));
                out
            }
            _ => vec![(0, grid.n_steps)],
        }
    }

    /// Value at knot `i` as seen from segment `(a, b)`.
    pub fn in_segment(&self, grid: &TimeGrid, seg: (usize, usize), i: usize) -> f64 {
        match self {
            CostPath::Piecewise { .. } => {
                let k = if i == seg.1 { i - 1 } else { i };
                self.on_interval(grid, k.max(seg.0), grid.knots[i])
            }
            _ => self.at_knot(grid, i),
        }
    }

    pub fn sup(&self, grid: &TimeGrid) -> f64 {
        self.knot_values(grid).into_iter().fold(0.0, f64::max)
    }

    pub fn inf(&self, grid: &TimeGrid) -> f64 {
        self.knot_values(grid).into_iter().fold(f64::INFINITY, f64::min)
    }
}
