use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spotforward_core::cli_io::stats;
use spotforward_core::core_model::{CostPath, CostProcess, DemandCurve, TimeGrid};
use spotforward_core::deterministic_engine as det;
use spotforward_core::equilibrium_calibration as eq;
use spotforward_core::{jump_regime, picard_phi, Error};

fn to_py(e: Error) -> PyErr {
    if e.is_solver_failure() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn grid(horizon: f64, n_steps: usize) -> PyResult<TimeGrid> {
    TimeGrid::uniform(horizon, n_steps).map_err(to_py)
}

#[pyfunction]
fn p_closed(t: f64, c: f64, rho: f64, horizon: f64) -> PyResult<f64> {
    det::p_closed(t, c, rho, horizon).map_err(to_py)
}

#[pyfunction]
fn delta_closed(t: f64, c: f64, m: f64, rho: f64, horizon: f64) -> PyResult<f64> {
    det::delta_closed(t, c, m, rho, horizon).map_err(to_py)
}

#[pyfunction]
fn beta_closed(t: f64, c: f64, m: f64, rho: f64, horizon: f64) -> PyResult<f64> {
    det::beta_closed(t, c, m, rho, horizon).map_err(to_py)
}

/// Coefficient and equilibrium paths for a constant cost.
#[pyclass(name = "CoefficientPaths", frozen)]
struct PyPaths {
    #[pyo3(get)]
    t: Vec<f64>,
    #[pyo3(get)]
    p: Vec<f64>,
    #[pyo3(get)]
    lambda_: Vec<f64>,
    #[pyo3(get)]
    delta: Vec<f64>,
    #[pyo3(get)]
    h: Vec<f64>,
    #[pyo3(get)]
    inventory: Vec<f64>,
    #[pyo3(get)]
    mu: Vec<f64>,
    #[pyo3(get)]
    q: Vec<f64>,
    #[pyo3(get)]
    q_tilde: Vec<f64>,
}

#[pyfunction]
#[pyo3(signature = (c, m, rho, s, horizon, n_steps = 4096))]
fn solve_paths(c: f64, m: f64, rho: f64, s: f64, horizon: f64, n_steps: usize) -> PyResult<PyPaths> {
    let g = grid(horizon, n_steps)?;
    let p = det::solve_paths(&CostPath::Constant(c), m, rho, s, &g).map_err(to_py)?;
    Ok(PyPaths {
        t: g.knots.clone(),
        p: p.p,
        lambda_: p.lambda,
        delta: p.delta,
        h: p.h,
        inventory: p.inventory,
        mu: p.mu,
        q: p.q,
        q_tilde: p.q_tilde,
    })
}

#[pyclass(name = "JumpCoefficients", frozen)]
struct PyJump {
    inner: jump_regime::JumpCoefficients,
}

#[pymethods]
impl PyJump {
    #[getter]
    fn p_normal(&self) -> Vec<f64> {
        self.inner.p_normal.clone()
    }
    #[getter]
    fn p_stress(&self) -> Vec<f64> {
        self.inner.p_stress.clone()
    }
    #[getter]
    fn delta_normal(&self) -> Vec<f64> {
        self.inner.delta_normal.clone()
    }
    #[getter]
    fn delta_stress(&self) -> Vec<f64> {
        self.inner.delta_stress.clone()
    }
    fn expected_alpha(&self) -> f64 {
        self.inner.expected_alpha()
    }
    fn expected_beta(&self) -> f64 {
        jump_regime::expected_beta(&self.inner)
    }
    fn expected_beta_compensator(&self) -> f64 {
        self.inner.expected_beta_compensator()
    }
    /// `β(T)` given a stress at time `u`; `None` means no stress before `T`.
    #[pyo3(signature = (u = None))]
    fn conditional_beta(&self, u: Option<f64>) -> PyResult<f64> {
        let path = jump_regime::conditional_path(u, &self.inner).map_err(to_py)?;
        jump_regime::conditional_beta(&path, &self.inner).map_err(to_py)
    }
}

#[pyfunction]
#[pyo3(signature = (c_normal, c_stress, lam, m, rho, horizon, n_steps = 4096))]
fn solve_jump(c_normal: f64, c_stress: f64, lam: f64, m: f64, rho: f64, horizon: f64, n_steps: usize) -> PyResult<PyJump> {
    let g = grid(horizon, n_steps)?;
    let inner = jump_regime::solve_jump(c_normal, c_stress, lam, m, rho, &g).map_err(to_py)?;
    Ok(PyJump { inner })
}

#[pyclass(name = "VenueQuote", frozen)]
struct PyQuote {
    #[pyo3(get)]
    forward: f64,
    #[pyo3(get)]
    spot0: f64,
    #[pyo3(get)]
    premium: f64,
    #[pyo3(get)]
    p0: f64,
    #[pyo3(get)]
    delta0: f64,
    #[pyo3(get)]
    expected_beta_t: f64,
}

/// Venue quote for constant demand; pass `c_stress` and `lam` for a regime-switching cost.
#[pyfunction]
#[pyo3(signature = (c, m, rho, d_bar, horizon, expected_terminal = 0.0, c_stress = None, lam = None, n_steps = 4096))]
#[allow(clippy::too_many_arguments)]
fn venue_quote(
    c: f64,
    m: f64,
    rho: f64,
    d_bar: f64,
    horizon: f64,
    expected_terminal: f64,
    c_stress: Option<f64>,
    lam: Option<f64>,
    n_steps: usize,
) -> PyResult<PyQuote> {
    let cost = match (c_stress, lam) {
        (Some(cs), Some(l)) => CostProcess::RegimeSwitch { c_normal: c, c_stress: cs, lambda: l },
        (None, None) => CostProcess::Constant { c },
        _ => return Err(PyValueError::new_err("c_stress and lam must be given together")),
    };
    let params = spotforward_core::ModelParams::new(horizon, rho, 0.0, expected_terminal, DemandCurve::Constant { d_bar });
    let model = spotforward_core::validate(params, cost, spotforward_core::SupplySpec { m_rate: m, m0: 0.0 }).map_err(to_py)?;
    let q = eq::venue_quote(&model, d_bar, &grid(horizon, n_steps)?).map_err(to_py)?;
    Ok(PyQuote {
        forward: q.forward,
        spot0: q.spot0,
        premium: q.premium,
        p0: q.p0,
        delta0: q.delta0,
        expected_beta_t: q.expected_beta_t,
    })
}

#[pyclass(name = "CalibrationSetup", frozen)]
struct PySetup {
    inner: eq::CalibrationSetup,
}

#[pymethods]
impl PySetup {
    /// `d_bar = None` puts the deterministic pair on spot parity.
    #[new]
    #[pyo3(signature = (horizon, rho, m, c_onshore, c_normal, d_bar = None, expected_terminal = 0.0, n_steps = 1024))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        horizon: f64,
        rho: f64,
        m: f64,
        c_onshore: f64,
        c_normal: f64,
        d_bar: Option<f64>,
        expected_terminal: f64,
        n_steps: usize,
    ) -> PyResult<Self> {
        let mut inner = eq::CalibrationSetup {
            horizon_t: horizon,
            rho,
            m,
            c_y: c_onshore,
            c_normal,
            d_bar: 0.0,
            expected_terminal,
            n_steps,
        };
        inner.d_bar = match d_bar {
            Some(d) => d,
            None => eq::ParitySystem::parity_demand(&inner).map_err(to_py)?,
        };
        Ok(PySetup { inner })
    }

    #[getter]
    fn d_bar(&self) -> f64 {
        self.inner.d_bar
    }

    /// `(parity residual, forward wedge)` at `(lam, c_stress)`.
    fn evaluate(&self, lam: f64, c_stress: f64) -> PyResult<(f64, f64)> {
        eq::ParitySystem::new(self.inner)
            .and_then(|s| s.eval(lam, c_stress))
            .map_err(to_py)
    }

    /// Stress cost on the parity curve at intensity `lam`.
    fn stress_for_lambda(&self, lam: f64) -> PyResult<Option<f64>> {
        eq::ParitySystem::new(self.inner)
            .and_then(|s| s.stress_for_lambda(lam, &eq::CalibrationOptions::default()))
            .map_err(to_py)
    }
}

#[pyclass(name = "CalibrationResult", frozen)]
struct PyCalibration {
    #[pyo3(get)]
    target: f64,
    #[pyo3(get)]
    lambda_implied: f64,
    #[pyo3(get)]
    c_stress_implied: Option<f64>,
    #[pyo3(get)]
    parity_residual: f64,
    #[pyo3(get)]
    wedge_residual: f64,
    #[pyo3(get)]
    stress_probability: f64,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    multiple_roots: bool,
}

impl From<eq::CalibrationResult> for PyCalibration {
    fn from(r: eq::CalibrationResult) -> Self {
        PyCalibration {
            target: r.target,
            lambda_implied: r.lambda_implied,
            c_stress_implied: r.c_stress_implied,
            parity_residual: r.parity_residual,
            wedge_residual: r.wedge_residual,
            stress_probability: r.stress_probability,
            converged: r.converged,
            multiple_roots: r.multiple_roots,
        }
    }
}

#[pyfunction]
fn calibrate(target: f64, setup: &PySetup) -> PyResult<PyCalibration> {
    eq::calibrate(target, &setup.inner, &eq::CalibrationOptions::default())
        .map(PyCalibration::from)
        .map_err(to_py)
}

/// One entry per target; `None` where the target cannot be matched.
#[pyfunction]
fn sweep(targets: Vec<f64>, setup: &PySetup) -> PyResult<Vec<Option<PyCalibration>>> {
    let rows = eq::sweep(&targets, &setup.inner, &eq::CalibrationOptions::default()).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| r.result.map(PyCalibration::from)).collect())
}

#[pyclass(name = "ContractionReport", frozen)]
struct PyReport {
    #[pyo3(get)]
    eta: f64,
    #[pyo3(get)]
    iterate_norms: Vec<f64>,
    #[pyo3(get)]
    ratios: Vec<f64>,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    mu_hat: Vec<f64>,
    #[pyo3(get)]
    q_hat: Vec<f64>,
    #[pyo3(get)]
    s_hat: Vec<f64>,
}

/// Perturbation iteration around the constant-cost benchmark with constant `sigma_bar`.
#[pyfunction]
#[pyo3(signature = (c, m, rho, s, horizon, sigma_bar, phi, n_steps = 512, max_iter = 200, tol = 1e-12))]
#[allow(clippy::too_many_arguments)]
fn run_picard(
    c: f64,
    m: f64,
    rho: f64,
    s: f64,
    horizon: f64,
    sigma_bar: f64,
    phi: f64,
    n_steps: usize,
    max_iter: usize,
    tol: f64,
) -> PyResult<PyReport> {
    let g = grid(horizon, n_steps)?;
    let bench = det::solve_paths(&CostPath::Constant(c), m, rho, s, &g).map_err(to_py)?;
    let sig = vec![sigma_bar; g.len()];
    let (st, rep) = picard_phi::run_picard(&bench, &sig, phi, max_iter, tol).map_err(to_py)?;
    Ok(PyReport {
        eta: rep.eta,
        iterate_norms: rep.iterate_norms,
        ratios: rep.ratios,
        converged: rep.converged,
        mu_hat: st.hat_mu,
        q_hat: st.hat_q,
        s_hat: st.hat_s,
    })
}

/// `(12/tenor) ln(f_onshore/f_offshore)`.
#[pyfunction]
fn annualized_ratio(tenor_months: u32, f_onshore: f64, f_offshore: f64) -> PyResult<f64> {
    let row = stats::QuoteRow {
        date: Default::default(),
        tenor_months,
        forward_onshore: f_onshore,
        forward_offshore: f_offshore,
        spot_onshore: 1.0,
        spot_offshore: 1.0,
    };
    stats::annualized_ratio(&row).map_err(to_py)
}

#[pymodule]
fn spotforward(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(p_closed, m)?)?;
    m.add_function(wrap_pyfunction!(delta_closed, m)?)?;
    m.add_function(wrap_pyfunction!(beta_closed, m)?)?;
    m.add_function(wrap_pyfunction!(solve_paths, m)?)?;
    m.add_function(wrap_pyfunction!(solve_jump, m)?)?;
    m.add_function(wrap_pyfunction!(venue_quote, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_picard, m)?)?;
    m.add_function(wrap_pyfunction!(annualized_ratio, m)?)?;
    m.add_class::<PyPaths>()?;
    m.add_class::<PyJump>()?;
    m.add_class::<PyQuote>()?;
    m.add_class::<PySetup>()?;
    m.add_class::<PyCalibration>()?;
    m.add_class::<PyReport>()?;
    Ok(())
}
