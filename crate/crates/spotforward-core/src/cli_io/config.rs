//! `key = value` configuration files.
//!
//! Blank lines and anything after `#` are ignored. Keys are case-sensitive.

use std::collections::BTreeMap;
use std::path::Path;

use crate::core_model::{validate, CostPath, CostProcess, DemandCurve, Model, ModelParams, SupplySpec, DEFAULT_STEPS};
use crate::equilibrium_calibration::{CalibrationOptions, CalibrationSetup, ParitySystem};
use crate::error::{Error, Result};

const KNOWN_KEYS: &[&str] = &[
    "horizon_T",
    "rho",
    "phi",
    "expected_terminal",
    "demand.kind",
    "demand.d_bar",
    "demand.d0",
    "demand.k",
    "cost.kind",
    "cost.c",
    "cost.c_normal",
    "cost.c_stress",
    "cost.lambda",
    "supply.m",
    "supply.M0",
    "grid.n_steps",
    "onshore.c",
    "offshore.c_normal",
    "offshore.c_stress",
    "offshore.lambda",
    "sigma_bar",
    "picard.max_iter",
    "picard.tol",
    "picard.radius",
    "calibration.tol",
    "calibration.lambda_max",
    "calibration.c_ratio_max",
];

/// Parameter set used when no `--config` is given.
///
/// `rho` is of the same order as the costs so that the parity curve leaves the
/// deterministic benchmark towards `c_stress > onshore.c`.
pub const DEFAULT_CONFIG: &str = "\
# two-venue default
horizon_T = 1
rho = 0.05
phi = 0
expected_terminal = 0
supply.m = 1
supply.M0 = 0
onshore.c = 0.05
offshore.c_normal = 0.046
offshore.c_stress = 0.06
offshore.lambda = 1
demand.kind = constant
demand.d_bar = parity
cost.kind = constant
cost.c = 0.05
grid.n_steps = 1024
sigma_bar = 1
";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

/// Everything the `wedge` command needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoVenue {
    pub params: ModelParams,
    pub onshore: CostProcess,
    pub offshore: CostProcess,
    pub supply: SupplySpec,
    pub d_bar: f64,
    pub n_steps: usize,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", no + 1)));
            }
            if v.is_empty() {
                return Err(Error::Config(format!("line {}: empty value for '{k}'", no + 1)));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", no + 1)));
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn default_config() -> Self {
        Config::parse(DEFAULT_CONFIG).expect("default config parses")
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Config(format!("{key}: '{v}' is not a number"))),
        }
    }

    fn f64_req(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?.ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse::<usize>().map_err(|_| Error::Config(format!("{key}: '{v}' is not a positive integer"))),
        }
    }

    pub fn n_steps(&self) -> Result<usize> {
        let n = self.usize_or("grid.n_steps", DEFAULT_STEPS)?;
        if n == 0 {
            return Err(Error::invalid("grid.n_steps", "n_steps must be positive"));
        }
        Ok(n)
    }

    fn supply(&self) -> Result<SupplySpec> {
        Ok(SupplySpec { m_rate: self.f64_req("supply.m")?, m0: self.f64_or("supply.M0", 0.0)? })
    }

    fn base_params(&self, demand: DemandCurve) -> Result<ModelParams> {
        Ok(ModelParams::new(
            self.f64_req("horizon_T")?,
            self.f64_req("rho")?,
            self.f64_or("phi", 0.0)?,
            self.f64_or("expected_terminal", 0.0)?,
            demand,
        ))
    }

    fn demand(&self) -> Result<DemandCurve> {
        match self.raw("demand.kind").unwrap_or("constant") {
            "constant" => {
                if self.raw("demand.d_bar") == Some("parity") {
                    if self.raw("onshore.c").is_none() || self.raw("offshore.c_normal").is_none() {
                        return Err(Error::Config("demand.d_bar = parity needs onshore.c and offshore.c_normal".into()));
                    }
                    return Ok(DemandCurve::Constant { d_bar: self.calibration_setup()?.d_bar });
                }
                Ok(DemandCurve::Constant { d_bar: self.f64_req("demand.d_bar")? })
            }
            "affine" => Ok(DemandCurve::Affine { d0: self.f64_req("demand.d0")?, k: self.f64_req("demand.k")? }),
            other => Err(Error::Config(format!("demand.kind: unknown kind '{other}'"))),
        }
    }

    fn cost(&self) -> Result<CostProcess> {
        match self.raw("cost.kind").unwrap_or("constant") {
            "constant" => Ok(CostProcess::Constant { c: self.f64_req("cost.c")? }),
            "regime_switch" => Ok(CostProcess::RegimeSwitch {
                c_normal: self.f64_req("cost.c_normal")?,
                c_stress: self.f64_req("cost.c_stress")?,
                lambda: self.f64_req("cost.lambda")?,
            }),
            other => Err(Error::Config(format!("cost.kind: unknown kind '{other}'"))),
        }
    }

    /// Single-venue model from the `cost.*` and `demand.*` keys.
    pub fn model(&self) -> Result<Model> {
        let params = self.base_params(self.demand()?)?;
        validate(params, self.cost()?, self.supply()?)
    }

    /// Cost path for the deterministic commands.
    pub fn cost_path(&self) -> Result<CostPath> {
        match self.model()?.cost {
            CostProcess::Constant { c } => Ok(CostPath::Constant(c)),
            CostProcess::RegimeSwitch { .. } => {
                Err(Error::Config("cost.kind must be constant for this command".into()))
            }
        }
    }

    pub fn calibration_setup(&self) -> Result<CalibrationSetup> {
        let mut setup = CalibrationSetup {
            horizon_t: self.f64_req("horizon_T")?,
            rho: self.f64_req("rho")?,
            m: self.f64_req("supply.m")?,
            c_y: self.f64_req("onshore.c")?,
            c_normal: self.f64_req("offshore.c_normal")?,
            d_bar: 0.0,
            expected_terminal: self.f64_or("expected_terminal", 0.0)?,
            n_steps: self.n_steps()?,
        };
        setup.d_bar = match self.raw("demand.d_bar") {
            Some("parity") | None => ParitySystem::parity_demand(&setup)?,
            Some(_) => self.f64_req("demand.d_bar")?,
        };
        Ok(setup)
    }

    pub fn calibration_options(&self) -> Result<CalibrationOptions> {
        let d = CalibrationOptions::default();
        Ok(CalibrationOptions {
            tol: self.f64_or("calibration.tol", d.tol)?,
            lambda_max: self.f64_or("calibration.lambda_max", d.lambda_max)?,
            c_ratio_max: self.f64_or("calibration.c_ratio_max", d.c_ratio_max)?,
            ..d
        })
    }

    pub fn two_venue(&self) -> Result<TwoVenue> {
        let setup = self.calibration_setup()?;
        let params = self.base_params(DemandCurve::Constant { d_bar: setup.d_bar })?;
        let onshore = CostProcess::Constant { c: setup.c_y };
        let offshore = CostProcess::RegimeSwitch {
            c_normal: setup.c_normal,
            c_stress: self.f64_req("offshore.c_stress")?,
            lambda: self.f64_req("offshore.lambda")?,
        };
        let supply = self.supply()?;
        validate(params, onshore, supply)?;
        validate(params, offshore, supply)?;
        Ok(TwoVenue { params, onshore, offshore, supply, d_bar: setup.d_bar, n_steps: setup.n_steps })
    }

    pub fn sigma_bar(&self) -> Result<f64> {
        let s = self.f64_or("sigma_bar", 1.0)?;
        if !s.is_finite() {
            return Err(Error::invalid("sigma_bar", "must be finite"));
        }
        Ok(s)
    }

    pub fn picard_settings(&self) -> Result<(usize, f64, f64)> {
        Ok((
            self.usize_or("picard.max_iter", 200)?,
            self.f64_or("picard.tol", 1e-12)?,
            self.f64_or("picard.radius", 1.0)?,
        ))
    }
}
