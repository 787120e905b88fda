//! Spot and forward prices in a market where hedgers trade spot at a
//! quadratic cost and sell forwards to investors.
//!
//! The crate is organised bottom-up:
//!
//! - [`core_model`]: parameter types, validation, time grids, cost paths.
//! - [`deterministic_engine`]: Riccati coefficients for deterministic costs.
//! - [`jump_regime`]: offshore cost that jumps once to a stressed level.
//! - [`equilibrium_calibration`]: venue prices, spot parity, forward wedge
//!   and the inverse map from a wedge target to stress parameters.
//! - [`picard_phi`]: small risk-aversion perturbation and its fixed point.
//! - [`cli_io`]: config files, quote statistics, CSV/JSON output, CLI.

pub mod cli_io;
pub mod core_model;
pub mod deterministic_engine;
pub mod equilibrium_calibration;
pub mod error;
pub mod jump_regime;
pub mod numerics;
pub mod picard_phi;

pub use core_model::{
    demand_at, validate, CostPath, CostProcess, DemandCurve, Model, ModelParams, SupplySpec,
    TimeGrid,
};
pub use deterministic_engine::CoefficientPaths;
pub use equilibrium_calibration::{CalibrationResult, CalibrationSetup, VenueQuote};
pub use error::{Error, Result};
pub use jump_regime::{ConditionalPath, JumpCoefficients};
pub use picard_phi::{ContractionReport, PerturbationState};
