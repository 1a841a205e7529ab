//! drainsim: a calibrated discrete-time simulator of battery-exhaustion
//! attacks on mobile devices.
//!
//! Component drain rates come from 5-point drain measurements; an
//! interference multiplier, an auto-dim factor and a charging supply are
//! fitted from a handful of combined runs. Attack plans are phases of
//! concurrently active components plus event triggers, checked against a
//! device's permissions and settings before they run.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod plan;
pub mod registry;
pub mod sampling;

pub use calibration::{
    calibrate_components, cross_validate, fit_charging_supply, fit_dim_factor, fit_interference,
    MeasurementRecord, Scenario,
};
pub use engine::{simulate, Mode, SimOptions, SimulationTrace, Terminal};
pub use error::{Error, Result};
pub use harness::{drain_curve, reproduce_published, run_protocol, ProtocolOptions, TrialStats};
pub use model::{BatteryState, ComponentSpec, DeviceProfile, PowerModel, Validate};
pub use plan::{check_feasibility, parse_plan, rank_plans, stealth_score, AttackPlan, Goal};
pub use registry::Registry;
