//! Domain types shared by every module: drainable components, the global
//! power model, device profiles and battery state, plus the conversions
//! between drain times (minutes per k percentage points) and drain rates
//! (percentage points per minute).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Percentage points drained by one calibrated `drain_time_*` figure.
pub const COMPONENT_DRAIN_BASIS_PCT: f64 = 5.0;

/// Slack used when comparing accumulated battery levels against integer
/// boundaries; absorbs floating-point drift from summing many small steps.
pub const LEVEL_EPSILON: f64 = 1e-9;

/// Rate in percent/minute that drains `drain_pct` points in `minutes`.
pub fn rate_from_drain_time(drain_pct: f64, minutes: f64) -> Result<f64> {
    if !(minutes > 0.0) || !minutes.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "drain time must be positive, got {minutes} min"
        )));
    }
    if !(drain_pct >= 0.0) || !drain_pct.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "drain amount must be non-negative, got {drain_pct}"
        )));
    }
    Ok(drain_pct / minutes)
}

/// Minutes needed to drain `drain_pct` points at `rate` percent/minute.
pub fn drain_time_from_rate(drain_pct: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "drain rate must be positive, got {rate} %/min"
        )));
    }
    if !(drain_pct >= 0.0) || !drain_pct.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "drain amount must be non-negative, got {drain_pct}"
        )));
    }
    Ok(drain_pct / rate)
}

/// Canonical key for a set of component ids: sorted, deduplicated, `+`-joined.
pub fn set_key<S: AsRef<str>>(ids: impl IntoIterator<Item = S>) -> String {
    let set: BTreeSet<String> = ids.into_iter().map(|s| s.as_ref().to_owned()).collect();
    set.into_iter().collect::<Vec<_>>().join("+")
}

/// A single broken invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Total invariant checking. An empty list means the value is valid.
pub trait Validate {
    fn validate(&self) -> Vec<Violation>;

    fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Turns violations into an [`Error::Invalid`] naming `what`.
    fn ensure_valid(&self, what: &str) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(what, violations))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Hardware,
    Software,
    Network,
}

/// A drainable element with its calibrated drain-time distribution and the
/// device settings and permissions it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub id: String,
    /// Minutes to drain five percentage points, mean over trials.
    pub drain_time_mean: f64,
    pub drain_time_sd: f64,
    pub drain_time_min: f64,
    pub drain_time_max: f64,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_setting: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_permission: Option<String>,
    #[serde(default)]
    pub permission_required_even_if_setting_enabled: bool,
    /// `None` means the detectability of this component was never assessed.
    #[serde(default)]
    pub stealth_level: Option<u8>,
    #[serde(default)]
    pub display_class: bool,
    #[serde(default)]
    pub web_accessible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_drain_minutes: Option<f64>,
}

impl ComponentSpec {
    /// Mean standalone drain rate in percent/minute.
    pub fn mean_rate(&self) -> f64 {
        COMPONENT_DRAIN_BASIS_PCT / self.drain_time_mean
    }
}

fn positive_finite(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl Validate for ComponentSpec {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.id.trim().is_empty() {
            out.push(Violation::new("id", "must not be empty"));
        }
        if self.id.contains('+') {
            out.push(Violation::new("id", "must not contain `+`"));
        }
        for (name, v) in [
            ("drain_time_mean", self.drain_time_mean),
            ("drain_time_min", self.drain_time_min),
            ("drain_time_max", self.drain_time_max),
        ] {
            if !positive_finite(v) {
                out.push(Violation::new(
                    name,
                    format!("must be strictly positive, got {v}"),
                ));
            }
        }
        if !(self.drain_time_sd >= 0.0) || !self.drain_time_sd.is_finite() {
            out.push(Violation::new(
                "drain_time_sd",
                format!("must be non-negative, got {}", self.drain_time_sd),
            ));
        }
        if !(self.drain_time_min <= self.drain_time_max) {
            out.push(Violation::new(
                "drain_time_min",
                format!(
                    "min ≤ max violated: {} > {}",
                    self.drain_time_min, self.drain_time_max
                ),
            ));
        }
        if !(self.drain_time_min <= self.drain_time_mean) {
            out.push(Violation::new(
                "drain_time_mean",
                format!(
                    "min ≤ mean violated: {} > {}",
                    self.drain_time_min, self.drain_time_mean
                ),
            ));
        }
        if !(self.drain_time_mean <= self.drain_time_max) {
            out.push(Violation::new(
                "drain_time_mean",
                format!(
                    "mean ≤ max violated: {} > {}",
                    self.drain_time_mean, self.drain_time_max
                ),
            ));
        }
        if let Some(level) = self.stealth_level {
            if level > 4 {
                out.push(Violation::new(
                    "stealth_level",
                    format!("must be in 0..=4, got {level}"),
                ));
            }
        }
        if self.permission_required_even_if_setting_enabled && self.required_permission.is_none() {
            out.push(Violation::new(
                "permission_required_even_if_setting_enabled",
                "set but required_permission is absent",
            ));
        }
        if let Some(full) = self.full_drain_minutes {
            if !positive_finite(full) {
                out.push(Violation::new(
                    "full_drain_minutes",
                    format!("must be strictly positive, got {full}"),
                ));
            }
        }
        out
    }
}

/// Calibrated global parameters of the drain model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerModel {
    /// Percent/minute drained with nothing active (wake-lock only).
    pub baseline_rate: f64,
    /// Multiplier on the summed rates of two or more concurrent components.
    pub interference_eta: f64,
    /// Per-set overrides of `interference_eta`, keyed by [`set_key`].
    pub interference_overrides: BTreeMap<String, f64>,
    pub dim_threshold: f64,
    pub dim_factor_phi: f64,
    pub charging_supply: f64,
    /// Seconds between battery polls in the measurement protocol.
    pub poll_interval: f64,
    /// Percentage points for the partial-drain protocol.
    pub drain_threshold: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            baseline_rate: 0.0,
            interference_eta: 1.0,
            interference_overrides: BTreeMap::new(),
            dim_threshold: 5.0,
            dim_factor_phi: 1.0,
            charging_supply: 0.0,
            poll_interval: 2.0,
            drain_threshold: 5.0,
        }
    }
}

impl PowerModel {
    /// Interference multiplier for an active set. Singletons and the empty
    /// set are never scaled.
    pub fn eta_for<S: AsRef<str>>(&self, ids: &[S]) -> f64 {
        if ids.len() < 2 {
            return 1.0;
        }
        let key = set_key(ids.iter().map(AsRef::as_ref));
        self.interference_overrides
            .get(&key)
            .copied()
            .unwrap_or(self.interference_eta)
    }
}

fn unit_interval_open_closed(v: f64) -> bool {
    v > 0.0 && v <= 1.0
}

impl Validate for PowerModel {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !unit_interval_open_closed(self.interference_eta) {
            out.push(Violation::new(
                "interference_eta",
                format!("must be in (0, 1], got {}", self.interference_eta),
            ));
        }
        for (key, eta) in &self.interference_overrides {
            if !unit_interval_open_closed(*eta) {
                out.push(Violation::new(
                    format!("interference_overrides[{key}]"),
                    format!("must be in (0, 1], got {eta}"),
                ));
            }
            if key.split('+').count() < 2 {
                out.push(Violation::new(
                    format!("interference_overrides[{key}]"),
                    "key must name at least two components",
                ));
            }
        }
        if !unit_interval_open_closed(self.dim_factor_phi) {
            out.push(Violation::new(
                "dim_factor_phi",
                format!("must be in (0, 1], got {}", self.dim_factor_phi),
            ));
        }
        if !(0.0..=100.0).contains(&self.dim_threshold) {
            out.push(Violation::new(
                "dim_threshold",
                format!("must be in [0, 100], got {}", self.dim_threshold),
            ));
        }
        if !(self.charging_supply >= 0.0) || !self.charging_supply.is_finite() {
            out.push(Violation::new(
                "charging_supply",
                format!("must be non-negative, got {}", self.charging_supply),
            ));
        }
        if !(self.baseline_rate >= 0.0) || !self.baseline_rate.is_finite() {
            out.push(Violation::new(
                "baseline_rate",
                format!("must be non-negative, got {}", self.baseline_rate),
            ));
        }
        if !positive_finite(self.poll_interval) {
            out.push(Violation::new(
                "poll_interval",
                format!("must be positive, got {}", self.poll_interval),
            ));
        }
        if !positive_finite(self.drain_threshold) {
            out.push(Violation::new(
                "drain_threshold",
                format!("must be positive, got {}", self.drain_threshold),
            ));
        }
        out
    }
}

/// The attacked device: what it grants and how it starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceProfile {
    pub granted_permissions: BTreeSet<String>,
    pub enabled_settings: BTreeSet<String>,
    pub initial_battery: f64,
    pub charging: bool,
    pub battery_report_granularity: u32,
}

impl Default for DeviceProfile {
    fn default() -> Self {
        Self {
            granted_permissions: BTreeSet::new(),
            enabled_settings: BTreeSet::new(),
            initial_battery: 100.0,
            charging: false,
            battery_report_granularity: 1,
        }
    }
}

impl DeviceProfile {
    pub fn with_permissions<S: Into<String>>(mut self, perms: impl IntoIterator<Item = S>) -> Self {
        self.granted_permissions
            .extend(perms.into_iter().map(Into::into));
        self
    }

    pub fn with_settings<S: Into<String>>(mut self, settings: impl IntoIterator<Item = S>) -> Self {
        self.enabled_settings
            .extend(settings.into_iter().map(Into::into));
        self
    }

    pub fn charging(mut self, charging: bool) -> Self {
        self.charging = charging;
        self
    }

    pub fn initial_battery(mut self, level: f64) -> Self {
        self.initial_battery = level;
        self
    }
}

impl Validate for DeviceProfile {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(0.0..=100.0).contains(&self.initial_battery) {
            out.push(Violation::new(
                "initial_battery",
                format!("must be in [0, 100], got {}", self.initial_battery),
            ));
        }
        let g = self.battery_report_granularity;
        if g == 0 || 100 % g != 0 {
            out.push(Violation::new(
                "battery_report_granularity",
                format!("must be ≥ 1 and divide 100, got {g}"),
            ));
        }
        out
    }
}

/// Observable battery state at one instant of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    /// Continuous charge in percent.
    pub level: f64,
    /// What an on-device observer reads: `level` rounded up to the report
    /// granularity, so a reading of `r` means at most `r` percent remains.
    pub reported_level: u32,
    pub charging: bool,
    /// Seconds since the simulation started.
    pub elapsed: f64,
    pub granularity: u32,
}

impl BatteryState {
    pub fn new(level: f64, charging: bool, elapsed: f64, granularity: u32) -> Self {
        let level = level.clamp(0.0, 100.0);
        Self {
            level,
            reported_level: quantize_level(level, granularity),
            charging,
            elapsed,
            granularity,
        }
    }

    pub fn initial(profile: &DeviceProfile) -> Self {
        Self::new(
            profile.initial_battery,
            profile.charging,
            0.0,
            profile.battery_report_granularity.max(1),
        )
    }

    pub fn with_level(&self, level: f64) -> Self {
        Self::new(level, self.charging, self.elapsed, self.granularity)
    }
}

/// Rounds a continuous level up to the report granularity.
pub fn quantize_level(level: f64, granularity: u32) -> u32 {
    let g = f64::from(granularity.max(1));
    let steps = ((level - LEVEL_EPSILON) / g).ceil().max(0.0);
    ((steps * g) as u32).min(100)
}

impl Validate for BatteryState {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(0.0..=100.0).contains(&self.level) {
            out.push(Violation::new(
                "level",
                format!("must be in [0, 100], got {}", self.level),
            ));
        }
        let g = self.granularity;
        if g == 0 || 100 % g != 0 {
            out.push(Violation::new(
                "granularity",
                format!("must be ≥ 1 and divide 100, got {g}"),
            ));
        } else {
            // reported - g < level <= reported, up to LEVEL_EPSILON
            if self.reported_level != quantize_level(self.level, g) {
                out.push(Violation::new(
                    "reported_level",
                    format!(
                        "{} is not the granularity-{g} ceiling of level {}",
                        self.reported_level, self.level
                    ),
                ));
            }
        }
        if !(self.elapsed >= 0.0) || !self.elapsed.is_finite() {
            out.push(Violation::new(
                "elapsed",
                format!("must be non-negative, got {}", self.elapsed),
            ));
        }
        out
    }
}
