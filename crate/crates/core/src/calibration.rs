//! Fitting the power model and the component registry from measurement
//! tables, and checking fitted models against scenarios they were not
//! fitted on.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{simulate, Mode, SimOptions, Terminal};
use crate::error::{Error, Result};
use crate::model::{
    rate_from_drain_time, set_key, Category, ComponentSpec, DeviceProfile, PowerModel, Validate,
    Violation, COMPONENT_DRAIN_BASIS_PCT,
};
use crate::plan::{AttackPlan, Goal, LaunchLocation, Phase};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Context {
    Unplugged,
    Charging,
}

/// One row of a measurement table. `component` is either a single id or a
/// `+`-joined set of ids for combined runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub component: String,
    pub drain_pct: f64,
    pub avg: f64,
    pub sd: Option<f64>,
    pub max: Option<f64>,
    pub min: Option<f64>,
    pub full_drain: Option<f64>,
    pub context: Option<Context>,
}

impl MeasurementRecord {
    pub fn new(component: impl Into<String>, drain_pct: f64, avg: f64) -> Self {
        Self {
            component: component.into(),
            drain_pct,
            avg,
            sd: None,
            max: None,
            min: None,
            full_drain: None,
            context: None,
        }
    }

    pub fn with_spread(mut self, sd: f64, max: f64, min: f64) -> Self {
        self.sd = Some(sd);
        self.max = Some(max);
        self.min = Some(min);
        self
    }

    pub fn with_full_drain(mut self, minutes: f64) -> Self {
        self.full_drain = Some(minutes);
        self
    }

    pub fn with_context(mut self, context: Context) -> Self {
        self.context = Some(context);
        self
    }

    pub fn members(&self) -> Vec<&str> {
        self.component.split('+').map(str::trim).collect()
    }

    pub fn is_combined(&self) -> bool {
        self.component.contains('+')
    }

    pub fn is_charging(&self) -> bool {
        self.context == Some(Context::Charging)
    }

    /// Mean drain rate over the measured interval, percent/minute.
    pub fn rate(&self) -> Result<f64> {
        rate_from_drain_time(self.drain_pct, self.avg)
    }
}

impl Validate for MeasurementRecord {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.members().iter().any(|m| m.is_empty()) {
            out.push(Violation::new("component", "empty component id"));
        }
        if !(self.drain_pct > 0.0 && self.drain_pct <= 100.0) {
            out.push(Violation::new(
                "drain_pct",
                format!("must be in (0, 100], got {}", self.drain_pct),
            ));
        }
        if !(self.avg > 0.0) || !self.avg.is_finite() {
            out.push(Violation::new(
                "avg",
                format!("must be positive, got {}", self.avg),
            ));
        }
        if let Some(sd) = self.sd {
            if !(sd >= 0.0) {
                out.push(Violation::new(
                    "sd",
                    format!("must be non-negative, got {sd}"),
                ));
            }
        }
        if let Some(min) = self.min {
            if !(min > 0.0) {
                out.push(Violation::new(
                    "min",
                    format!("must be positive, got {min}"),
                ));
            }
            if !(min <= self.avg) {
                out.push(Violation::new(
                    "min",
                    format!("min ≤ avg violated: {min} > {}", self.avg),
                ));
            }
        }
        if let Some(max) = self.max {
            if !(self.avg <= max) {
                out.push(Violation::new(
                    "max",
                    format!("avg ≤ max violated: {} > {max}", self.avg),
                ));
            }
        }
        if let (Some(min), Some(max)) = (self.min, self.max) {
            if !(min <= max) {
                out.push(Violation::new(
                    "min",
                    format!("min ≤ max violated: {min} > {max}"),
                ));
            }
        }
        if let Some(full) = self.full_drain {
            if !(full > 0.0) {
                out.push(Violation::new(
                    "full_drain",
                    format!("must be positive, got {full}"),
                ));
            }
        }
        out
    }
}

pub fn read_measurements<R: io::Read>(reader: R) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = [
        "component",
        "drain_pct",
        "avg",
        "sd",
        "max",
        "min",
        "full_drain",
        "context",
    ];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse(format!(
            "measurement header must be `{}`, got `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for row in rdr.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

pub fn load_measurements(path: &Path) -> Result<Vec<MeasurementRecord>> {
    read_measurements(std::fs::File::open(path)?)
}

pub fn write_measurements<W: io::Write>(writer: W, records: &[MeasurementRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Everything about a component that a drain measurement cannot tell:
/// its class, the setting and permission gating it, and policy flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentAttributes {
    pub component: String,
    pub category: Category,
    pub setting: Option<String>,
    pub permission: Option<String>,
    pub permission_required_even_if_setting_enabled: bool,
    pub display_class: bool,
    pub web_accessible: bool,
    pub stealth_level: Option<u8>,
}

impl ComponentAttributes {
    /// Attributes assumed for a component missing from the attribute table.
    pub fn neutral(component: impl Into<String>) -> Self {
        Self {
            component: component.into(),
            category: Category::Software,
            setting: None,
            permission: None,
            permission_required_even_if_setting_enabled: false,
            display_class: false,
            web_accessible: false,
            stealth_level: Some(4),
        }
    }
}

#[derive(Debug, Deserialize)]
struct AttributeRow {
    component: String,
    category: Category,
    setting: Option<String>,
    permission: Option<String>,
    req: String,
    display_class: String,
    web_accessible: String,
}

fn yes_no(field: &str, value: &str) -> Result<bool> {
    match value {
        "Y" | "y" => Ok(true),
        "N" | "n" | "" => Ok(false),
        other => Err(Error::Parse(format!(
            "{field}: expected Y or N, got `{other}`"
        ))),
    }
}

/// Reads `component,category,setting,permission,req,display_class,web_accessible`.
pub fn read_attributes<R: io::Read>(reader: R) -> Result<Vec<ComponentAttributes>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: AttributeRow = row?;
        out.push(ComponentAttributes {
            permission_required_even_if_setting_enabled: yes_no("req", &row.req)?,
            display_class: yes_no("display_class", &row.display_class)?,
            web_accessible: yes_no("web_accessible", &row.web_accessible)?,
            component: row.component,
            category: row.category,
            setting: row.setting.filter(|s| !s.is_empty()),
            permission: row.permission.filter(|s| !s.is_empty()),
            stealth_level: Some(4),
        });
    }
    Ok(out)
}

/// Builds a registry from per-component records. Records measured over a
/// drain other than five points are rescaled to the five-point basis;
/// missing spread columns mean a single observation (sd 0, min = max = avg).
pub fn calibrate_components(
    records: &[MeasurementRecord],
    attributes: &[ComponentAttributes],
) -> Result<Registry> {
    let attrs: BTreeMap<&str, &ComponentAttributes> = attributes
        .iter()
        .map(|a| (a.component.as_str(), a))
        .collect();
    let mut registry = Registry::default();
    for record in records {
        let violations = record.validate();
        if !violations.is_empty() {
            return Err(Error::invalid(
                format!("measurement record `{}`", record.component),
                violations,
            ));
        }
        if record.is_combined() || record.is_charging() {
            return Err(Error::Calibration(format!(
                "record `{}` is a combined or charging run, not a single-component measurement",
                record.component
            )));
        }
        let scale = COMPONENT_DRAIN_BASIS_PCT / record.drain_pct;
        let at_basis = |v: f64| v * scale;
        let neutral;
        let attr = match attrs.get(record.component.as_str()) {
            Some(a) => *a,
            None => {
                neutral = ComponentAttributes::neutral(&record.component);
                &neutral
            }
        };
        let spec = ComponentSpec {
            id: record.component.clone(),
            drain_time_mean: at_basis(record.avg),
            drain_time_sd: at_basis(record.sd.unwrap_or(0.0)),
            drain_time_min: at_basis(record.min.unwrap_or(record.avg)),
            drain_time_max: at_basis(record.max.unwrap_or(record.avg)),
            category: attr.category,
            required_setting: attr.setting.clone(),
            required_permission: attr.permission.clone(),
            permission_required_even_if_setting_enabled: attr
                .permission_required_even_if_setting_enabled,
            stealth_level: attr.stealth_level,
            display_class: attr.display_class,
            web_accessible: attr.web_accessible,
            full_drain_minutes: record.full_drain,
        };
        registry.insert(spec)?;
    }
    registry.ensure_valid("calibrated registry")?;
    Ok(registry)
}

/// Result of fitting the interference multiplier of one component set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceFit {
    pub members: String,
    pub eta: f64,
    pub combined_rate: f64,
    pub summed_rate: f64,
    /// Set when the combination drains faster than its parts (η > 1).
    pub warning: Option<String>,
}

impl InterferenceFit {
    /// Records η as the override for this exact set.
    pub fn apply_override(&self, model: &mut PowerModel) -> Result<()> {
        self.check_storable()?;
        model
            .interference_overrides
            .insert(self.members.clone(), self.eta);
        Ok(())
    }

    /// Uses η for every multi-component set without its own override.
    pub fn apply_default(&self, model: &mut PowerModel) -> Result<()> {
        self.check_storable()?;
        model.interference_eta = self.eta;
        Ok(())
    }

    fn check_storable(&self) -> Result<()> {
        if self.eta > 1.0 {
            return Err(Error::Calibration(format!(
                "super-additive set `{}` (η = {}) cannot be stored; the model requires η ≤ 1",
                self.members, self.eta
            )));
        }
        Ok(())
    }
}

pub fn fit_interference<S: AsRef<str>>(
    combined: &MeasurementRecord,
    members: &[S],
    registry: &Registry,
) -> Result<InterferenceFit> {
    combined.ensure_valid("combined measurement")?;
    let unique: BTreeSet<&str> = members.iter().map(AsRef::as_ref).collect();
    if unique.len() < 2 {
        return Err(Error::InvalidArgument(
            "interference needs at least two distinct components".into(),
        ));
    }
    let mut summed_rate = 0.0;
    for id in &unique {
        summed_rate += registry.require(id)?.mean_rate();
    }
    let combined_rate = combined.rate()?;
    let eta = combined_rate / summed_rate;
    let members = set_key(unique);
    let warning = (eta > 1.0).then(|| {
        format!(
            "set `{members}` is super-additive (η = {eta:.4}); sub-additive interference expected"
        )
    });
    Ok(InterferenceFit {
        members,
        eta,
        combined_rate,
        summed_rate,
        warning,
    })
}

/// Fits the auto-dim multiplier from a full-drain time of a display-class
/// component: the time left after draining down to the dim threshold at
/// the undimmed rate is attributed to the dimmed tail.
pub fn fit_dim_factor(
    full_drain_minutes: f64,
    component_id: &str,
    model: &PowerModel,
    registry: &Registry,
) -> Result<f64> {
    let spec = registry.require(component_id)?;
    if !spec.display_class {
        return Err(Error::Calibration(format!(
            "`{component_id}` is not display-class; auto-dim does not apply"
        )));
    }
    let threshold = model.dim_threshold;
    if !(threshold > 0.0) {
        return Err(Error::Calibration(
            "dim threshold is 0; no tail to fit".into(),
        ));
    }
    let rate = spec.mean_rate();
    let linear = 100.0 / rate;
    if !(full_drain_minutes > linear) {
        return Err(Error::Calibration(format!(
            "full drain {full_drain_minutes} min is not longer than the undimmed linear time {linear:.3} min"
        )));
    }
    let above = (100.0 - threshold) / rate;
    let tail = full_drain_minutes - above;
    let tail_rate = threshold / tail;
    Ok(tail_rate / rate)
}

/// Charging supply in percent/minute: the rate lost to the charger when the
/// same attack is repeated plugged in.
pub fn fit_charging_supply(
    unplugged: &MeasurementRecord,
    plugged: &MeasurementRecord,
) -> Result<f64> {
    unplugged.ensure_valid("unplugged measurement")?;
    plugged.ensure_valid("plugged measurement")?;
    if set_key(unplugged.members()) != set_key(plugged.members()) {
        return Err(Error::Calibration(format!(
            "component sets differ: `{}` vs `{}`",
            unplugged.component, plugged.component
        )));
    }
    if unplugged.drain_pct != plugged.drain_pct {
        return Err(Error::Calibration(format!(
            "drain amounts differ: {} vs {}",
            unplugged.drain_pct, plugged.drain_pct
        )));
    }
    if plugged.avg < unplugged.avg {
        return Err(Error::Calibration(format!(
            "plugged run ({} min) is faster than unplugged ({} min); charging cannot speed drain",
            plugged.avg, unplugged.avg
        )));
    }
    Ok(unplugged.rate()? - plugged.rate()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleLabel {
    InSample,
    HeldOut,
}

/// A measured outcome to compare a fitted model against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub components: Vec<String>,
    pub drain_pct: f64,
    pub charging: bool,
    pub expected_minutes: f64,
    pub label: SampleLabel,
}

impl Scenario {
    pub fn from_record(record: &MeasurementRecord, label: SampleLabel) -> Self {
        let ctx = if record.is_charging() {
            ", charging"
        } else {
            ""
        };
        Self {
            name: format!("{} {}%{ctx}", record.component, record.drain_pct),
            components: record.members().into_iter().map(str::to_owned).collect(),
            drain_pct: record.drain_pct,
            charging: record.is_charging(),
            expected_minutes: record.avg,
            label,
        }
    }

    pub fn to_plan(&self) -> AttackPlan {
        let goal = if self.drain_pct >= 100.0 {
            Goal::FullDrain
        } else {
            Goal::PartialDrain(self.drain_pct)
        };
        AttackPlan {
            goal,
            steps: vec![Phase::new(self.components.iter().cloned())],
            triggers: Vec::new(),
            launch_location: LaunchLocation::App,
            metadata: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationEntry {
    pub scenario: String,
    pub label: SampleLabel,
    pub expected_minutes: f64,
    pub predicted_minutes: Option<f64>,
    pub relative_error: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub entries: Vec<CrossValidationEntry>,
}

impl CrossValidationReport {
    pub fn get(&self, scenario: &str) -> Option<&CrossValidationEntry> {
        self.entries.iter().find(|e| e.scenario == scenario)
    }
}

/// Simulates each scenario deterministically from a full battery and
/// reports `|predicted - expected| / expected`.
pub fn cross_validate(
    model: &PowerModel,
    registry: &Registry,
    scenarios: &[Scenario],
) -> Result<CrossValidationReport> {
    model.ensure_valid("power model")?;
    let options = SimOptions {
        mode: Mode::Deterministic,
        force: true,
        ..SimOptions::default()
    };
    let mut entries = Vec::with_capacity(scenarios.len());
    for scenario in scenarios {
        let mut entry = CrossValidationEntry {
            scenario: scenario.name.clone(),
            label: scenario.label,
            expected_minutes: scenario.expected_minutes,
            predicted_minutes: None,
            relative_error: None,
            skipped: None,
        };
        if let Some(unknown) = scenario
            .components
            .iter()
            .find(|c| registry.get(c).is_none())
        {
            entry.skipped = Some(format!("component `{unknown}` is not in the registry"));
            entries.push(entry);
            continue;
        }
        let profile = DeviceProfile::default().charging(scenario.charging);
        let trace = simulate(&scenario.to_plan(), &profile, model, registry, &options)?;
        match trace.terminal {
            Terminal::GoalMet | Terminal::BatteryDead => {
                let predicted = trace.elapsed_minutes();
                entry.predicted_minutes = Some(predicted);
                entry.relative_error =
                    Some((predicted - scenario.expected_minutes).abs() / scenario.expected_minutes);
            }
            other => {
                entry.skipped = Some(format!("simulation ended with {other:?} before the goal"));
            }
        }
        entries.push(entry);
    }
    Ok(CrossValidationReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn attrs() -> Vec<ComponentAttributes> {
        let mut brightness = ComponentAttributes::neutral("brightness");
        brightness.category = Category::Hardware;
        brightness.display_class = true;
        vec![brightness]
    }

    fn trio_registry() -> Registry {
        let records = vec![
            MeasurementRecord::new("brightness", 5.0, 7.4).with_spread(1.075, 10.0, 6.0),
            MeasurementRecord::new("cpu", 5.0, 9.5).with_spread(0.972, 11.0, 8.0),
            MeasurementRecord::new("camera_flash", 5.0, 9.3).with_spread(1.059, 12.0, 8.0),
        ];
        calibrate_components(&records, &attrs()).unwrap()
    }

    #[test]
    fn calibrated_rates() {
        let reg = trio_registry();
        assert_relative_eq!(
            reg.get("brightness").unwrap().mean_rate(),
            0.67568,
            epsilon = 1e-5
        );
        assert_relative_eq!(reg.get("cpu").unwrap().mean_rate(), 0.52632, epsilon = 1e-5);
        let b = reg.get("brightness").unwrap();
        assert_eq!(
            (
                b.drain_time_mean,
                b.drain_time_sd,
                b.drain_time_max,
                b.drain_time_min
            ),
            (7.4, 1.075, 10.0, 6.0)
        );
        assert!(calibrate_components(&[], &[]).unwrap().is_empty());
    }

    #[test]
    fn calibration_errors() {
        let dup = vec![
            MeasurementRecord::new("cpu", 5.0, 9.5),
            MeasurementRecord::new("cpu", 5.0, 9.0),
        ];
        assert!(matches!(
            calibrate_components(&dup, &[]),
            Err(Error::DuplicateComponent(_))
        ));
        let bad = vec![MeasurementRecord::new("cpu", 5.0, 9.5).with_spread(1.0, 8.0, 11.0)];
        match calibrate_components(&bad, &[]) {
            Err(Error::Invalid { violations, .. }) => assert!(violations.len() >= 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_drain_records_are_rescaled() {
        let reg = calibrate_components(
            &[MeasurementRecord::new("web_composite", 100.0, 164.0).with_full_drain(164.0)],
            &[],
        )
        .unwrap();
        let web = reg.get("web_composite").unwrap();
        assert_relative_eq!(web.drain_time_mean, 8.2, epsilon = 1e-12);
        assert_eq!(web.drain_time_sd, 0.0);
        assert_eq!(web.drain_time_min, web.drain_time_mean);
        assert_eq!(web.full_drain_minutes, Some(164.0));
    }

    #[test]
    fn trio_interference() {
        let reg = trio_registry();
        let combined = MeasurementRecord::new("brightness+camera_flash+cpu", 5.0, 4.8);
        let fit =
            fit_interference(&combined, &["brightness", "cpu", "camera_flash"], &reg).unwrap();
        // 1.041667 / (0.675676 + 0.526316 + 0.537634)
        assert_relative_eq!(fit.combined_rate, 1.0416667, epsilon = 1e-6);
        assert_relative_eq!(fit.summed_rate, 1.7396254, epsilon = 1e-6);
        assert_relative_eq!(fit.eta, 0.598788, epsilon = 1e-5);
        assert!(fit.warning.is_none());
        assert!(fit.eta > 0.55 && fit.eta < 0.65);
        // naive independence would predict 2.874 min per 5%
        assert_relative_eq!(5.0 / fit.summed_rate, 2.874, epsilon = 1e-3);

        let mut model = PowerModel::default();
        fit.apply_override(&mut model).unwrap();
        assert_eq!(
            model.interference_overrides["brightness+camera_flash+cpu"],
            fit.eta
        );
        assert_eq!(model.interference_eta, 1.0);
    }

    #[test]
    fn independent_pair_has_unit_eta() {
        let reg = trio_registry();
        // cpu 5/9.5 + flash 5/9.3 combined
        let t = 5.0 / (5.0 / 9.5 + 5.0 / 9.3);
        let fit = fit_interference(
            &MeasurementRecord::new("cpu+camera_flash", 5.0, t),
            &["cpu", "camera_flash"],
            &reg,
        )
        .unwrap();
        assert_relative_eq!(fit.eta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn super_additive_sets_warn() {
        let reg = trio_registry();
        let fit = fit_interference(
            &MeasurementRecord::new("cpu+camera_flash", 5.0, 2.0),
            &["cpu", "camera_flash"],
            &reg,
        )
        .unwrap();
        assert!(fit.eta > 1.0);
        assert!(fit.warning.is_some());
        assert!(fit.apply_override(&mut PowerModel::default()).is_err());
    }

    #[test]
    fn interference_preconditions() {
        let reg = trio_registry();
        let rec = MeasurementRecord::new("cpu", 5.0, 4.0);
        assert!(fit_interference(&rec, &["cpu"], &reg).is_err());
        assert!(fit_interference(&rec, &["cpu", "cpu"], &reg).is_err());
        assert!(matches!(
            fit_interference(&rec, &["cpu", "gps"], &reg),
            Err(Error::UnknownComponent(_))
        ));
    }

    #[test]
    fn brightness_dim_factor() {
        let reg = trio_registry();
        let model = PowerModel::default();
        let phi = fit_dim_factor(204.0, "brightness", &model, &reg).unwrap();
        // above threshold 95 / 0.675676 = 140.6 min, tail 63.4 min, 5/63.4 / 0.675676
        let oracle = (5.0 / (204.0 - 95.0 * 7.4 / 5.0)) / (5.0 / 7.4);
        assert_relative_eq!(phi, oracle, epsilon = 1e-12);
        assert_relative_eq!(phi, 0.1167, epsilon = 1e-4);
        assert!(phi > 0.10 && phi < 0.13);
    }

    #[test]
    fn dim_factor_errors() {
        let reg = trio_registry();
        let model = PowerModel::default();
        assert!(fit_dim_factor(100.0 * 7.4 / 5.0, "brightness", &model, &reg).is_err());
        assert!(fit_dim_factor(120.0, "brightness", &model, &reg).is_err());
        assert!(fit_dim_factor(300.0, "cpu", &model, &reg).is_err());
        let no_threshold = PowerModel {
            dim_threshold: 0.0,
            ..PowerModel::default()
        };
        assert!(fit_dim_factor(204.0, "brightness", &no_threshold, &reg).is_err());
    }

    #[test]
    fn trio_charging_supply() {
        let unplugged = MeasurementRecord::new("brightness+camera_flash+cpu", 5.0, 4.8);
        let plugged = MeasurementRecord::new("cpu+brightness+camera_flash", 5.0, 7.2)
            .with_context(Context::Charging);
        let supply = fit_charging_supply(&unplugged, &plugged).unwrap();
        assert_relative_eq!(supply, 5.0 / 4.8 - 5.0 / 7.2, epsilon = 1e-12);
        assert_relative_eq!(supply, 0.34722, epsilon = 1e-5);
        assert!(supply > 0.33 && supply < 0.36);

        let same = MeasurementRecord::new("brightness+camera_flash+cpu", 5.0, 4.8);
        assert_eq!(fit_charging_supply(&unplugged, &same).unwrap(), 0.0);

        let faster = MeasurementRecord::new("brightness+camera_flash+cpu", 5.0, 3.0);
        assert!(fit_charging_supply(&unplugged, &faster).is_err());
        let other_set = MeasurementRecord::new("cpu", 5.0, 7.2);
        assert!(fit_charging_supply(&unplugged, &other_set).is_err());
    }

    #[test]
    fn measurement_csv_round_trip() {
        let text = "component,drain_pct,avg,sd,max,min,full_drain,context\n\
                    brightness,5,7.4,1.075,10,6,204,unplugged\n\
                    brightness+camera_flash+cpu,5,7.2,,,,,charging\n";
        let records = read_measurements(text.as_bytes()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].full_drain, Some(204.0));
        assert_eq!(records[1].sd, None);
        assert!(records[1].is_charging());
        let mut out = Vec::new();
        write_measurements(&mut out, &records).unwrap();
        assert_eq!(read_measurements(out.as_slice()).unwrap(), records);
    }

    #[test]
    fn measurement_csv_rejects_wrong_header() {
        let text = "component,avg\ncpu,9.5\n";
        assert!(matches!(
            read_measurements(text.as_bytes()),
            Err(Error::Parse(_))
        ));
    }
}
