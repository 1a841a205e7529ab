//! The published measurement dataset, embedded in the binary.
//!
//! Three versioned tables: per-component 5-point drain measurements
//! (plus full-drain times where they were reported), combined and
//! charging scenarios, and the permission/setting attributes.

use crate::calibration::{
    calibrate_components, fit_charging_supply, fit_dim_factor, fit_interference, read_attributes,
    read_measurements, ComponentAttributes, InterferenceFit, MeasurementRecord, SampleLabel,
    Scenario,
};
use crate::error::{Error, Result};
use crate::model::{DeviceProfile, PowerModel};
use crate::registry::Registry;

pub const DATASET_VERSION: &str = "published-v1";

pub const COMPONENTS_CSV: &str = include_str!("../data/published_components_v1.csv");
pub const SCENARIOS_CSV: &str = include_str!("../data/published_scenarios_v1.csv");
pub const ATTRIBUTES_CSV: &str = include_str!("../data/published_attributes_v1.csv");

/// The three components of the most effective combined attack.
pub const TRIO: [&str; 3] = ["brightness", "camera_flash", "cpu"];

/// The fourteen individually measured components, in table order.
pub const TABLE_COMPONENTS: [&str; 14] = [
    "vibration",
    "cpu",
    "camera_flash",
    "wifi_down",
    "bluetooth",
    "phone",
    "4g_down",
    "brightness",
    "video",
    "gps",
    "notification",
    "rotation",
    "photo",
    "encryption",
];

pub fn component_records() -> Vec<MeasurementRecord> {
    read_measurements(COMPONENTS_CSV.as_bytes()).expect("embedded component table is well formed")
}

pub fn scenario_records() -> Vec<MeasurementRecord> {
    read_measurements(SCENARIOS_CSV.as_bytes()).expect("embedded scenario table is well formed")
}

pub fn attributes() -> Vec<ComponentAttributes> {
    read_attributes(ATTRIBUTES_CSV.as_bytes()).expect("embedded attribute table is well formed")
}

/// Registry calibrated from the embedded tables.
pub fn published_registry() -> Registry {
    calibrate_components(&component_records(), &attributes()).expect("embedded dataset calibrates")
}

/// Profile granting every permission and enabling every setting the
/// registry mentions.
pub fn full_access_profile(registry: &Registry) -> DeviceProfile {
    DeviceProfile::default()
        .with_permissions(
            registry
                .iter()
                .filter_map(|c| c.required_permission.clone()),
        )
        .with_settings(registry.iter().filter_map(|c| c.required_setting.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublishedFit {
    pub model: PowerModel,
    pub interference: InterferenceFit,
    pub dim_factor: f64,
    pub charging_supply: f64,
}

fn find_scenario<'a>(
    records: &'a [MeasurementRecord],
    component: &str,
    drain_pct: f64,
    charging: bool,
) -> Result<&'a MeasurementRecord> {
    records
        .iter()
        .find(|r| {
            r.component == component && r.drain_pct == drain_pct && r.is_charging() == charging
        })
        .ok_or_else(|| {
            Error::Calibration(format!(
                "no {}{drain_pct}% record for `{component}`",
                if charging { "charging " } else { "" }
            ))
        })
}

/// Fits η on the trio's 5-point time, φ on the brightness full drain and
/// the charging supply on the trio's plugged-in 5-point time. Nothing
/// else from the scenario table is used.
pub fn fit_published_model(registry: &Registry) -> Result<PublishedFit> {
    let scenarios = scenario_records();
    let trio = TRIO.join("+");
    let unplugged = find_scenario(&scenarios, &trio, 5.0, false)?;
    let plugged = find_scenario(&scenarios, &trio, 5.0, true)?;

    let mut model = PowerModel::default();
    let interference = fit_interference(unplugged, &TRIO, registry)?;
    interference.apply_override(&mut model)?;
    interference.apply_default(&mut model)?;

    let brightness_full = registry
        .require("brightness")?
        .full_drain_minutes
        .ok_or_else(|| Error::Calibration("brightness has no full-drain time".into()))?;
    let dim_factor = fit_dim_factor(brightness_full, "brightness", &model, registry)?;
    model.dim_factor_phi = dim_factor;

    let charging_supply = fit_charging_supply(unplugged, plugged)?;
    model.charging_supply = charging_supply;

    Ok(PublishedFit {
        model,
        interference,
        dim_factor,
        charging_supply,
    })
}

/// Every published outcome as a scenario, labeled by whether the fit saw it.
/// Scenarios naming components outside the registry stay in the list; the
/// cross-validation reports them as skipped.
pub fn published_scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();
    for record in scenario_records() {
        let in_sample = record.drain_pct < 100.0 && record.component == TRIO.join("+");
        let label = if in_sample {
            SampleLabel::InSample
        } else {
            SampleLabel::HeldOut
        };
        out.push(Scenario::from_record(&record, label));
    }
    for record in component_records() {
        let Some(full) = record.full_drain else {
            continue;
        };
        // composite full drains calibrate their own rate, brightness fits φ
        let in_sample = record.drain_pct >= 100.0 || record.component == "brightness";
        let label = if in_sample {
            SampleLabel::InSample
        } else {
            SampleLabel::HeldOut
        };
        let full_record = MeasurementRecord::new(record.component.clone(), 100.0, full);
        out.push(Scenario::from_record(&full_record, label));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn registry_has_table_and_composites() {
        let reg = published_registry();
        assert_eq!(reg.len(), 18);
        for id in TABLE_COMPONENTS {
            assert!(reg.get(id).is_some(), "{id}");
        }
        assert_relative_eq!(
            reg.require("web_composite").unwrap().drain_time_mean,
            8.2,
            epsilon = 1e-12
        );
        assert!(reg.require("brightness").unwrap().display_class);
        assert_eq!(reg.iter().filter(|c| c.display_class).count(), 1);
    }

    #[test]
    fn fitted_parameters() {
        let fit = fit_published_model(&published_registry()).unwrap();
        let eta = (5.0 / 4.8) / (5.0 / 7.4 + 5.0 / 9.5 + 5.0 / 9.3);
        assert_relative_eq!(fit.model.interference_eta, eta, epsilon = 1e-12);
        assert_relative_eq!(eta, 0.5988, epsilon = 1e-4);
        let phi = (5.0 / (204.0 - 95.0 * 7.4 / 5.0)) / (5.0 / 7.4);
        assert_relative_eq!(fit.dim_factor, phi, epsilon = 1e-12);
        assert_relative_eq!(fit.charging_supply, 5.0 / 4.8 - 5.0 / 7.2, epsilon = 1e-12);
        assert_eq!(fit.model.eta_for(&TRIO), eta);
    }

    #[test]
    fn scenario_labels() {
        let scenarios = published_scenarios();
        let label = |name: &str| scenarios.iter().find(|s| s.name == name).map(|s| s.label);
        assert_eq!(
            label("brightness+camera_flash+cpu 5%"),
            Some(SampleLabel::InSample)
        );
        assert_eq!(
            label("brightness+camera_flash+cpu 5%, charging"),
            Some(SampleLabel::InSample)
        );
        assert_eq!(
            label("brightness+camera_flash+cpu 100%"),
            Some(SampleLabel::HeldOut)
        );
        assert_eq!(label("brightness 100%"), Some(SampleLabel::InSample));
        assert_eq!(label("photo 100%"), Some(SampleLabel::HeldOut));
        assert_eq!(label("web_composite 5%"), Some(SampleLabel::HeldOut));
        assert_eq!(label("web_composite 100%"), Some(SampleLabel::InSample));
        assert_eq!(label("encryption 95%"), Some(SampleLabel::HeldOut));
        assert_eq!(label("most_efficient 100%"), Some(SampleLabel::HeldOut));
    }

    #[test]
    fn full_access_unlocks_everything() {
        use crate::plan::{check_feasibility, AttackPlan, Goal};
        let reg = published_registry();
        let profile = full_access_profile(&reg);
        let plan = AttackPlan::single(
            Goal::FullDrain,
            reg.ids().map(str::to_owned).collect::<Vec<_>>(),
        );
        assert!(check_feasibility(&plan, &profile, &reg).feasible);
    }
}
