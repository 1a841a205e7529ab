//! Attack plans: what to drain, in which order, reacting to which events,
//! and launched from where. Also the static analyses over plans
//! (feasibility against a device, stealthiness, efficacy, ranking).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::engine::{simulate, Mode, SimOptions, SimulationTrace, Terminal};
use crate::error::{Error, Result};
use crate::model::{DeviceProfile, PowerModel, Violation};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    /// Drain until the device dies.
    FullDrain,
    /// Drain by this many percentage points.
    PartialDrain(f64),
    /// No drain target; the plan's triggers decide what runs.
    EventControlled,
}

/// Components that run in parallel, for `duration` minutes or indefinitely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub activate: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl Phase {
    pub fn new<S: Into<String>>(ids: impl IntoIterator<Item = S>) -> Self {
        Self {
            activate: ids.into_iter().map(Into::into).collect(),
            duration: None,
        }
    }

    pub fn for_minutes(mut self, minutes: f64) -> Self {
        self.duration = Some(minutes);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    BatteryBelow(f64),
    BatteryAbove(f64),
    ChargingBecame(bool),
    ElapsedExceeds(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Start(BTreeSet<String>),
    Stop(BTreeSet<String>),
    StopAll,
    Scale {
        components: BTreeSet<String>,
        factor: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trigger {
    pub condition: Condition,
    pub action: Action,
    #[serde(default)]
    pub once: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaunchLocation {
    #[default]
    App,
    Web,
    Proximity,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Controlled,
    Uncontrolled,
}

/// Descriptive taxonomy fields. Carried along, never interpreted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackPlan {
    pub goal: Goal,
    #[serde(default)]
    pub steps: Vec<Phase>,
    #[serde(default)]
    pub triggers: Vec<Trigger>,
    #[serde(default)]
    pub launch_location: LaunchLocation,
    #[serde(default)]
    pub metadata: PlanMetadata,
}

impl AttackPlan {
    /// Single-phase plan running `ids` together.
    pub fn single<S: Into<String>>(goal: Goal, ids: impl IntoIterator<Item = S>) -> Self {
        Self {
            goal,
            steps: vec![Phase::new(ids)],
            triggers: Vec::new(),
            launch_location: LaunchLocation::App,
            metadata: PlanMetadata::default(),
        }
    }

    pub fn launched_from(mut self, location: LaunchLocation) -> Self {
        self.launch_location = location;
        self
    }

    /// Components this plan may switch on, through phases or start triggers.
    pub fn activated_components(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self
            .steps
            .iter()
            .flat_map(|p| p.activate.iter().map(String::as_str))
            .collect();
        for t in &self.triggers {
            if let Action::Start(ids) = &t.action {
                out.extend(ids.iter().map(String::as_str));
            }
        }
        out
    }

    /// Every component id mentioned anywhere in the plan.
    pub fn referenced_components(&self) -> BTreeSet<&str> {
        let mut out = self.activated_components();
        for t in &self.triggers {
            match &t.action {
                Action::Stop(ids)
                | Action::Scale {
                    components: ids, ..
                } => out.extend(ids.iter().map(String::as_str)),
                Action::Start(_) | Action::StopAll => {}
            }
        }
        out
    }

    pub fn validate(&self, registry: &Registry) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Goal::PartialDrain(delta) = self.goal {
            if !(delta > 0.0 && delta <= 100.0) {
                out.push(Violation::new(
                    "goal",
                    format!("partial_drain δ must be in (0, 100], got {delta}"),
                ));
            }
        }
        for id in self.referenced_components() {
            if registry.get(id).is_none() {
                out.push(Violation::new(
                    "components",
                    format!("unknown component `{id}`"),
                ));
            }
        }
        let phase_activates = self.steps.iter().any(|p| !p.activate.is_empty());
        let trigger_activates = self
            .triggers
            .iter()
            .any(|t| matches!(&t.action, Action::Start(ids) if !ids.is_empty()));
        if !phase_activates && !trigger_activates {
            out.push(Violation::new(
                "steps",
                "no activation: the plan neither has a phase nor a trigger that starts components",
            ));
        }
        for (i, phase) in self.steps.iter().enumerate() {
            if let Some(d) = phase.duration {
                if !(d > 0.0) || !d.is_finite() {
                    out.push(Violation::new(
                        format!("steps[{i}].duration"),
                        format!("must be positive, got {d}"),
                    ));
                }
            } else if phase.activate.is_empty() {
                out.push(Violation::new(
                    format!("steps[{i}]"),
                    "an empty phase needs a duration",
                ));
            }
        }
        for (i, trigger) in self.triggers.iter().enumerate() {
            match trigger.condition {
                Condition::BatteryBelow(x) | Condition::BatteryAbove(x) => {
                    if !(0.0..=100.0).contains(&x) {
                        out.push(Violation::new(
                            format!("triggers[{i}].condition"),
                            format!("threshold must be in [0, 100], got {x}"),
                        ));
                    }
                }
                Condition::ElapsedExceeds(m) => {
                    if !(m >= 0.0) || !m.is_finite() {
                        out.push(Violation::new(
                            format!("triggers[{i}].condition"),
                            format!("elapsed minutes must be non-negative, got {m}"),
                        ));
                    }
                }
                Condition::ChargingBecame(_) => {}
            }
            match &trigger.action {
                Action::Start(ids) | Action::Stop(ids) if ids.is_empty() => {
                    out.push(Violation::new(
                        format!("triggers[{i}].action"),
                        "component set must not be empty",
                    ));
                }
                Action::Scale { components, factor } => {
                    if components.is_empty() {
                        out.push(Violation::new(
                            format!("triggers[{i}].action"),
                            "component set must not be empty",
                        ));
                    }
                    if !(*factor > 0.0) || !factor.is_finite() {
                        out.push(Violation::new(
                            format!("triggers[{i}].action"),
                            format!("scale factor must be positive, got {factor}"),
                        ));
                    }
                }
                _ => {}
            }
        }
        out
    }

    pub fn ensure_valid(&self, registry: &Registry) -> Result<()> {
        let violations = self.validate(registry);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid("attack plan", violations))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses and validates a plan document.
pub fn parse_plan(document: &str, registry: &Registry) -> Result<AttackPlan> {
    let value: serde_json::Value =
        serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(goal) = value.get("goal") {
        let name = goal.as_str().or_else(|| {
            goal.as_object()
                .and_then(|o| o.keys().next().map(String::as_str))
        });
        if let Some(name @ ("degradation" | "battery_degradation")) = name {
            return Err(Error::UnsupportedGoal(name.to_owned()));
        }
    }
    let plan: AttackPlan =
        serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    plan.ensure_valid(registry)?;
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentVerdict {
    pub component: String,
    pub permission_ok: bool,
    pub setting_ok: bool,
    pub web_ok: bool,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub missing_permissions: BTreeSet<String>,
    pub missing_settings: BTreeSet<String>,
    /// Components a web launch cannot reach.
    pub not_web_accessible: BTreeSet<String>,
    pub components: Vec<ComponentVerdict>,
}

impl FeasibilityReport {
    pub fn summary(&self) -> String {
        if self.feasible {
            return "feasible".into();
        }
        let mut parts = Vec::new();
        if !self.missing_permissions.is_empty() {
            parts.push(format!(
                "missing permissions: {}",
                self.missing_permissions
                    .iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        if !self.missing_settings.is_empty() {
            parts.push(format!(
                "missing settings: {}",
                self.missing_settings
                    .iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        if !self.not_web_accessible.is_empty() {
            parts.push(format!(
                "not reachable from a web page: {}",
                self.not_web_accessible
                    .iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        parts.join("; ")
    }
}

/// Decides whether every component the plan can activate is usable on
/// `profile`. Web launches need no permissions but only reach web-accessible
/// components; every other launch location follows app permission rules,
/// where a granted permission also authorizes turning its setting on.
pub fn check_feasibility(
    plan: &AttackPlan,
    profile: &DeviceProfile,
    registry: &Registry,
) -> FeasibilityReport {
    let mut report = FeasibilityReport {
        feasible: true,
        missing_permissions: BTreeSet::new(),
        missing_settings: BTreeSet::new(),
        not_web_accessible: BTreeSet::new(),
        components: Vec::new(),
    };
    for id in plan.activated_components() {
        let Some(spec) = registry.get(id) else {
            report.not_web_accessible.insert(id.to_owned());
            report.components.push(ComponentVerdict {
                component: id.to_owned(),
                permission_ok: false,
                setting_ok: false,
                web_ok: false,
                feasible: false,
            });
            continue;
        };
        let verdict = if plan.launch_location == LaunchLocation::Web {
            if !spec.web_accessible {
                report.not_web_accessible.insert(id.to_owned());
            }
            ComponentVerdict {
                component: id.to_owned(),
                permission_ok: true,
                setting_ok: true,
                web_ok: spec.web_accessible,
                feasible: spec.web_accessible,
            }
        } else {
            let granted = spec
                .required_permission
                .as_ref()
                .is_some_and(|p| profile.granted_permissions.contains(p));
            let permission_ok = !spec.permission_required_even_if_setting_enabled || granted;
            let setting_ok = match &spec.required_setting {
                None => true,
                Some(s) => profile.enabled_settings.contains(s) || granted,
            };
            if !permission_ok {
                if let Some(p) = &spec.required_permission {
                    report.missing_permissions.insert(p.clone());
                }
            }
            if !setting_ok {
                if let Some(s) = &spec.required_setting {
                    report.missing_settings.insert(s.clone());
                }
            }
            ComponentVerdict {
                component: id.to_owned(),
                permission_ok,
                setting_ok,
                web_ok: true,
                feasible: permission_ok && setting_ok,
            }
        };
        report.components.push(verdict);
    }
    report.feasible = report.missing_permissions.is_empty()
        && report.missing_settings.is_empty()
        && report.not_web_accessible.is_empty();
    report
}

/// Detectability of a plan: its most detectable component bounds it.
pub fn stealth_score(plan: &AttackPlan, registry: &Registry) -> Result<u8> {
    let mut score: Option<u8> = None;
    for id in plan.activated_components() {
        let level = registry
            .require(id)?
            .stealth_level
            .ok_or_else(|| Error::StealthNotConfigured(id.to_owned()))?;
        score = Some(score.map_or(level, |s| s.min(level)));
    }
    score.ok_or_else(|| Error::InvalidArgument("plan activates no components".into()))
}

/// Net drain rate over a trace, percent/minute.
pub fn efficacy(trace: &SimulationTrace) -> Result<f64> {
    let minutes = trace.elapsed_minutes();
    if trace.samples.is_empty() || !(minutes > 0.0) {
        return Err(Error::InvalidArgument(
            "efficacy needs a trace with positive elapsed time".into(),
        ));
    }
    Ok((trace.initial_level() - trace.final_level()) / minutes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPlan {
    pub name: String,
    pub feasible: bool,
    pub efficacy: f64,
    pub minutes: f64,
    pub terminal: Terminal,
}

/// Orders plans feasible-first, then by descending efficacy of a
/// deterministic run, then by name.
pub fn rank_plans(
    plans: &[(String, AttackPlan)],
    profile: &DeviceProfile,
    model: &PowerModel,
    registry: &Registry,
) -> Result<Vec<RankedPlan>> {
    let options = SimOptions {
        mode: Mode::Deterministic,
        force: true,
        ..SimOptions::default()
    };
    let mut ranked = Vec::with_capacity(plans.len());
    for (name, plan) in plans {
        let feasible = check_feasibility(plan, profile, registry).feasible;
        let trace = simulate(plan, profile, model, registry, &options)?;
        ranked.push(RankedPlan {
            name: name.clone(),
            feasible,
            efficacy: efficacy(&trace).unwrap_or(0.0),
            minutes: trace.elapsed_minutes(),
            terminal: trace.terminal,
        });
    }
    ranked.sort_by(|a, b| {
        b.feasible
            .cmp(&a.feasible)
            .then_with(|| b.efficacy.total_cmp(&a.efficacy))
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(ranked)
}
