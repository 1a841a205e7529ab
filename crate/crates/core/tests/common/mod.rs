//! Strategies and property checks shared by the property suite and the
//! acceptance runner.

#![allow(dead_code)]

use std::collections::BTreeSet;

use drainsim::dataset;
use drainsim::engine::{simulate, Mode, SimOptions, Terminal};
use drainsim::model::{DeviceProfile, PowerModel, COMPONENT_DRAIN_BASIS_PCT, LEVEL_EPSILON};
use drainsim::plan::{
    check_feasibility, parse_plan, rank_plans, stealth_score, Action, AttackPlan, Condition, Goal,
    LaunchLocation, Phase, Trigger,
};
use drainsim::registry::Registry;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

pub fn registry() -> Registry {
    dataset::published_registry()
}

pub fn fitted_model(registry: &Registry) -> PowerModel {
    dataset::fit_published_model(registry).unwrap().model
}

pub fn component_set(min: usize, max: usize) -> impl Strategy<Value = Vec<String>> {
    proptest::sample::subsequence(dataset::TABLE_COMPONENTS.to_vec(), min..=max)
        .prop_map(|v| v.into_iter().map(str::to_owned).collect())
}

#[derive(Debug, Clone)]
pub struct DrainCase {
    pub components: Vec<String>,
    pub delta: f64,
    pub initial: f64,
    pub charging: bool,
    pub seed: u64,
}

pub fn drain_case() -> impl Strategy<Value = DrainCase> {
    (
        component_set(1, 4),
        1.0..25.0f64,
        30.0..100.0f64,
        any::<bool>(),
        any::<u64>(),
    )
        .prop_map(|(components, delta, initial, charging, seed)| DrainCase {
            components,
            delta,
            initial,
            charging,
            seed,
        })
}

fn run(
    case: &DrainCase,
    model: &PowerModel,
    registry: &Registry,
    options: &SimOptions,
) -> drainsim::SimulationTrace {
    let plan = AttackPlan::single(Goal::PartialDrain(case.delta), case.components.clone());
    let profile = dataset::full_access_profile(registry)
        .initial_battery(case.initial)
        .charging(case.charging);
    simulate(&plan, &profile, model, registry, options).unwrap()
}

/// Without a charger the level never rises.
pub fn check_monotone_drain(case: &DrainCase) -> Check {
    let reg = registry();
    let model = fitted_model(&reg);
    let case = DrainCase {
        charging: false,
        ..case.clone()
    };
    let trace = run(&case, &model, &reg, &SimOptions::default());
    for w in trace.samples.windows(2) {
        prop_assert!(w[1].level <= w[0].level, "{} -> {}", w[0].level, w[1].level);
    }
    Ok(())
}

/// Adding a component to a set of two or more never lengthens the time to
/// a partial-drain goal (both sides share the default η).
pub fn check_adding_component_is_faster(base: &[String], extra: &str, delta: f64) -> Check {
    prop_assume!(base.len() >= 2 && !base.iter().any(|c| c == extra));
    let reg = registry();
    let model = fitted_model(&reg);
    let profile = dataset::full_access_profile(&reg);
    let options = SimOptions::default();
    let time = |ids: Vec<String>| {
        let plan = AttackPlan::single(Goal::PartialDrain(delta), ids);
        simulate(&plan, &profile, &model, &reg, &options)
            .unwrap()
            .elapsed_seconds()
    };
    let mut bigger = base.to_vec();
    bigger.push(extra.to_owned());
    let (t_base, t_bigger) = (time(base.to_vec()), time(bigger));
    prop_assert!(t_bigger <= t_base, "{t_bigger} > {t_base}");
    Ok(())
}

/// Level stays in [0, 100] and the reading is the level rounded up.
pub fn check_battery_bounds(case: &DrainCase, supply: f64) -> Check {
    let reg = registry();
    let mut model = fitted_model(&reg);
    model.charging_supply = supply;
    let options = SimOptions {
        time_limit_minutes: 60.0,
        ..SimOptions::default()
    };
    let trace = run(case, &model, &reg, &options);
    for s in &trace.samples {
        prop_assert!((0.0..=100.0).contains(&s.level), "level {}", s.level);
        let r = f64::from(s.reported_level);
        prop_assert!(r <= 100.0);
        prop_assert!(
            s.level <= r + LEVEL_EPSILON && r - 1.0 < s.level + LEVEL_EPSILON,
            "{} vs {r}",
            s.level
        );
    }
    Ok(())
}

/// Same seed, same trace.
pub fn check_determinism(case: &DrainCase) -> Check {
    let reg = registry();
    let model = fitted_model(&reg);
    let options = SimOptions {
        mode: Mode::Stochastic { seed: case.seed },
        ..SimOptions::default()
    };
    let a = run(case, &model, &reg, &options);
    let b = run(case, &model, &reg, &options);
    prop_assert_eq!(&a, &b);
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    a.write_csv(&mut csv_a).unwrap();
    b.write_csv(&mut csv_b).unwrap();
    prop_assert_eq!(csv_a, csv_b);
    Ok(())
}

/// Halving the step moves the time to goal by at most one original step.
pub fn check_step_robustness(case: &DrainCase, step: f64) -> Check {
    let reg = registry();
    let model = fitted_model(&reg);
    let case = DrainCase {
        charging: false,
        ..case.clone()
    };
    let coarse = SimOptions {
        step_seconds: step,
        ..SimOptions::default()
    };
    let fine = SimOptions {
        step_seconds: step / 2.0,
        ..SimOptions::default()
    };
    let a = run(&case, &model, &reg, &coarse);
    let b = run(&case, &model, &reg, &fine);
    prop_assert_eq!(a.terminal, Terminal::GoalMet);
    prop_assert_eq!(b.terminal, Terminal::GoalMet);
    let diff = (a.elapsed_seconds() - b.elapsed_seconds()).abs();
    prop_assert!(
        diff <= step + 1e-9,
        "{} vs {}",
        a.elapsed_seconds(),
        b.elapsed_seconds()
    );
    Ok(())
}

/// Adding components never makes a plan stealthier.
pub fn check_stealth_monotone(levels: &[u8], base: &[String], extra: &[String]) -> Check {
    let mut reg = registry();
    for (id, level) in dataset::TABLE_COMPONENTS.iter().zip(levels) {
        reg.set_stealth_level(id, Some(*level)).unwrap();
    }
    let small = AttackPlan::single(Goal::FullDrain, base.to_vec());
    let big = AttackPlan::single(
        Goal::FullDrain,
        base.iter().chain(extra).cloned().collect::<Vec<_>>(),
    );
    let s_small = stealth_score(&small, &reg).unwrap();
    let s_big = stealth_score(&big, &reg).unwrap();
    prop_assert!(s_big <= s_small);
    let expected = base
        .iter()
        .map(|id| reg.get(id).unwrap().stealth_level.unwrap())
        .min()
        .unwrap();
    prop_assert_eq!(s_small, expected);
    Ok(())
}

pub fn grant_set() -> impl Strategy<Value = (BTreeSet<String>, BTreeSet<String>)> {
    let reg = registry();
    let perms: Vec<String> = reg
        .iter()
        .filter_map(|c| c.required_permission.clone())
        .collect();
    let settings: Vec<String> = reg
        .iter()
        .filter_map(|c| c.required_setting.clone())
        .collect();
    let np = perms.len();
    let ns = settings.len();
    (
        proptest::sample::subsequence(perms, 0..=np),
        proptest::sample::subsequence(settings, 0..=ns),
    )
        .prop_map(|(p, s)| (p.into_iter().collect(), s.into_iter().collect()))
}

/// Granting more never turns a feasible plan infeasible.
pub fn check_feasibility_monotone(
    components: &[String],
    web: bool,
    small: &(BTreeSet<String>, BTreeSet<String>),
    more: &(BTreeSet<String>, BTreeSet<String>),
) -> Check {
    let reg = registry();
    let location = if web {
        LaunchLocation::Web
    } else {
        LaunchLocation::App
    };
    let plan = AttackPlan::single(Goal::FullDrain, components.to_vec()).launched_from(location);
    let p_small = DeviceProfile::default()
        .with_permissions(small.0.iter().cloned())
        .with_settings(small.1.iter().cloned());
    let p_big = p_small
        .clone()
        .with_permissions(more.0.iter().cloned())
        .with_settings(more.1.iter().cloned());
    let r_small = check_feasibility(&plan, &p_small, &reg);
    let r_big = check_feasibility(&plan, &p_big, &reg);
    if r_small.feasible {
        prop_assert!(r_big.feasible);
    }
    prop_assert!(r_big
        .missing_permissions
        .is_subset(&r_small.missing_permissions));
    prop_assert!(r_big.missing_settings.is_subset(&r_small.missing_settings));
    prop_assert_eq!(
        r_small.feasible,
        r_small.missing_permissions.is_empty()
            && r_small.missing_settings.is_empty()
            && r_small.not_web_accessible.is_empty()
    );
    Ok(())
}

fn id_set(ids: Vec<String>) -> BTreeSet<String> {
    ids.into_iter().collect()
}

pub fn plan_strategy() -> impl Strategy<Value = AttackPlan> {
    let goal = prop_oneof![
        Just(Goal::FullDrain),
        Just(Goal::EventControlled),
        (0.5..100.0f64).prop_map(Goal::PartialDrain),
    ];
    let phase =
        (component_set(1, 3), proptest::option::of(0.5..120.0f64)).prop_map(|(ids, d)| Phase {
            activate: id_set(ids),
            duration: d,
        });
    let condition = prop_oneof![
        (0.0..100.0f64).prop_map(Condition::BatteryBelow),
        (0.0..100.0f64).prop_map(Condition::BatteryAbove),
        any::<bool>().prop_map(Condition::ChargingBecame),
        (0.0..600.0f64).prop_map(Condition::ElapsedExceeds),
    ];
    let action = prop_oneof![
        component_set(1, 3).prop_map(|v| Action::Start(id_set(v))),
        component_set(1, 3).prop_map(|v| Action::Stop(id_set(v))),
        Just(Action::StopAll),
        (component_set(1, 2), 0.1..4.0f64).prop_map(|(v, factor)| Action::Scale {
            components: id_set(v),
            factor
        }),
    ];
    let trigger =
        (condition, action, any::<bool>()).prop_map(|(condition, action, once)| Trigger {
            condition,
            action,
            once,
        });
    let location = prop_oneof![
        Just(LaunchLocation::App),
        Just(LaunchLocation::Web),
        Just(LaunchLocation::Proximity),
        Just(LaunchLocation::Remote),
    ];
    (
        goal,
        proptest::collection::vec(phase, 1..4),
        proptest::collection::vec(trigger, 0..4),
        location,
    )
        .prop_map(|(goal, steps, triggers, launch_location)| AttackPlan {
            goal,
            steps,
            triggers,
            launch_location,
            metadata: Default::default(),
        })
}

/// Serializing and reparsing a valid plan gives the same plan.
pub fn check_round_trip(plan: &AttackPlan) -> Check {
    let reg = registry();
    let json = plan.to_json().unwrap();
    let back = parse_plan(&json, &reg).map_err(|e| TestCaseError::fail(format!("{e}: {json}")))?;
    prop_assert_eq!(&back, plan);
    prop_assert_eq!(back.to_json().unwrap(), json);
    Ok(())
}

/// Total drain equals the sum of per-step net drains, recomputed from the
/// trace with rates derived straight from the component table.
pub fn check_energy_balance(case: &DrainCase, supply: f64) -> Check {
    let reg = registry();
    let mut model = fitted_model(&reg);
    model.charging_supply = supply;
    let case = DrainCase {
        initial: case.initial.min(95.0),
        ..case.clone()
    };
    let trace = run(
        &case,
        &model,
        &reg,
        &SimOptions {
            time_limit_minutes: 90.0,
            ..SimOptions::default()
        },
    );
    prop_assume!(trace
        .samples
        .iter()
        .skip(1)
        .all(|s| s.level > 0.0 && s.level < 100.0));
    let dt = trace.step_seconds;
    let mut drained = 0.0;
    for s in &trace.samples[..trace.samples.len() - 1] {
        let mut gross = 0.0;
        for id in &s.active {
            let spec = reg.get(id).unwrap();
            let dim = if spec.display_class && s.level <= model.dim_threshold + LEVEL_EPSILON {
                model.dim_factor_phi
            } else {
                1.0
            };
            gross += COMPONENT_DRAIN_BASIS_PCT / spec.drain_time_mean * dim;
        }
        let eta = if s.active.len() >= 2 {
            model.interference_eta
        } else {
            1.0
        };
        let gross = if s.active.is_empty() {
            model.baseline_rate
        } else {
            eta * gross
        };
        let net = gross - if s.charging { supply } else { 0.0 };
        drained += net * dt / 60.0;
    }
    let actual = trace.initial_level() - trace.final_level();
    let scale = actual.abs().max(drained.abs()).max(1e-12);
    prop_assert!(
        (actual - drained).abs() / scale <= 1e-9,
        "{actual} vs {drained}"
    );
    Ok(())
}

/// Stretching every drain time by the same factor keeps the ranking.
/// Step quantization can swap plans whose efficacies are within a
/// fraction of a percent, so only clearly separated pairs are compared.
pub fn check_rank_time_scaling(plans: &[Vec<String>], factor: f64) -> Check {
    let reg = registry();
    let model = fitted_model(&reg);
    let profile = dataset::full_access_profile(&reg);
    let named: Vec<(String, AttackPlan)> = plans
        .iter()
        .enumerate()
        .map(|(i, ids)| {
            (
                format!("plan{i}"),
                AttackPlan::single(Goal::PartialDrain(10.0), ids.clone()),
            )
        })
        .collect();
    let base = rank_plans(&named, &profile, &model, &reg).unwrap();
    let scaled = rank_plans(&named, &profile, &model, &reg.with_time_scale(factor)).unwrap();
    let position = |name: &str| scaled.iter().position(|r| r.name == name).unwrap();
    for (i, a) in base.iter().enumerate() {
        for b in &base[i + 1..] {
            if a.efficacy > b.efficacy * 1.01 {
                prop_assert!(
                    position(&a.name) < position(&b.name),
                    "{} vs {}",
                    a.name,
                    b.name
                );
            }
        }
    }
    for a in &base {
        let expected = a.efficacy / factor;
        let got = scaled[position(&a.name)].efficacy;
        prop_assert!(
            (got - expected).abs() <= 0.01 * expected,
            "{got} vs {expected}"
        );
    }
    Ok(())
}
