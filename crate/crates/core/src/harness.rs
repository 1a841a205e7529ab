//! Measurement protocol over the engine: repeated trials timed the way an
//! on-device logger would time them, per-trial statistics, drain curves,
//! and the reproduction report for the embedded dataset.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::calibration::{cross_validate, CrossValidationReport, SampleLabel};
use crate::dataset;
use crate::engine::{
    Mode, SamplerSet, SimOptions, Simulator, Terminal, DEFAULT_TIME_LIMIT_MINUTES,
};
use crate::error::{Error, Result};
use crate::model::{DeviceProfile, PowerModel, LEVEL_EPSILON};
use crate::plan::{AttackPlan, Goal};
use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOptions {
    pub trials: usize,
    pub seed: u64,
    /// Draw per-trial drain times; otherwise every trial uses mean rates.
    pub stochastic: bool,
    pub step_seconds: f64,
    pub cap_minutes: f64,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            trials: 10,
            seed: 0,
            stochastic: false,
            step_seconds: 1.0,
            cap_minutes: DEFAULT_TIME_LIMIT_MINUTES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub avg: f64,
    /// Sample standard deviation (n − 1); 0 for a single value.
    pub sd: f64,
    pub max: f64,
    pub min: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let avg = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        Some(Self { avg, sd, max, min })
    }
}

/// Outcome of repeated protocol trials for one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub id: String,
    /// Trials that reached the threshold.
    pub trials: usize,
    /// Per-trial times rounded to whole minutes.
    pub minutes: Vec<f64>,
    /// Per-trial times in seconds, as polled.
    pub seconds: Vec<f64>,
    pub non_terminating: usize,
    /// Summary of `minutes`.
    pub rounded: Option<Summary>,
    /// Summary of `seconds / 60`.
    pub raw: Option<Summary>,
}

impl TrialStats {
    fn from_seconds(id: String, seconds: Vec<f64>, non_terminating: usize) -> Self {
        let minutes: Vec<f64> = seconds.iter().map(|s| (s / 60.0).round()).collect();
        let raw_minutes: Vec<f64> = seconds.iter().map(|s| s / 60.0).collect();
        Self {
            id,
            trials: seconds.len(),
            rounded: Summary::of(&minutes),
            raw: Summary::of(&raw_minutes),
            minutes,
            seconds,
            non_terminating,
        }
    }
}

/// Writes `component,avg,sd,max,min` rows from the rounded summaries.
pub fn write_stats_csv<W: io::Write>(writer: W, stats: &[TrialStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["component", "avg", "sd", "max", "min"])?;
    for s in stats {
        match s.rounded {
            Some(sum) => w.write_record([
                s.id.clone(),
                format!("{:.1}", sum.avg),
                format!("{:.3}", sum.sd),
                format!("{}", sum.max),
                format!("{}", sum.min),
            ])?,
            None => w.write_record([s.id.as_str(), "", "", "", ""])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// One trial: seconds until the polled reading has dropped by the drain
/// threshold, or `None` if that never happens before the cap.
fn protocol_trial(mut sim: Simulator<'_>, model: &PowerModel, cap_seconds: f64) -> Option<f64> {
    let initial = f64::from(sim.state().reported_level);
    let mut next_poll = model.poll_interval;
    loop {
        if sim.state().elapsed >= cap_seconds - LEVEL_EPSILON {
            return None;
        }
        sim.advance();
        let elapsed = sim.state().elapsed;
        if elapsed + LEVEL_EPSILON >= next_poll {
            next_poll += model.poll_interval;
            if initial - f64::from(sim.state().reported_level) >= model.drain_threshold {
                return Some(elapsed);
            }
        }
        if matches!(
            sim.terminal(),
            Some(Terminal::BatteryDead | Terminal::PlanExhausted)
        ) {
            return None;
        }
    }
}

/// Runs `options.trials` trials of the drain-threshold protocol. Trial `i`
/// uses seed `options.seed + i`.
pub fn run_protocol(
    id: &str,
    plan: &AttackPlan,
    profile: &DeviceProfile,
    model: &PowerModel,
    registry: &Registry,
    options: &ProtocolOptions,
) -> Result<TrialStats> {
    if options.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if !(options.cap_minutes > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time cap must be positive, got {} min",
            options.cap_minutes
        )));
    }
    let sim_options = SimOptions {
        mode: Mode::Deterministic,
        step_seconds: options.step_seconds,
        time_limit_minutes: options.cap_minutes,
        force: true,
        charging_schedule: Vec::new(),
    };
    let samplers = if options.stochastic {
        Some(SamplerSet::for_plan(plan, registry)?)
    } else {
        None
    };
    let cap_seconds = options.cap_minutes * 60.0;
    let mut seconds = Vec::with_capacity(options.trials);
    let mut non_terminating = 0;
    for i in 0..options.trials {
        let rates = match &samplers {
            Some(s) => s.draw_rates(registry, options.seed.wrapping_add(i as u64)),
            None => registry.iter().map(|c| c.mean_rate()).collect(),
        };
        let sim = Simulator::with_rates(plan, profile, model, registry, &sim_options, rates)?;
        match protocol_trial(sim, model, cap_seconds) {
            Some(t) => seconds.push(t),
            None => non_terminating += 1,
        }
    }
    Ok(TrialStats::from_seconds(
        id.to_owned(),
        seconds,
        non_terminating,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub level: f64,
    pub elapsed_min: f64,
    /// Minutes since the previous checkpoint.
    pub delta_min: f64,
}

/// Deterministic run recording the time at which each `checkpoint`
/// percentage points of drain is first reached, down to 0.
pub fn drain_curve(
    plan: &AttackPlan,
    profile: &DeviceProfile,
    model: &PowerModel,
    registry: &Registry,
    checkpoint: f64,
    options: &SimOptions,
) -> Result<Vec<CurvePoint>> {
    if !(checkpoint > 0.0) || !checkpoint.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "checkpoint must be positive, got {checkpoint}"
        )));
    }
    let mut plan = plan.clone();
    plan.goal = Goal::FullDrain;
    let options = SimOptions {
        mode: Mode::Deterministic,
        ..options.clone()
    };
    let mut sim = Simulator::new(&plan, profile, model, registry, &options)?;
    let start = sim.state().level;
    let mut points = Vec::new();
    let mut k = 1u32;
    let mut last = 0.0;
    let target = |k: u32| (start - f64::from(k) * checkpoint).max(0.0);
    loop {
        while sim.state().level <= target(k) + LEVEL_EPSILON {
            let elapsed = sim.state().elapsed / 60.0;
            points.push(CurvePoint {
                level: target(k),
                elapsed_min: elapsed,
                delta_min: elapsed - last,
            });
            if target(k) <= 0.0 {
                return Ok(points);
            }
            last = elapsed;
            k += 1;
        }
        if let Some(t) = sim.terminal() {
            return Err(Error::NonTerminating {
                what: format!(
                    "drain curve ended with {t:?} at level {:.3}",
                    sim.state().level
                ),
                cap_minutes: options.time_limit_minutes,
            });
        }
        sim.advance();
    }
}

pub fn write_curve_csv<W: io::Write>(writer: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["level", "elapsed_min", "delta_min"])?;
    for p in points {
        w.write_record([
            p.level.to_string(),
            p.elapsed_min.to_string(),
            p.delta_min.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCheck {
    pub component: String,
    pub published_minutes: f64,
    pub simulated_minutes: f64,
    pub difference_seconds: f64,
    pub within_poll_interval: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionReport {
    pub dataset_version: String,
    pub label: SampleLabel,
    pub table: Vec<RowCheck>,
    pub table_matches: bool,
    pub scenarios: CrossValidationReport,
}

impl ReproductionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Side-by-side text rendering.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "component 5% drain (min)  published  simulated  diff(s)"
        );
        for row in &self.table {
            let _ = writeln!(
                out,
                "{:<26} {:>6.1} {:>10.3} {:>8.1}{}",
                row.component,
                row.published_minutes,
                row.simulated_minutes,
                row.difference_seconds,
                if row.within_poll_interval {
                    ""
                } else {
                    "  MISMATCH"
                }
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "scenario                                    label     published  simulated   error"
        );
        for e in &self.scenarios.entries {
            let label = match e.label {
                SampleLabel::InSample => "in_sample",
                SampleLabel::HeldOut => "held_out",
            };
            match (e.predicted_minutes, e.relative_error) {
                (Some(p), Some(err)) => {
                    let _ = writeln!(
                        out,
                        "{:<43} {:<9} {:>6.1} {:>10.2} {:>6.1}%",
                        e.scenario,
                        label,
                        e.expected_minutes,
                        p,
                        err * 100.0
                    );
                }
                _ => {
                    let _ = writeln!(
                        out,
                        "{:<43} {:<9} {:>6.1}    skipped: {}",
                        e.scenario,
                        label,
                        e.expected_minutes,
                        e.skipped.as_deref().unwrap_or("")
                    );
                }
            }
        }
        out
    }
}

/// Runs the deterministic protocol for every tabulated component and
/// cross-validates the fitted model on every published scenario.
pub fn reproduce_published(registry: &Registry, model: &PowerModel) -> Result<ReproductionReport> {
    let profile = dataset::full_access_profile(registry);
    let options = ProtocolOptions {
        trials: 1,
        ..ProtocolOptions::default()
    };
    let mut table = Vec::new();
    for record in dataset::component_records() {
        if !dataset::TABLE_COMPONENTS.contains(&record.component.as_str()) {
            continue;
        }
        let plan = AttackPlan::single(
            Goal::PartialDrain(model.drain_threshold),
            [record.component.as_str()],
        );
        let stats = run_protocol(
            &record.component,
            &plan,
            &profile,
            model,
            registry,
            &options,
        )?;
        let seconds = *stats.seconds.first().ok_or_else(|| Error::NonTerminating {
            what: format!("protocol for `{}`", record.component),
            cap_minutes: options.cap_minutes,
        })?;
        let published_seconds = record.avg * 60.0;
        let difference_seconds = seconds - published_seconds;
        table.push(RowCheck {
            component: record.component.clone(),
            published_minutes: record.avg,
            simulated_minutes: seconds / 60.0,
            difference_seconds,
            within_poll_interval: difference_seconds.abs() <= model.poll_interval + LEVEL_EPSILON,
        });
    }
    let scenarios = cross_validate(model, registry, &dataset::published_scenarios())?;
    Ok(ReproductionReport {
        dataset_version: dataset::DATASET_VERSION.to_owned(),
        label: SampleLabel::InSample,
        table_matches: table.iter().all(|r| r.within_poll_interval),
        table,
        scenarios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{Action, Condition, Trigger};
    use approx::assert_relative_eq;

    fn setup() -> (Registry, PowerModel, DeviceProfile) {
        let reg = dataset::published_registry();
        let model = dataset::fit_published_model(&reg).unwrap().model;
        let profile = dataset::full_access_profile(&reg);
        (reg, model, profile)
    }

    #[test]
    fn brightness_single_trial() {
        let (reg, model, profile) = setup();
        let plan = AttackPlan::single(Goal::PartialDrain(5.0), ["brightness"]);
        let opts = ProtocolOptions {
            trials: 1,
            ..ProtocolOptions::default()
        };
        let stats = run_protocol("brightness", &plan, &profile, &model, &reg, &opts).unwrap();
        assert_eq!(stats.seconds, vec![444.0]);
        assert_eq!(stats.minutes, vec![7.0]);
        assert_eq!(stats.trials, 1);
        assert_eq!(stats.rounded.unwrap().sd, 0.0);
    }

    #[test]
    fn summary_matches_two_pass_reference() {
        let values = [7.0, 8.0, 6.0, 9.0, 7.0, 7.0, 10.0, 6.0, 7.0, 7.0];
        let s = Summary::of(&values).unwrap();
        let mean = 74.0 / 10.0;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        assert_relative_eq!(s.avg, mean, epsilon = 1e-12);
        assert_relative_eq!(s.sd, (ss / 9.0).sqrt(), epsilon = 1e-12);
        assert_eq!((s.max, s.min), (10.0, 6.0));
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn zero_rate_plan_never_terminates() {
        let (reg, model, profile) = setup();
        let mut plan = AttackPlan::single(Goal::EventControlled, Vec::<String>::new());
        plan.steps.clear();
        plan.triggers = vec![Trigger {
            condition: Condition::ChargingBecame(true),
            action: Action::Start(["cpu".to_owned()].into()),
            once: false,
        }];
        let opts = ProtocolOptions {
            trials: 2,
            cap_minutes: 60.0,
            ..ProtocolOptions::default()
        };
        let stats = run_protocol("idle", &plan, &profile, &model, &reg, &opts).unwrap();
        assert_eq!(stats.non_terminating, 2);
        assert_eq!(stats.trials, 0);
        assert!(stats.rounded.is_none() && stats.raw.is_none());
    }

    #[test]
    fn zero_trials_is_an_error() {
        let (reg, model, profile) = setup();
        let plan = AttackPlan::single(Goal::PartialDrain(5.0), ["cpu"]);
        let opts = ProtocolOptions {
            trials: 0,
            ..ProtocolOptions::default()
        };
        assert!(run_protocol("cpu", &plan, &profile, &model, &reg, &opts).is_err());
    }

    #[test]
    fn seeded_trials_reproduce() {
        let (reg, model, profile) = setup();
        let plan = AttackPlan::single(Goal::PartialDrain(5.0), ["gps"]);
        let opts = ProtocolOptions {
            trials: 20,
            seed: 9,
            stochastic: true,
            ..ProtocolOptions::default()
        };
        let a = run_protocol("gps", &plan, &profile, &model, &reg, &opts).unwrap();
        let b = run_protocol("gps", &plan, &profile, &model, &reg, &opts).unwrap();
        assert_eq!(a, b);
        let s = a.raw.unwrap();
        assert!(s.min >= 15.0 && s.max <= 19.0 + 2.0 / 60.0);
    }

    #[test]
    fn curve_checkpoints() {
        let (reg, model, profile) = setup();
        let plan = AttackPlan::single(Goal::FullDrain, dataset::TRIO);
        let opts = SimOptions::default();
        let curve = drain_curve(&plan, &profile, &model, &reg, 2.0, &opts).unwrap();
        assert_eq!(curve.len(), 50);
        assert_eq!(curve.last().unwrap().level, 0.0);
        assert_relative_eq!(curve.last().unwrap().elapsed_min, 98.5, epsilon = 0.1);

        let whole = drain_curve(&plan, &profile, &model, &reg, 100.0, &opts).unwrap();
        assert_eq!(whole.len(), 1);
        assert_eq!(whole[0].elapsed_min, curve.last().unwrap().elapsed_min);
        assert!(drain_curve(&plan, &profile, &model, &reg, 0.0, &opts).is_err());
    }

    #[test]
    fn stats_csv_schema() {
        let stats = TrialStats::from_seconds("cpu".into(), vec![540.0, 600.0], 0);
        let mut out = Vec::new();
        write_stats_csv(&mut out, &[stats]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "component,avg,sd,max,min\ncpu,9.5,0.707,10,9\n");
    }
}
