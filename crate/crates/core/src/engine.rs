//! Discrete-time simulation of an attack plan on one device.
//!
//! Each step drains `net · Δt` where the gross rate is the interference-
//! scaled sum of the active components' rates (display-class components
//! dimmed below the dim threshold) and charging subtracts a constant
//! supply. Triggers observe the quantized battery reading; goals use the
//! continuous level.

use std::collections::BTreeSet;
use std::io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BatteryState, DeviceProfile, PowerModel, Validate, COMPONENT_DRAIN_BASIS_PCT, LEVEL_EPSILON,
};
use crate::plan::{check_feasibility, Action, AttackPlan, Condition, Goal, Trigger};
use crate::registry::Registry;
use crate::sampling::DrainTimeSampler;

pub const DEFAULT_STEP_SECONDS: f64 = 1.0;
pub const DEFAULT_TIME_LIMIT_MINUTES: f64 = 24.0 * 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Deterministic,
    Stochastic { seed: u64 },
}

/// Plugs or unplugs the charger at a point in simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingEvent {
    pub at_minutes: f64,
    pub charging: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub mode: Mode,
    pub step_seconds: f64,
    pub time_limit_minutes: f64,
    /// Run even when the plan is infeasible on the profile.
    pub force: bool,
    pub charging_schedule: Vec<ChargingEvent>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Deterministic,
            step_seconds: DEFAULT_STEP_SECONDS,
            time_limit_minutes: DEFAULT_TIME_LIMIT_MINUTES,
            force: false,
            charging_schedule: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    GoalMet,
    BatteryDead,
    TimeLimit,
    PlanExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t_seconds: f64,
    pub level: f64,
    pub reported_level: u32,
    pub active: Vec<String>,
    pub charging: bool,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub step_seconds: f64,
    pub samples: Vec<Sample>,
    pub terminal: Terminal,
}

impl SimulationTrace {
    pub fn initial_level(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.level)
    }

    pub fn final_level(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.level)
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t_seconds)
    }

    pub fn elapsed_minutes(&self) -> f64 {
        self.elapsed_seconds() / 60.0
    }

    /// CSV with header `t_seconds,level,reported_level,active,charging,event`.
    /// Multiple events at one instant are `;`-joined.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "t_seconds",
            "level",
            "reported_level",
            "active",
            "charging",
            "event",
        ])?;
        for s in &self.samples {
            w.write_record([
                s.t_seconds.to_string(),
                s.level.to_string(),
                s.reported_level.to_string(),
                s.active.join("+"),
                s.charging.to_string(),
                s.events.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Active components by registry index, with each component's accumulated
/// rate multiplier from scale actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveComponents {
    members: BTreeSet<usize>,
    scale: Vec<f64>,
}

impl ActiveComponents {
    pub fn new(registry_len: usize) -> Self {
        Self {
            members: BTreeSet::new(),
            scale: vec![1.0; registry_len],
        }
    }

    pub fn from_ids<S: AsRef<str>>(ids: &[S], registry: &Registry) -> Result<Self> {
        let mut active = Self::new(registry.len());
        for id in ids {
            let i = registry
                .index_of(id.as_ref())
                .ok_or_else(|| Error::UnknownComponent(id.as_ref().to_owned()))?;
            active.members.insert(i);
        }
        Ok(active)
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.contains(&index)
    }

    pub fn scale_of(&self, index: usize) -> f64 {
        self.scale[index]
    }

    /// Sorted ids of the active components.
    pub fn ids(&self, registry: &Registry) -> Vec<String> {
        let mut ids: Vec<String> = self
            .members
            .iter()
            .map(|&i| registry.by_index(i).id.clone())
            .collect();
        ids.sort();
        ids
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CompiledAction {
    Start(Vec<usize>),
    Stop(Vec<usize>),
    StopAll,
    Scale(Vec<usize>, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiredEvent {
    pub trigger: usize,
    pub description: String,
    pub stop_all: bool,
}

/// Trigger list plus the memory needed for edge detection and `once`.
#[derive(Debug, Clone)]
pub struct TriggerEvaluator {
    triggers: Vec<(Condition, CompiledAction, bool, String)>,
    fired: Vec<bool>,
    was_true: Vec<bool>,
    last_charging: bool,
}

fn resolve(ids: &BTreeSet<String>, registry: &Registry) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| {
            registry
                .index_of(id)
                .ok_or_else(|| Error::UnknownComponent(id.clone()))
        })
        .collect()
}

fn describe(condition: &Condition, action: &Action) -> String {
    let cond = match condition {
        Condition::BatteryBelow(x) => format!("battery_below({x})"),
        Condition::BatteryAbove(x) => format!("battery_above({x})"),
        Condition::ChargingBecame(b) => format!("charging_became({b})"),
        Condition::ElapsedExceeds(m) => format!("elapsed_exceeds({m})"),
    };
    let join = |ids: &BTreeSet<String>| ids.iter().cloned().collect::<Vec<_>>().join("+");
    let act = match action {
        Action::Start(ids) => format!("start({})", join(ids)),
        Action::Stop(ids) => format!("stop({})", join(ids)),
        Action::StopAll => "stop_all".to_owned(),
        Action::Scale { components, factor } => format!("scale({},{factor})", join(components)),
    };
    format!("{cond}->{act}")
}

impl TriggerEvaluator {
    pub fn new(triggers: &[Trigger], registry: &Registry, initial_charging: bool) -> Result<Self> {
        let mut compiled = Vec::with_capacity(triggers.len());
        for t in triggers {
            let action = match &t.action {
                Action::Start(ids) => CompiledAction::Start(resolve(ids, registry)?),
                Action::Stop(ids) => CompiledAction::Stop(resolve(ids, registry)?),
                Action::StopAll => CompiledAction::StopAll,
                Action::Scale { components, factor } => {
                    CompiledAction::Scale(resolve(components, registry)?, *factor)
                }
            };
            compiled.push((
                t.condition,
                action,
                t.once,
                describe(&t.condition, &t.action),
            ));
        }
        let n = compiled.len();
        Ok(Self {
            triggers: compiled,
            fired: vec![false; n],
            was_true: vec![false; n],
            last_charging: initial_charging,
        })
    }

    /// Whether some trigger can still switch components on.
    pub fn has_armed_start(&self) -> bool {
        self.triggers
            .iter()
            .zip(&self.fired)
            .any(|((_, action, once, _), &fired)| {
                matches!(action, CompiledAction::Start(_)) && !(*once && fired)
            })
    }

    /// Tests every trigger in declaration order against the observable
    /// state and applies the actions of those that fire. Level conditions
    /// fire on the transition into truth; `once` triggers never refire.
    pub fn evaluate(
        &mut self,
        state: &BatteryState,
        active: &mut ActiveComponents,
    ) -> Vec<FiredEvent> {
        let reported = f64::from(state.reported_level);
        let flipped_to = (state.charging != self.last_charging).then_some(state.charging);
        self.last_charging = state.charging;
        let mut events = Vec::new();
        for (i, (condition, action, once, label)) in self.triggers.iter().enumerate() {
            let fires = match *condition {
                Condition::ChargingBecame(target) => flipped_to == Some(target),
                level_or_time => {
                    let now = match level_or_time {
                        Condition::BatteryBelow(x) => reported < x,
                        Condition::BatteryAbove(x) => reported > x,
                        Condition::ElapsedExceeds(m) => state.elapsed > m * 60.0,
                        Condition::ChargingBecame(_) => unreachable!(),
                    };
                    let edge = now && !self.was_true[i];
                    self.was_true[i] = now;
                    edge
                }
            };
            if !fires || (*once && self.fired[i]) {
                continue;
            }
            self.fired[i] = true;
            let mut stop_all = false;
            match action {
                CompiledAction::Start(ids) => active.members.extend(ids.iter().copied()),
                CompiledAction::Stop(ids) => {
                    for id in ids {
                        active.members.remove(id);
                    }
                }
                CompiledAction::StopAll => {
                    active.members.clear();
                    stop_all = true;
                }
                CompiledAction::Scale(ids, factor) => {
                    for &id in ids {
                        active.scale[id] *= factor;
                    }
                }
            }
            events.push(FiredEvent {
                trigger: i,
                description: format!("trigger[{i}]:{label}"),
                stop_all,
            });
        }
        events
    }
}

/// One-shot form of [`TriggerEvaluator::evaluate`] returning the new active set.
pub fn evaluate_triggers(
    evaluator: &mut TriggerEvaluator,
    state: &BatteryState,
    active: &ActiveComponents,
) -> (ActiveComponents, Vec<FiredEvent>) {
    let mut next = active.clone();
    let events = evaluator.evaluate(state, &mut next);
    (next, events)
}

fn gross_rate_indexed(
    level: f64,
    active: &ActiveComponents,
    rates: &[f64],
    eta: f64,
    model: &PowerModel,
    registry: &Registry,
) -> f64 {
    if active.is_empty() {
        return model.baseline_rate;
    }
    let dimmed = level <= model.dim_threshold + LEVEL_EPSILON;
    let sum: f64 = active
        .members
        .iter()
        .map(|&i| {
            let dim = if dimmed && registry.by_index(i).display_class {
                model.dim_factor_phi
            } else {
                1.0
            };
            rates[i] * active.scale[i] * dim
        })
        .sum();
    eta * sum
}

fn mean_rates(registry: &Registry) -> Vec<f64> {
    registry.iter().map(|c| c.mean_rate()).collect()
}

fn eta_of(active: &ActiveComponents, model: &PowerModel, registry: &Registry) -> f64 {
    let ids: Vec<&str> = active
        .members
        .iter()
        .map(|&i| registry.by_index(i).id.as_str())
        .collect();
    model.eta_for(&ids)
}

/// Gross drain rate (percent/minute) of `active` at `level` using mean rates.
pub fn gross_rate<S: AsRef<str>>(
    level: f64,
    active: &[S],
    model: &PowerModel,
    registry: &Registry,
) -> Result<f64> {
    let active = ActiveComponents::from_ids(active, registry)?;
    let eta = eta_of(&active, model, registry);
    Ok(gross_rate_indexed(
        level,
        &active,
        &mean_rates(registry),
        eta,
        model,
        registry,
    ))
}

/// Advances a battery state by `dt_seconds` with `active` running at mean rates.
pub fn step<S: AsRef<str>>(
    state: &BatteryState,
    active: &[S],
    model: &PowerModel,
    registry: &Registry,
    dt_seconds: f64,
) -> Result<BatteryState> {
    let gross = gross_rate(state.level, active, model, registry)?;
    Ok(advance_state(
        state,
        gross,
        model,
        dt_seconds,
        state.elapsed + dt_seconds,
    ))
}

fn advance_state(
    state: &BatteryState,
    gross: f64,
    model: &PowerModel,
    dt_seconds: f64,
    elapsed: f64,
) -> BatteryState {
    let supply = if state.charging {
        model.charging_supply
    } else {
        0.0
    };
    let net = gross - supply;
    BatteryState::new(
        state.level - net * dt_seconds / 60.0,
        state.charging,
        elapsed,
        state.granularity,
    )
}

/// Samplers for the components a plan can activate, by registry index.
#[derive(Debug, Clone)]
pub struct SamplerSet {
    samplers: Vec<(usize, DrainTimeSampler)>,
}

impl SamplerSet {
    pub fn for_plan(plan: &AttackPlan, registry: &Registry) -> Result<Self> {
        let mut indices: Vec<usize> = plan
            .activated_components()
            .into_iter()
            .map(|id| {
                registry
                    .index_of(id)
                    .ok_or_else(|| Error::UnknownComponent(id.to_owned()))
            })
            .collect::<Result<_>>()?;
        indices.sort_unstable();
        Ok(Self {
            samplers: indices
                .into_iter()
                .map(|i| (i, DrainTimeSampler::for_component(registry.by_index(i))))
                .collect(),
        })
    }

    /// Per-component rates for one trial: each sampled component gets one
    /// drain time, drawn in registry order, frozen for the whole run.
    pub fn draw_rates(&self, registry: &Registry, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rates = mean_rates(registry);
        for (i, sampler) in &self.samplers {
            rates[*i] = COMPONENT_DRAIN_BASIS_PCT / sampler.sample(&mut rng);
        }
        rates
    }

    /// Drain times (minutes) the given seed would draw, by component id.
    pub fn draw_times(&self, registry: &Registry, seed: u64) -> Vec<(String, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.samplers
            .iter()
            .map(|(i, s)| (registry.by_index(*i).id.clone(), s.sample(&mut rng)))
            .collect()
    }
}

/// Stepwise simulation of one run. [`simulate`] drives it to a terminal
/// state; the measurement harness drives it with its own stop rule.
pub struct Simulator<'a> {
    registry: &'a Registry,
    model: &'a PowerModel,
    goal: Goal,
    phases: Vec<(Vec<usize>, Option<f64>)>,
    phase: usize,
    phase_end: Option<f64>,
    phases_done: bool,
    triggers: TriggerEvaluator,
    active: ActiveComponents,
    rates: Vec<f64>,
    eta: f64,
    state: BatteryState,
    initial_level: f64,
    step_seconds: f64,
    steps: u64,
    max_steps: u64,
    charging_schedule: Vec<ChargingEvent>,
    next_charging_event: usize,
    initial_events: Vec<String>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        plan: &AttackPlan,
        profile: &DeviceProfile,
        model: &'a PowerModel,
        registry: &'a Registry,
        options: &SimOptions,
    ) -> Result<Self> {
        let rates = match options.mode {
            Mode::Deterministic => mean_rates(registry),
            Mode::Stochastic { seed } => {
                SamplerSet::for_plan(plan, registry)?.draw_rates(registry, seed)
            }
        };
        Self::with_rates(plan, profile, model, registry, options, rates)
    }

    /// Like [`Simulator::new`] with explicit per-component rates (percent/minute).
    pub fn with_rates(
        plan: &AttackPlan,
        profile: &DeviceProfile,
        model: &'a PowerModel,
        registry: &'a Registry,
        options: &SimOptions,
        rates: Vec<f64>,
    ) -> Result<Self> {
        if !(options.step_seconds > 0.0) || !options.step_seconds.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {} s",
                options.step_seconds
            )));
        }
        if !(options.time_limit_minutes >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time limit must be non-negative, got {} min",
                options.time_limit_minutes
            )));
        }
        if rates.len() != registry.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} rates, got {}",
                registry.len(),
                rates.len()
            )));
        }
        profile.ensure_valid("device profile")?;
        model.ensure_valid("power model")?;
        plan.ensure_valid(registry)?;
        if !options.force {
            let report = check_feasibility(plan, profile, registry);
            if !report.feasible {
                return Err(Error::Infeasible(report.summary()));
            }
        }

        let phases = plan
            .steps
            .iter()
            .map(|p| {
                Ok((
                    resolve(&p.activate, registry)?,
                    p.duration.map(|d| d * 60.0),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut charging_schedule = options.charging_schedule.clone();
        charging_schedule.sort_by(|a, b| a.at_minutes.total_cmp(&b.at_minutes));

        let state = BatteryState::initial(profile);
        let mut sim = Simulator {
            registry,
            model,
            goal: plan.goal,
            phases_done: phases.is_empty(),
            phase_end: None,
            phases,
            phase: 0,
            triggers: TriggerEvaluator::new(&plan.triggers, registry, profile.charging)?,
            active: ActiveComponents::new(registry.len()),
            rates,
            eta: 1.0,
            initial_level: state.level,
            state,
            step_seconds: options.step_seconds,
            steps: 0,
            max_steps: (options.time_limit_minutes * 60.0 / options.step_seconds).ceil() as u64,
            charging_schedule,
            next_charging_event: 0,
            initial_events: Vec::new(),
        };
        let mut events = Vec::new();
        if !sim.phases_done {
            sim.enter_phase(0, &mut events);
        }
        sim.apply_charging_schedule(&mut events);
        sim.run_triggers(&mut events);
        sim.initial_events = events;
        Ok(sim)
    }

    pub fn state(&self) -> &BatteryState {
        &self.state
    }

    pub fn active(&self) -> &ActiveComponents {
        &self.active
    }

    pub fn active_ids(&self) -> Vec<String> {
        self.active.ids(self.registry)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Events produced while setting up the run (phase 0, triggers at t = 0).
    pub fn initial_events(&self) -> &[String] {
        &self.initial_events
    }

    /// Current gross drain rate, percent/minute.
    pub fn gross_rate(&self) -> f64 {
        gross_rate_indexed(
            self.state.level,
            &self.active,
            &self.rates,
            self.eta,
            self.model,
            self.registry,
        )
    }

    fn refresh_eta(&mut self) {
        self.eta = eta_of(&self.active, self.model, self.registry);
    }

    fn enter_phase(&mut self, index: usize, events: &mut Vec<String>) {
        if index > 0 {
            for i in &self.phases[index - 1].0 {
                self.active.members.remove(i);
            }
        }
        if index >= self.phases.len() {
            self.phases_done = true;
            self.phase_end = None;
            events.push("phases_complete".to_owned());
        } else {
            self.phase = index;
            let (ids, duration) = &self.phases[index];
            self.active.members.extend(ids.iter().copied());
            self.phase_end = duration.map(|d| self.state.elapsed + d);
            events.push(format!("phase[{index}]"));
        }
        self.refresh_eta();
    }

    fn apply_charging_schedule(&mut self, events: &mut Vec<String>) {
        while let Some(ev) = self.charging_schedule.get(self.next_charging_event) {
            if ev.at_minutes * 60.0 > self.state.elapsed + LEVEL_EPSILON {
                break;
            }
            if ev.charging != self.state.charging {
                self.state.charging = ev.charging;
                events.push(format!(
                    "charging:{}",
                    if ev.charging { "on" } else { "off" }
                ));
            }
            self.next_charging_event += 1;
        }
    }

    fn run_triggers(&mut self, events: &mut Vec<String>) {
        if self.triggers.triggers.is_empty() {
            return;
        }
        let fired = self.triggers.evaluate(&self.state, &mut self.active);
        if fired.is_empty() {
            return;
        }
        for ev in fired {
            if ev.stop_all && !self.phases_done {
                self.phases_done = true;
                self.phase_end = None;
            }
            events.push(ev.description);
        }
        self.refresh_eta();
    }

    /// Advances one step and returns the events raised at the new instant.
    pub fn advance(&mut self) -> Vec<String> {
        let gross = self.gross_rate();
        self.steps += 1;
        let elapsed = self.steps as f64 * self.step_seconds;
        self.state = advance_state(&self.state, gross, self.model, self.step_seconds, elapsed);

        let mut events = Vec::new();
        while let Some(end) = self.phase_end {
            if self.state.elapsed + LEVEL_EPSILON < end {
                break;
            }
            let next = self.phase + 1;
            self.enter_phase(next, &mut events);
        }
        if self.next_charging_event < self.charging_schedule.len() {
            self.apply_charging_schedule(&mut events);
        }
        self.run_triggers(&mut events);
        events
    }

    /// Terminal condition of the current state, if any.
    pub fn terminal(&self) -> Option<Terminal> {
        if self.state.level <= LEVEL_EPSILON {
            return Some(Terminal::BatteryDead);
        }
        if let Goal::PartialDrain(delta) = self.goal {
            if self.initial_level - self.state.level >= delta - LEVEL_EPSILON {
                return Some(Terminal::GoalMet);
            }
        }
        if self.steps >= self.max_steps {
            return Some(Terminal::TimeLimit);
        }
        if self.phases_done
            && self.active.is_empty()
            && !self.triggers.has_armed_start()
            && self.model.baseline_rate == 0.0
        {
            return Some(Terminal::PlanExhausted);
        }
        None
    }

    fn sample(&self, events: Vec<String>) -> Sample {
        Sample {
            t_seconds: self.state.elapsed,
            level: self.state.level,
            reported_level: self.state.reported_level,
            active: self.active_ids(),
            charging: self.state.charging,
            events,
        }
    }
}

/// Runs `plan` from the profile's initial state until a terminal condition.
pub fn simulate(
    plan: &AttackPlan,
    profile: &DeviceProfile,
    model: &PowerModel,
    registry: &Registry,
    options: &SimOptions,
) -> Result<SimulationTrace> {
    let mut sim = Simulator::new(plan, profile, model, registry, options)?;
    let mut samples = vec![sim.sample(sim.initial_events.clone())];
    let terminal = loop {
        if let Some(t) = sim.terminal() {
            break t;
        }
        let events = sim.advance();
        samples.push(sim.sample(events));
    };
    Ok(SimulationTrace {
        step_seconds: options.step_seconds,
        samples,
        terminal,
    })
}
