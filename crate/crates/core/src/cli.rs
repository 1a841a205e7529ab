//! Command-line front end. Every subcommand reads its inputs from files
//! (or the embedded dataset) and writes plain CSV or JSON.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 infeasible plan,
//! 3 model or calibration error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::calibration::{
    calibrate_components, fit_charging_supply, fit_dim_factor, fit_interference, load_measurements,
    read_attributes, ComponentAttributes, MeasurementRecord,
};
use crate::dataset;
use crate::engine::{simulate, ChargingEvent, Mode, SimOptions};
use crate::error::Error;
use crate::harness::{
    drain_curve, reproduce_published, run_protocol, write_curve_csv, write_stats_csv,
    ProtocolOptions,
};
use crate::model::{set_key, DeviceProfile, PowerModel, Validate};
use crate::plan::{check_feasibility, parse_plan, rank_plans, stealth_score, AttackPlan, Goal};
use crate::registry::Registry;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_MODEL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "drainsim",
    version,
    about = "Simulate battery-exhaustion attacks on mobile devices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one plan and export the battery trace.
    Simulate(SimulateArgs),
    /// Fit a power model (and registry) from measurement tables.
    Calibrate(CalibrateArgs),
    /// Check whether a plan is feasible on a device profile.
    Check(CheckArgs),
    /// Rank every plan in a directory by efficacy.
    Rank(RankArgs),
    /// Reproduce the published tables from the embedded dataset.
    Reproduce(ReproduceArgs),
    /// Repeat the 5-point drain measurement protocol for one plan.
    Protocol(ProtocolArgs),
    /// Record a full-drain curve at fixed checkpoints.
    Curve(CurveArgs),
    /// Write the embedded registry, fitted model, a full-access profile and example plans.
    ExportDataset(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RegistryArg {
    /// Component registry JSON; defaults to the embedded dataset.
    #[arg(long, value_name = "FILE")]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Attack plan JSON.
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    /// Device profile JSON.
    #[arg(long, value_name = "FILE")]
    pub profile: PathBuf,
    /// Power model JSON.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub registry: RegistryArg,
    /// Seed for stochastic mode.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Deterministic)]
    pub mode: ModeArg,
    /// Step size in simulated seconds.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Stop after this many simulated minutes.
    #[arg(long, value_name = "MINUTES", default_value_t = 1440.0)]
    pub time_limit: f64,
    /// Plug or unplug the charger mid-run, as MINUTES:on or MINUTES:off. Repeatable.
    #[arg(long, value_name = "MINUTES:on|off")]
    pub charge_at: Vec<String>,
    /// Run even if the plan is infeasible on the profile.
    #[arg(long)]
    pub force: bool,
    /// Trace output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the --out extension, CSV otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Per-component measurement CSV. Combined (`a+b`) or charging rows are
    /// used only as fit sources.
    #[arg(long, value_name = "FILE")]
    pub measurements: PathBuf,
    /// Extra CSV of combined or charging runs to fit from.
    #[arg(long, value_name = "FILE")]
    pub scenarios: Option<PathBuf>,
    /// Attribute CSV (category, setting, permission, flags); the embedded table otherwise.
    #[arg(long, value_name = "FILE")]
    pub attributes: Option<PathBuf>,
    /// Where to write the fitted power model.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Where to write the calibrated registry.
    #[arg(long, value_name = "FILE")]
    pub registry_out: Option<PathBuf>,
    /// Fit η from the unplugged run of SET (`a+b+c`, optional `@PCT`, default 5).
    /// Each set becomes an override; a single set is also the default η.
    #[arg(long, value_name = "SET[@PCT]")]
    pub fit_interference: Vec<String>,
    /// Fit φ from a display-class component's full drain, `ID` or `ID@MINUTES`.
    #[arg(long, value_name = "ID[@MINUTES]")]
    pub fit_dim: Option<String>,
    /// Fit the charging supply from the unplugged and charging runs of SET.
    #[arg(long, value_name = "SET[@PCT]")]
    pub fit_charging: Option<String>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub profile: PathBuf,
    #[command(flatten)]
    pub registry: RegistryArg,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Directory of plan JSON files; plan names are the file stems.
    #[arg(long, value_name = "DIR")]
    pub plans: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub profile: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub registry: RegistryArg,
    /// JSON output file for the ranking.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// JSON report output file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub profile: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub registry: RegistryArg,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Deterministic)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Row label in the output; the plan's file stem otherwise.
    #[arg(long)]
    pub id: Option<String>,
    /// Stats output: `.json` for full per-trial detail, CSV otherwise.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub profile: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub registry: RegistryArg,
    /// Percentage points between checkpoints.
    #[arg(long, default_value_t = 2.0)]
    pub checkpoint: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Curve CSV output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Directory to write into (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

/// A failed command: exit code plus one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn model(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_MODEL,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            Error::Calibration(_)
            | Error::NonTerminating { .. }
            | Error::StealthNotConfigured(_) => EXIT_MODEL,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("drainsim: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command) -> CmdResult {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Check(a) => cmd_check(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::Protocol(a) => cmd_protocol(a),
        Command::Curve(a) => cmd_curve(a),
        Command::ExportDataset(a) => cmd_export(a),
    }
}

fn read_text(path: &Path, what: &str) -> std::result::Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {what} `{}`: {e}", path.display())))
}

fn load_json<T: DeserializeOwned>(path: &Path, what: &str) -> std::result::Result<T, Failure> {
    serde_json::from_str(&read_text(path, what)?)
        .map_err(|e| Failure::usage(format!("malformed {what} `{}`: {e}", path.display())))
}

fn load_registry(arg: &RegistryArg) -> std::result::Result<Registry, Failure> {
    match &arg.registry {
        None => Ok(dataset::published_registry()),
        Some(path) => {
            let registry: Registry = load_json(path, "registry")?;
            registry
                .ensure_valid("component registry")
                .map_err(|e| Failure::model(e.to_string()))?;
            Ok(registry)
        }
    }
}

fn load_model(path: &Path) -> std::result::Result<PowerModel, Failure> {
    let model: PowerModel = load_json(path, "power model")?;
    model
        .ensure_valid("power model")
        .map_err(|e| Failure::model(e.to_string()))?;
    Ok(model)
}

fn load_profile(path: &Path) -> std::result::Result<DeviceProfile, Failure> {
    let profile: DeviceProfile = load_json(path, "device profile")?;
    profile.ensure_valid("device profile")?;
    Ok(profile)
}

fn load_plan(path: &Path, registry: &Registry) -> std::result::Result<AttackPlan, Failure> {
    let text = read_text(path, "plan")?;
    parse_plan(&text, registry).map_err(|e| Failure {
        message: format!("plan `{}`: {e}", path.display()),
        ..Failure::from(e)
    })
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> CmdResult {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Failure::usage(format!("cannot write `{}`: {e}", path.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}"))),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> std::result::Result<Vec<u8>, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn format_for(out: Option<&Path>, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(
        || match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        },
    )
}

fn parse_charge_at(spec: &str) -> std::result::Result<ChargingEvent, Failure> {
    let bad = || Failure::usage(format!("--charge-at expects MINUTES:on|off, got `{spec}`"));
    let (minutes, state) = spec.split_once(':').ok_or_else(bad)?;
    let at_minutes: f64 = minutes.trim().parse().map_err(|_| bad())?;
    let charging = match state.trim() {
        "on" => true,
        "off" => false,
        _ => return Err(bad()),
    };
    if !(at_minutes >= 0.0) {
        return Err(bad());
    }
    Ok(ChargingEvent {
        at_minutes,
        charging,
    })
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let registry = load_registry(&a.registry)?;
    let plan = load_plan(&a.plan, &registry)?;
    let profile = load_profile(&a.profile)?;
    let model = load_model(&a.model)?;
    let options = SimOptions {
        mode: match a.mode {
            ModeArg::Deterministic => Mode::Deterministic,
            ModeArg::Stochastic => Mode::Stochastic { seed: a.seed },
        },
        step_seconds: a.step,
        time_limit_minutes: a.time_limit,
        force: a.force,
        charging_schedule: a
            .charge_at
            .iter()
            .map(|s| parse_charge_at(s))
            .collect::<std::result::Result<_, _>>()?,
    };
    let trace = simulate(&plan, &profile, &model, &registry, &options)?;
    let bytes = match format_for(a.out.as_deref(), a.format) {
        Format::Json => json_bytes(&trace)?,
        Format::Csv => {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            buf
        }
    };
    write_output(a.out.as_deref(), &bytes)?;
    if a.out.is_some() {
        println!(
            "terminal={} elapsed_min={:.3} final_level={:.3}",
            serde_json::to_value(trace.terminal)
                .map_err(Error::from)?
                .as_str()
                .unwrap_or("?"),
            trace.elapsed_minutes(),
            trace.final_level()
        );
    }
    Ok(())
}

/// Splits `SET@X` into the `+`-joined set key and the optional number.
fn split_spec(spec: &str) -> std::result::Result<(String, Option<f64>), Failure> {
    let (set, num) = match spec.split_once('@') {
        Some((s, n)) => {
            let n: f64 = n
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("bad number in `{spec}`")))?;
            (s, Some(n))
        }
        None => (spec, None),
    };
    if set.trim().is_empty() {
        return Err(Failure::usage(format!("empty component set in `{spec}`")));
    }
    Ok((set_key(set.split('+').map(str::trim)), num))
}

fn find_run<'a>(
    records: &'a [MeasurementRecord],
    set: &str,
    pct: f64,
    charging: bool,
) -> std::result::Result<&'a MeasurementRecord, Failure> {
    records
        .iter()
        .find(|r| set_key(r.members()) == set && r.drain_pct == pct && r.is_charging() == charging)
        .ok_or_else(|| {
            Failure::model(format!(
                "no {} {pct}% run for `{set}` in the measurements",
                if charging { "charging" } else { "unplugged" }
            ))
        })
}

fn cmd_calibrate(a: CalibrateArgs) -> CmdResult {
    let mut records = load_measurements(&a.measurements)
        .map_err(|e| Failure::usage(format!("measurements `{}`: {e}", a.measurements.display())))?;
    if let Some(path) = &a.scenarios {
        let extra = load_measurements(path)
            .map_err(|e| Failure::usage(format!("scenarios `{}`: {e}", path.display())))?;
        records.extend(
            extra
                .into_iter()
                .filter(|r| r.is_combined() || r.is_charging()),
        );
    }
    let attributes: Vec<ComponentAttributes> = match &a.attributes {
        Some(path) => read_attributes(fs::File::open(path).map_err(|e| {
            Failure::usage(format!("cannot read attributes `{}`: {e}", path.display()))
        })?)?,
        None => dataset::attributes(),
    };
    let (fit_sources, singles): (Vec<_>, Vec<_>) = records
        .into_iter()
        .partition(|r| r.is_combined() || r.is_charging());
    let registry = calibrate_components(&singles, &attributes).map_err(|e| match e {
        Error::Calibration(_) => Failure::from(e),
        other => Failure::model(other.to_string()),
    })?;

    let mut model = PowerModel::default();
    let mut log = BTreeMap::new();
    for spec in &a.fit_interference {
        let (set, pct) = split_spec(spec)?;
        let run = find_run(
            &fit_sources,
            &set,
            pct.unwrap_or(model.drain_threshold),
            false,
        )?;
        let members: Vec<&str> = set.split('+').collect();
        let fit = fit_interference(run, &members, &registry)?;
        if let Some(w) = &fit.warning {
            eprintln!("drainsim: warning: {w}");
        }
        fit.apply_override(&mut model)?;
        if a.fit_interference.len() == 1 {
            fit.apply_default(&mut model)?;
        }
        log.insert(format!("eta[{set}]"), fit.eta);
    }
    if let Some(spec) = &a.fit_dim {
        let (id, minutes) = split_spec(spec)?;
        let full = match minutes {
            Some(m) => m,
            None => registry.require(&id)?.full_drain_minutes.ok_or_else(|| {
                Failure::model(format!("`{id}` has no full-drain time; use {id}@MINUTES"))
            })?,
        };
        model.dim_factor_phi = fit_dim_factor(full, &id, &model, &registry)?;
        log.insert("dim_factor_phi".to_owned(), model.dim_factor_phi);
    }
    if let Some(spec) = &a.fit_charging {
        let (set, pct) = split_spec(spec)?;
        let pct = pct.unwrap_or(model.drain_threshold);
        let unplugged = find_run(&fit_sources, &set, pct, false)?;
        let plugged = find_run(&fit_sources, &set, pct, true)?;
        model.charging_supply = fit_charging_supply(unplugged, plugged)?;
        log.insert("charging_supply".to_owned(), model.charging_supply);
    }
    model
        .ensure_valid("fitted power model")
        .map_err(|e| Failure::model(e.to_string()))?;
    write_output(Some(&a.out), &json_bytes(&model)?)?;
    if let Some(path) = &a.registry_out {
        write_output(Some(path), &json_bytes(&registry)?)?;
    }
    for (name, value) in log {
        println!("{name} = {value:.6}");
    }
    Ok(())
}

fn cmd_check(a: CheckArgs) -> CmdResult {
    let registry = load_registry(&a.registry)?;
    let plan = load_plan(&a.plan, &registry)?;
    let profile = load_profile(&a.profile)?;
    let report = check_feasibility(&plan, &profile, &registry);
    let stealth = stealth_score(&plan, &registry).ok();
    let out = serde_json::json!({ "feasibility": report, "stealth_level": stealth });
    write_output(None, &json_bytes(&out)?)?;
    if report.feasible {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_INFEASIBLE,
            message: format!("infeasible: {}", report.summary()),
        })
    }
}

fn read_plan_dir(
    dir: &Path,
    registry: &Registry,
) -> std::result::Result<Vec<(String, AttackPlan)>, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| {
        Failure::usage(format!(
            "cannot read plan directory `{}`: {e}",
            dir.display()
        ))
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::usage(format!(
            "no .json plans in `{}`",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, load_plan(p, registry)?))
        })
        .collect()
}

fn cmd_rank(a: RankArgs) -> CmdResult {
    let registry = load_registry(&a.registry)?;
    let profile = load_profile(&a.profile)?;
    let model = load_model(&a.model)?;
    let plans = read_plan_dir(&a.plans, &registry)?;
    let ranked = rank_plans(&plans, &profile, &model, &registry)?;
    println!("rank  plan                      feasible  efficacy(%/min)  minutes  terminal");
    for (i, r) in ranked.iter().enumerate() {
        println!(
            "{:<5} {:<25} {:<9} {:>15.4} {:>8.2}  {:?}",
            i + 1,
            r.name,
            r.feasible,
            r.efficacy,
            r.minutes,
            r.terminal
        );
    }
    if let Some(out) = &a.out {
        write_output(Some(out), &json_bytes(&ranked)?)?;
    }
    Ok(())
}

fn cmd_reproduce(a: ReproduceArgs) -> CmdResult {
    let registry = dataset::published_registry();
    let fit = dataset::fit_published_model(&registry)?;
    let report = reproduce_published(&registry, &fit.model)?;
    print!("{}", report.to_table());
    if let Some(out) = &a.out {
        write_output(Some(out), &json_bytes(&report)?)?;
    }
    if report.table_matches {
        Ok(())
    } else {
        Err(Failure::model(
            "simulated table does not match the published means",
        ))
    }
}

fn cmd_protocol(a: ProtocolArgs) -> CmdResult {
    let registry = load_registry(&a.registry)?;
    let plan = load_plan(&a.plan, &registry)?;
    let profile = load_profile(&a.profile)?;
    let model = load_model(&a.model)?;
    let id = a.id.clone().unwrap_or_else(|| {
        a.plan
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let options = ProtocolOptions {
        trials: a.trials,
        seed: a.seed,
        stochastic: a.mode == ModeArg::Stochastic,
        step_seconds: a.step,
        ..ProtocolOptions::default()
    };
    let stats = run_protocol(&id, &plan, &profile, &model, &registry, &options)?;
    if stats.non_terminating > 0 {
        eprintln!(
            "drainsim: {} trial(s) did not reach the threshold",
            stats.non_terminating
        );
    }
    let bytes = match format_for(a.out.as_deref(), None) {
        Format::Json => json_bytes(&stats)?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_stats_csv(&mut buf, std::slice::from_ref(&stats))?;
            buf
        }
    };
    write_output(a.out.as_deref(), &bytes)
}

fn cmd_curve(a: CurveArgs) -> CmdResult {
    let registry = load_registry(&a.registry)?;
    let plan = load_plan(&a.plan, &registry)?;
    let profile = load_profile(&a.profile)?;
    let model = load_model(&a.model)?;
    let options = SimOptions {
        step_seconds: a.step,
        ..SimOptions::default()
    };
    let points = drain_curve(&plan, &profile, &model, &registry, a.checkpoint, &options)?;
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &points)?;
    write_output(a.out.as_deref(), &buf)
}

fn cmd_export(a: ExportArgs) -> CmdResult {
    let registry = dataset::published_registry();
    let fit = dataset::fit_published_model(&registry)?;
    let plans_dir = a.out_dir.join("plans");
    fs::create_dir_all(&plans_dir)
        .map_err(|e| Failure::usage(format!("cannot create `{}`: {e}", plans_dir.display())))?;
    write_output(
        Some(&a.out_dir.join("registry.json")),
        &json_bytes(&registry)?,
    )?;
    write_output(
        Some(&a.out_dir.join("model.json")),
        &json_bytes(&fit.model)?,
    )?;
    write_output(
        Some(&a.out_dir.join("profile.json")),
        &json_bytes(&dataset::full_access_profile(&registry))?,
    )?;
    write_output(
        Some(&a.out_dir.join("components.csv")),
        dataset::COMPONENTS_CSV.as_bytes(),
    )?;
    write_output(
        Some(&a.out_dir.join("scenarios.csv")),
        dataset::SCENARIOS_CSV.as_bytes(),
    )?;
    let examples: [(&str, Vec<&str>); 3] = [
        ("trio", dataset::TRIO.to_vec()),
        ("web_composite", vec!["web_composite"]),
        ("brightness", vec!["brightness"]),
    ];
    for (name, ids) in examples {
        let plan = AttackPlan::single(Goal::FullDrain, ids);
        write_output(
            Some(&plans_dir.join(format!("{name}.json"))),
            &json_bytes(&plan)?,
        )?;
    }
    println!("wrote {}", a.out_dir.display());
    Ok(())
}
