//! Command-line interface: simulate, optimize, verify-paper, sweep, relay.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::gate::{branch_hamiltonian, branch_occupation, run_gate, GateReport, GateSetup, PulseMode};
use crate::model::{apply_doppler, Truncation};
use crate::optimizer::{self, Objective, OptimizationRecord, OptimizationTask};
use crate::propagator::{
    initial_state, phase_trajectory, write_trajectories_csv, TrajectoryPoint, DEFAULT_TOL, MAX_TOL, MIN_TOL,
};
use crate::relay;
use crate::scenario::{registry_ids, registry_scenario, Scenario, ScenarioConfig, ScenarioError};
use crate::units::{khz, mhz};
use crate::verify::{self, CheckRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bamgate", version, about = "Buffer-atom-mediated Rydberg gate simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a registry scenario or a scenario config file.
    Simulate(SimulateArgs),
    /// Run an optimization task described by a TOML file.
    Optimize(OptimizeArgs),
    /// Run the reproduction checks and print a pass/fail table.
    VerifyPaper(VerifyArgs),
    /// Gate error against one swept parameter, as CSV.
    Sweep(SweepArgs),
    /// Check the buffer-atom relay protocol.
    Relay(RelayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PulseArg {
    Single,
    Dual,
    Repeated,
}

impl From<PulseArg> for PulseMode {
    fn from(p: PulseArg) -> Self {
        match p {
            PulseArg::Single => PulseMode::Single,
            PulseArg::Dual => PulseMode::Dual,
            PulseArg::Repeated => PulseMode::Repeated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TruncationArg {
    RydbergPairs,
    Linkage,
    Full,
}

impl From<TruncationArg> for Truncation {
    fn from(t: TruncationArg) -> Self {
        match t {
            TruncationArg::RydbergPairs => Truncation::RydbergPairs,
            TruncationArg::Linkage => Truncation::Linkage,
            TruncationArg::Full => Truncation::Full,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Registry id (e.g. fig2a) or path to a scenario TOML file.
    pub scenario: String,
    /// Override the blockade strength B (MHz).
    #[arg(long)]
    pub blockade: Option<f64>,
    /// Doppler shift k·v on all three atoms (kHz).
    #[arg(long)]
    pub kv: Option<f64>,
    /// Integrator tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, value_enum)]
    pub pulse: Option<PulseArg>,
    /// Override the excited-state truncation (`full` keeps triply excited
    /// states, needed for the no-blockade limit).
    #[arg(long, value_enum)]
    pub truncation: Option<TruncationArg>,
    /// Directory for per-branch population/phase CSV files.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    /// Number of trajectory samples per pulse.
    #[arg(long, default_value_t = 501)]
    pub samples: usize,
    /// Write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct OptimizeArgs {
    /// Task config (TOML).
    pub config: PathBuf,
    /// Output record (JSON); printed to stdout when absent.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Also write the optimized scenario as TOML.
    #[arg(long)]
    pub scenario_out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    /// Restrict to these groups (raw, refined, doppler, ccz, oracle, relay,
    /// propagator, tranquility, baseline).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Evaluation budget per refinement.
    #[arg(long, default_value_t = verify::REFINE_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relay trials.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// k·v on all three atoms, kHz.
    Kv,
    /// Blockade strength B, MHz.
    #[value(name = "blockade", alias = "b")]
    Blockade,
    /// Residual qubit-qubit shift, MHz.
    #[value(name = "delta-r")]
    DeltaR,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub parameter: SweepParam,
    /// Registry id or scenario TOML path.
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    /// Number of samples (inclusive of both ends).
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    #[arg(long, value_enum)]
    pub pulse: Option<PulseArg>,
    /// Refine the coefficients at every sample with this budget.
    #[arg(long)]
    pub refine: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct RelayArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bootstrap depth; 0 runs the plain relay check.
    #[arg(long, default_value_t = 0)]
    pub depth: usize,
    /// Use the simulated CZ of this registry scenario instead of an ideal CZ.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// A failure that maps to an exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn failed(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CHECK_FAILED,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        Self::usage(e.to_string())
    }
}

type CliResult = Result<i32, CliError>;

/// Loads a registry scenario or a TOML scenario file.
pub fn load_scenario(spec: &str) -> Result<Scenario, CliError> {
    if registry_ids().contains(&spec) {
        return Ok(registry_scenario(spec)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::usage(format!(
            "unknown scenario {spec:?} (registry ids: {})",
            registry_ids().join(", ")
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{spec}: {e}")))?;
    let config = ScenarioConfig::from_toml(&text).map_err(|e| CliError::usage(format!("{spec}: {e}")))?;
    Ok(Scenario::from_config(config)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::usage(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn gate_failure(e: impl std::fmt::Display) -> CliError {
    CliError::failed(format!("simulation failed: {e}"))
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Optimize(a) => optimize(a),
        Command::VerifyPaper(a) => verify_paper(a),
        Command::Sweep(a) => sweep(a),
        Command::Relay(a) => relay_cmd(a),
    }
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if (MIN_TOL..=MAX_TOL).contains(&tol) {
        Ok(())
    } else {
        Err(CliError::usage(format!("--tol {tol} outside [{MIN_TOL:e}, {MAX_TOL:e}]")))
    }
}

fn adjusted_setup(s: &Scenario, blockade: Option<f64>, kv: Option<f64>, pulse: Option<PulseArg>, tol: f64) -> Result<GateSetup, CliError> {
    check_tol(tol)?;
    let mut setup = s.setup.clone().with_tol(tol);
    if let Some(b) = blockade {
        if !(b >= 0.0) {
            return Err(CliError::usage("blockade must be non-negative"));
        }
        setup.params = setup.params.with_blockade(mhz(b));
    }
    if let Some(kv) = kv {
        setup.params = apply_doppler(&setup.params, [khz(kv); 3], setup.params.doppler_sign);
    }
    if let Some(p) = pulse {
        setup.pulse = p.into();
    }
    Ok(setup)
}

fn print_report(id: &str, r: &GateReport) {
    println!("scenario {id}  task {}  pulse {:?}", r.task, r.pulse);
    println!("{:<6} {:>14} {:>12} {:>12}", "branch", "population", "phase", "leakage");
    for b in &r.branches {
        println!("{:<6} {:>14.10} {:>12.6} {:>12.3e}", b.label, b.population, b.phase, b.leakage);
    }
    let c = &r.compensation;
    print!("compensation: global {:.6} control {:.6} target {:.6}", c.global, c.control, c.target);
    if let Some(b) = c.buffer {
        print!(" buffer {b:.6}");
    }
    println!();
    println!("conditional-phase residual {:.3e} rad", r.residual);
    println!("gate error {:.6e}", r.error);
}

fn simulate(a: SimulateArgs) -> CliResult {
    let s = load_scenario(&a.scenario)?;
    let mut setup = adjusted_setup(&s, a.blockade, a.kv, a.pulse, a.tol)?;
    if let Some(t) = a.truncation {
        setup.params.truncation = t.into();
    }
    let report = run_gate(&setup).map_err(gate_failure)?;
    print_report(s.id(), &report);
    if let Some(path) = &a.json {
        write_json(path, &report)?;
    }
    if let Some(dir) = &a.trajectories {
        fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
        let mut rows: Vec<(String, Vec<TrajectoryPoint>)> = Vec::new();
        for label in setup.task.labels() {
            let Some(occ) = branch_occupation(setup.task, setup.params.layout, &label).map_err(gate_failure)? else {
                continue;
            };
            let h = branch_hamiltonian(occ, &setup.drives, &setup.params).map_err(gate_failure)?;
            let traj = phase_trajectory(&h, &initial_state(&h), a.samples, setup.tol).map_err(gate_failure)?;
            rows.push((label, traj));
        }
        let path = dir.join(format!("{}_trajectories.csv", s.id()));
        let mut f = fs::File::create(&path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        write_trajectories_csv(&mut f, &rows).map_err(|e| CliError::usage(e.to_string()))?;
        println!("trajectories written to {}", path.display());
    }
    Ok(EXIT_OK)
}

/// Optimization task file. Either `registry` names a seed scenario or a
/// `[scenario]` table gives one inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub registry: Option<String>,
    pub scenario: Option<ScenarioConfig>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_starts")]
    pub starts: usize,
    pub target: Option<f64>,
    /// Box half-width around the seed coefficients; default bounds
    /// otherwise.
    pub trust_radius: Option<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// Extra objective term: gate error with all atoms shifted by this
    /// k·v (kHz).
    pub robust_kv_khz: Option<f64>,
    /// Extra objective term: this weight times the squared
    /// conditional-phase residual (rad²).
    pub phase_weight: Option<f64>,
}

fn default_budget() -> usize {
    2000
}

fn default_starts() -> usize {
    1
}

impl TaskConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            CliError::usage(format!("task config line {line}: {}", e.message()))
        })
    }

    pub fn to_task(&self) -> Result<OptimizationTask, CliError> {
        let scenario = match (&self.registry, &self.scenario) {
            (Some(id), None) => registry_scenario(id)?,
            (None, Some(cfg)) => Scenario::from_config(cfg.clone())?,
            _ => return Err(CliError::usage("task config needs exactly one of `registry` or `[scenario]`")),
        };
        let mut task = OptimizationTask::new(scenario)
            .map_err(|e| CliError::usage(e.to_string()))?
            .with_budget(self.budget)
            .with_seed(self.seed)
            .with_starts(self.starts);
        if let Some(r) = self.trust_radius {
            task = task.with_trust_region(r);
        }
        if let Some(lo) = &self.lower {
            task.lower = lo.clone();
        }
        if let Some(hi) = &self.upper {
            task.upper = hi.clone();
        }
        if let Some(t) = self.target {
            task = task.with_target(t);
        }
        if let Some(kv) = self.robust_kv_khz {
            task = task.with_objective(Objective::DopplerRobust { kv_khz: kv });
        }
        if let Some(weight) = self.phase_weight {
            if self.robust_kv_khz.is_some() {
                return Err(CliError::usage("`robust_kv_khz` and `phase_weight` cannot be combined"));
            }
            if !(weight >= 0.0 && weight.is_finite()) {
                return Err(CliError::usage("`phase_weight` must be a non-negative number"));
            }
            task = task.with_objective(Objective::PhaseLocked { weight });
        }
        Ok(task)
    }
}

fn optimize(a: OptimizeArgs) -> CliResult {
    let text = fs::read_to_string(&a.config).map_err(|e| CliError::usage(format!("{}: {e}", a.config.display())))?;
    let mut cfg = TaskConfig::from_toml(&text)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(b) = a.budget {
        cfg.budget = b;
    }
    let task = cfg.to_task()?;
    let result = optimizer::optimize(&task).map_err(|e| match e {
        optimizer::OptimizeError::Bounds(_) | optimizer::OptimizeError::Budget | optimizer::OptimizeError::NoFreeChannels => {
            CliError::usage(e.to_string())
        }
        other => CliError::failed(other.to_string()),
    })?;
    let record = OptimizationRecord::new(&task, &result).map_err(|e| CliError::failed(e.to_string()))?;
    eprintln!("best error {:.6e} after {} evaluations", result.best_error, result.evaluations);
    match &a.json {
        Some(p) => write_json(p, &record)?,
        None => println!("{}", serde_json::to_string_pretty(&record).map_err(|e| CliError::usage(e.to_string()))?),
    }
    if let Some(p) = &a.scenario_out {
        fs::write(p, record.scenario.to_toml()).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
    }
    Ok(EXIT_OK)
}

pub const GROUPS: [&str; 9] = [
    "raw",
    "refined",
    "doppler",
    "ccz",
    "oracle",
    "relay",
    "propagator",
    "tranquility",
    "baseline",
];

/// Runs the selected check groups; rows come back in a fixed order.
pub fn verification_rows(only: &[String], budget: usize, seed: u64, trials: usize, mut progress: impl FnMut(&CheckRow)) -> Vec<CheckRow> {
    let want = |g: &str| only.is_empty() || only.iter().any(|o| o == g);
    let mut rows = Vec::new();
    let mut push = |rows: &mut Vec<CheckRow>, new: Vec<CheckRow>| {
        for r in &new {
            progress(r);
        }
        rows.extend(new);
    };
    if want("raw") {
        let new = par_map(&registry_ids(), |id| verify::raw_check(id));
        push(&mut rows, new);
    }
    let need_refined = want("refined") || want("doppler") || want("ccz") || want("tranquility");
    let mut refined: Vec<(String, Option<optimizer::Refinement>)> = Vec::new();
    if need_refined {
        let ids: Vec<&str> = if want("refined") || want("tranquility") {
            registry_ids()
        } else {
            registry_ids().into_iter().filter(|id| (want("doppler") && *id == "fig4") || (want("ccz") && *id == "fig5")).collect()
        };
        let out = par_map(&ids, |id| verify::refined_check(id, budget, seed));
        let mut new = Vec::new();
        for (id, (row, r)) in ids.iter().zip(out) {
            new.push(row);
            refined.push((id.to_string(), r));
        }
        if want("refined") {
            push(&mut rows, new);
        }
    }
    let find = |id: &str| refined.iter().find(|(i, _)| i == id).and_then(|(_, r)| r.as_ref());
    if want("doppler") {
        let new = match find("fig4") {
            Some(r) => verify::doppler_checks(&r.refined),
            None => vec![CheckRow::failed("doppler", "fig4", "refinement failed")],
        };
        push(&mut rows, new);
    }
    if want("ccz") {
        let new = match find("fig5") {
            Some(r) => verify::ccz_checks(&r.refined),
            None => vec![CheckRow::failed("ccz", "fig5", "refinement failed")],
        };
        push(&mut rows, new);
    }
    if want("oracle") {
        push(&mut rows, verify::oracle_checks());
    }
    if want("relay") {
        push(&mut rows, verify::relay_checks(trials, seed));
    }
    if want("propagator") {
        push(&mut rows, verify::propagator_checks());
    }
    let mut optimized: Vec<Scenario> = refined.iter().filter_map(|(_, r)| r.as_ref().map(|r| r.refined.clone())).collect();
    if want("baseline") {
        let (row, s) = verify::baseline_check(verify::BASELINE_BUDGET, seed);
        optimized.extend(s);
        push(&mut rows, vec![row]);
    }
    if want("tranquility") {
        push(&mut rows, verify::tranquility_checks(&optimized));
    }
    rows
}

fn verify_paper(a: VerifyArgs) -> CliResult {
    for g in &a.only {
        if !GROUPS.contains(&g.as_str()) {
            return Err(CliError::usage(format!("unknown group {g:?} (groups: {})", GROUPS.join(", "))));
        }
    }
    let rows = verification_rows(&a.only, a.budget, a.seed, a.trials, |r| println!("{}", r.line()));
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed", rows.len(), failed);
    if let Some(p) = &a.json {
        write_json(p, &rows)?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// One row of a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: SweepParam,
    pub value: f64,
    pub pulse: String,
    pub error: f64,
}

pub fn sweep_values(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 || !from.is_finite() || !to.is_finite() || (steps > 1 && from == to) || (steps == 1 && from != to) {
        return Err(CliError::usage("empty or invalid sweep range"));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps).map(|k| from + (to - from) * k as f64 / (steps - 1) as f64).collect())
}

fn with_parameter(s: &Scenario, p: SweepParam, v: f64) -> Result<Scenario, CliError> {
    let mut cfg = s.config.clone();
    match p {
        SweepParam::Kv => cfg.params.doppler_khz = [v; 3],
        SweepParam::Blockade => cfg.params.blockade_mhz = v,
        SweepParam::DeltaR => cfg.params.qubit_shift_mhz = v,
    }
    Ok(Scenario::from_config(cfg)?)
}

pub fn sweep_rows(a: &SweepArgs) -> Result<Vec<SweepRow>, CliError> {
    check_tol(a.tol)?;
    let base = load_scenario(&a.scenario)?;
    let values = sweep_values(a.from, a.to, a.steps)?;
    let pulses: Vec<PulseMode> = match a.pulse {
        Some(p) => vec![p.into()],
        None if base.setup.pulse == PulseMode::Dual => vec![PulseMode::Dual, PulseMode::Repeated],
        None => vec![base.setup.pulse],
    };
    let results = par_map(&values, |&v| -> Result<Vec<SweepRow>, CliError> {
        let mut s = with_parameter(&base, a.parameter, v)?;
        if let Some(budget) = a.refine {
            s = optimizer::refine(s, budget, a.seed).map_err(|e| CliError::failed(e.to_string()))?.refined;
        }
        pulses
            .iter()
            .map(|&pulse| {
                let setup = s.setup.clone().with_tol(a.tol).with_pulse(pulse);
                let r = run_gate(&setup).map_err(gate_failure)?;
                Ok(SweepRow {
                    parameter: a.parameter,
                    value: v,
                    pulse: format!("{pulse:?}").to_lowercase(),
                    error: r.error,
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

fn sweep(a: SweepArgs) -> CliResult {
    let rows = sweep_rows(&a)?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout()),
    };
    let unit = match a.parameter {
        SweepParam::Kv => "khz",
        _ => "mhz",
    };
    let io = |e: std::io::Error| CliError::usage(e.to_string());
    writeln!(out, "parameter,value_{unit},pulse,error").map_err(io)?;
    for r in &rows {
        let name = match r.parameter {
            SweepParam::Kv => "kv",
            SweepParam::Blockade => "blockade",
            SweepParam::DeltaR => "delta-r",
        };
        writeln!(out, "{name},{},{},{:.10e}", r.value, r.pulse, r.error).map_err(io)?;
    }
    Ok(EXIT_OK)
}

fn relay_cmd(a: RelayArgs) -> CliResult {
    if a.trials == 0 {
        return Err(CliError::usage("trials must be positive"));
    }
    let report = match (&a.scenario, a.depth) {
        (Some(id), _) => {
            let s = load_scenario(id)?;
            let diag = crate::gate::gate_diagonal(&s.setup).map_err(gate_failure)?;
            let (_, m, _) = crate::gate::compensate_local_phases(s.setup.task, &diag).map_err(gate_failure)?;
            if m.len() != 4 {
                return Err(CliError::usage("relay needs a CZ scenario"));
            }
            relay::relay_with_simulated_cz(&[m[0], m[1], m[2], m[3]], a.trials, a.seed)
        }
        (None, 0) => relay::verify_relay(a.trials, a.seed),
        (None, d) => relay::bootstrap_chain(d, a.trials, a.seed),
    }
    .map_err(|e| CliError::usage(e.to_string()))?;
    println!("depth {}  trials {}  seed {}", report.depth, report.trials, report.seed);
    for o in &report.outcomes {
        println!(
            "outcome {:<4} corrections {:<24} p in [{:.4}, {:.4}]  max deviation {:.3e}",
            o.outcome,
            o.corrections.join(" "),
            o.min_probability,
            o.max_probability,
            o.max_deviation
        );
    }
    println!("max deviation {:.3e}  |sum p - 1| {:.3e}", report.max_deviation, report.probability_sum_error);
    if let Some(p) = &a.json {
        write_json(p, &report)?;
    }
    Ok(if a.scenario.is_some() || report.passed(1e-12) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Maps `f` over `items` on scoped threads (one per available core);
/// results keep the input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
