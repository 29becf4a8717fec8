//! Coefficient search for gate scenarios.

mod search;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use num_complex::Complex64;

use crate::gate::{
    assemble_gate_matrix, compensate_local_phases, gate_error, gate_outcomes, run_gate, GateError, GateSetup, GateTask,
    PulseMode,
};
use crate::model::{apply_doppler, Role};
use crate::scenario::{registry_scenario, Scenario, ScenarioConfig, ScenarioError};
use crate::units::khz;
use crate::waveform::WaveformKind;

use search::{lm_polish, nelder_mead, Counter, Sample};

pub const DEFAULT_TARGET: f64 = 1e-5;
pub const FD_STEP: f64 = 1e-4;
/// Half-width of the refinement box around published coefficients.
pub const REFINE_RADIUS: f64 = 5.0;
pub const AMPLITUDE_BOUNDS: (f64, f64) = (-200.0, 5000.0);
pub const DETUNING_BOUNDS: (f64, f64) = (-100.0, 100.0);

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("the scenario has no free channels")]
    NoFreeChannels,
    #[error("invalid bounds: {0}")]
    Bounds(String),
    #[error("budget must be at least 1")]
    Budget,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Gate(#[from] GateError),
}

/// Quantity being minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Objective {
    /// Gate error of the scenario as configured.
    GateError,
    /// Gate error at the configured Doppler shifts plus the gate error with
    /// all three atoms shifted by `kv_khz`.
    DopplerRobust { kv_khz: f64 },
    /// Gate error plus `weight` times the squared conditional-phase
    /// residual (rad²). The plain error is nearly blind to a small phase
    /// offset when leakage dominates.
    PhaseLocked { weight: f64 },
}

/// What to optimize and how.
#[derive(Debug, Clone)]
pub struct OptimizationTask {
    pub scenario: Scenario,
    pub start: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub budget: usize,
    pub seed: u64,
    pub target: f64,
    /// Number of local searches; the first starts at `start`, the others at
    /// random points of the box.
    pub starts: usize,
    /// Initial simplex edge as a fraction of each coefficient's range.
    pub simplex_fraction: f64,
    pub objective: Objective,
}

impl OptimizationTask {
    /// Default bounds: amplitudes in [−200, 5000], detunings in [−100, 100].
    pub fn new(scenario: Scenario) -> Result<Self, OptimizeError> {
        let free = scenario.free_channels();
        if free.is_empty() {
            return Err(OptimizeError::NoFreeChannels);
        }
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for (c, _, coeffs) in &free {
            let (lo, hi) = match c.role {
                Role::Detuning => DETUNING_BOUNDS,
                Role::Rabi | Role::Coupling => AMPLITUDE_BOUNDS,
            };
            lower.extend(std::iter::repeat(lo).take(coeffs.len()));
            upper.extend(std::iter::repeat(hi).take(coeffs.len()));
        }
        let start = scenario.free_vector();
        Ok(Self {
            scenario,
            start,
            lower,
            upper,
            budget: 2000,
            seed: 0,
            target: DEFAULT_TARGET,
            starts: 1,
            simplex_fraction: 0.1,
            objective: Objective::GateError,
        })
    }

    /// Restricts the box to `start ± radius` per coefficient.
    pub fn with_trust_region(mut self, radius: f64) -> Self {
        self.lower = self.start.iter().map(|v| v - radius).collect();
        self.upper = self.start.iter().map(|v| v + radius).collect();
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = target;
        self
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts.max(1);
        self
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    fn validate(&self) -> Result<(), OptimizeError> {
        let n = self.start.len();
        if n == 0 {
            return Err(OptimizeError::NoFreeChannels);
        }
        if self.budget == 0 {
            return Err(OptimizeError::Budget);
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(OptimizeError::Bounds(format!("expected {n} bounds")));
        }
        for i in 0..n {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(OptimizeError::Bounds(format!("coefficient {i}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Scenario instantiated at `x`.
    pub fn instantiate(&self, x: &[f64]) -> Result<Scenario, OptimizeError> {
        Ok(self.scenario.with_free_vector(x)?)
    }
}

/// Gate error of `setup` under `objective`.
pub fn evaluate(setup: &GateSetup, objective: Objective) -> Result<f64, GateError> {
    sample(setup, objective).map(|(v, _)| v)
}

/// Error and residuals of one gate. The residuals are every amplitude
/// left outside the initial ket (their squares sum to the leakage) and the
/// compensated unit phasors minus the target, aligned to the best global
/// phase. Weights make the squared norm track the gate error near a
/// solution.
fn gate_sample(setup: &GateSetup) -> Result<(Sample, f64), GateError> {
    let task = setup.task;
    let outcomes = gate_outcomes(setup)?;
    let amps: Vec<(String, Option<Complex64>)> = outcomes.iter().map(|(l, o)| (l.clone(), o.as_ref().map(|o| o.amplitude()))).collect();
    let diag = assemble_gate_matrix(task, &amps)?;
    let (_, m, chi) = compensate_local_phases(task, &diag)?;
    let d = task.dim() as f64;
    let leak_weight = 1.0 / d.sqrt();
    let phase_weight = 1.0 / (d + 1.0).sqrt();
    let mut residuals = Vec::new();
    for o in outcomes.iter().filter_map(|(_, o)| o.as_ref()) {
        for (k, z) in o.state.iter().enumerate() {
            if k != o.initial_index {
                residuals.push(leak_weight * z.re);
                residuals.push(leak_weight * z.im);
            }
        }
    }
    let target = task.target();
    let unit: Vec<Complex64> = m.iter().map(|z| z / z.norm()).collect();
    let overlap: Complex64 = unit.iter().zip(&target).map(|(a, t)| a * t.conj()).sum();
    let align = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
    for (a, t) in unit.iter().zip(&target) {
        let r = a - t * align;
        residuals.push(phase_weight * r.re);
        residuals.push(phase_weight * r.im);
    }
    Ok(((gate_error(task, &m), residuals), chi))
}

fn sample(setup: &GateSetup, objective: Objective) -> Result<Sample, GateError> {
    let ((base, mut r), chi) = gate_sample(setup)?;
    match objective {
        Objective::GateError => Ok((base, r)),
        Objective::PhaseLocked { weight } => {
            r.push(weight.sqrt() * chi);
            Ok((base + weight * chi * chi, r))
        }
        Objective::DopplerRobust { kv_khz } => {
            let shifted = GateSetup {
                params: apply_doppler(&setup.params, [khz(kv_khz); 3], 1.0),
                ..setup.clone()
            };
            let ((e, rs), _) = gate_sample(&shifted)?;
            r.extend(rs);
            Ok((base + e, r))
        }
    }
}

/// Objective value at `x`; propagation or construction failures map to 1.0.
pub fn objective(x: &[f64], task: &OptimizationTask) -> f64 {
    objective_sample(x, task).0
}

fn objective_sample(x: &[f64], task: &OptimizationTask) -> Sample {
    let value = task
        .instantiate(x)
        .map_err(|e| e.to_string())
        .and_then(|s| sample(&s.setup, task.objective).map_err(|e| e.to_string()));
    match value {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("objective evaluation failed: {msg}");
            (1.0, Vec::new())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: Vec<f64>,
    pub best_error: f64,
    /// Best-so-far objective after each evaluation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Multi-start local search under one shared budget. The first start is
/// polished directly; random starts get a bounded Nelder–Mead first. The
/// polish alternates finite-difference Levenberg–Marquardt with shrinking
/// simplex restarts until the start's share is spent or progress stalls.
pub fn optimize(task: &OptimizationTask) -> Result<OptimizationResult, OptimizeError> {
    task.validate()?;
    let n = task.start.len();
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let mut f = |x: &[f64]| objective_sample(x, task);
    let mut c = Counter::new(&mut f, &task.lower, &task.upper, task.budget, task.target);
    let steps: Vec<f64> = task
        .lower
        .iter()
        .zip(&task.upper)
        .map(|(lo, hi)| ((hi - lo) * task.simplex_fraction).max(1e-6))
        .collect();

    for k in 0..task.starts {
        if c.exhausted() {
            break;
        }
        let share = c.remaining() / (task.starts - k);
        let stop = c.history.len() + share;
        let (mut x, mut fx) = if k == 0 {
            let Some(v) = c.eval(&task.start) else { break };
            (task.start.clone(), v)
        } else {
            let x0: Vec<f64> = (0..n)
                .map(|i| rng.gen_range(task.lower[i]..=task.upper[i]))
                .collect();
            match nelder_mead(&mut c, &x0, &steps, share / 2, 1e-3) {
                Some(v) => v,
                None => break,
            }
        };
        let mut scale = 0.1;
        while c.history.len() < stop && !c.exhausted() {
            let before = fx;
            match lm_polish(&mut c, &x, FD_STEP, 100) {
                Some((xp, fp)) if fp <= fx => {
                    x = xp;
                    fx = fp;
                }
                Some(_) => {}
                None => break,
            }
            let left = stop.saturating_sub(c.history.len());
            if left == 0 {
                break;
            }
            let small: Vec<f64> = steps.iter().map(|s| s * scale).collect();
            match nelder_mead(&mut c, &x, &small, left.min(4 * n + 20), 1e-6) {
                Some((xs, fs)) if fs < fx => {
                    x = xs;
                    fx = fs;
                }
                Some(_) => {}
                None => break,
            }
            scale *= 0.3;
            if fx > before * (1.0 - 1e-3) && scale < 1e-4 {
                break;
            }
        }
    }
    Ok(OptimizationResult {
        best: c.best_x.clone(),
        best_error: c.best_f,
        evaluations: c.history.len(),
        history: c.history,
    })
}

/// Outcome of refining a registry scenario.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub raw: Scenario,
    pub refined: Scenario,
    pub raw_error: f64,
    pub refined_error: f64,
    pub result: OptimizationResult,
}

/// Objective used when refining a registry scenario: dual-pulse scenarios
/// are refined for the Doppler-shifted gate as well, CCZ scenarios also pin
/// the three-body conditional phase.
pub fn refinement_objective(scenario: &Scenario) -> Objective {
    if scenario.setup.pulse == PulseMode::Dual {
        Objective::DopplerRobust { kv_khz: 25.0 }
    } else if scenario.setup.task == GateTask::Ccz {
        Objective::PhaseLocked { weight: CCZ_PHASE_WEIGHT }
    } else {
        Objective::GateError
    }
}

/// A residual of 1e-3 rad then costs as much as 1e-5 of gate error.
pub const CCZ_PHASE_WEIGHT: f64 = 10.0;

/// Refines a registry scenario inside ±5 units of every published
/// coefficient.
pub fn refine_published(id: &str, budget: usize, seed: u64) -> Result<Refinement, OptimizeError> {
    let raw = registry_scenario(id)?;
    refine(raw, budget, seed)
}

pub fn refine(raw: Scenario, budget: usize, seed: u64) -> Result<Refinement, OptimizeError> {
    let objective = refinement_objective(&raw);
    let task = OptimizationTask::new(raw.clone())?
        .with_trust_region(REFINE_RADIUS)
        .with_budget(budget)
        .with_seed(seed)
        .with_objective(objective);
    let raw_error = run_gate(&raw.setup)?.error;
    let result = optimize(&task)?;
    let refined = task.instantiate(&result.best)?;
    let refined_error = run_gate(&refined.setup)?.error;
    Ok(Refinement {
        raw,
        refined,
        raw_error,
        refined_error,
        result,
    })
}

/// Serializable record of one optimization run; `scenario` can be saved as
/// a scenario config and loaded again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub source: String,
    pub seed: u64,
    pub budget: usize,
    pub objective: Objective,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub start: Vec<f64>,
    pub best: Vec<f64>,
    pub best_error: f64,
    pub evaluations: usize,
    pub history: Vec<f64>,
    pub scenario: ScenarioConfig,
}

impl OptimizationRecord {
    pub fn new(task: &OptimizationTask, result: &OptimizationResult) -> Result<Self, OptimizeError> {
        Ok(Self {
            source: task.scenario.id().to_string(),
            seed: task.seed,
            budget: task.budget,
            objective: task.objective,
            lower: task.lower.clone(),
            upper: task.upper.clone(),
            start: task.start.clone(),
            best: result.best.clone(),
            best_error: result.best_error,
            evaluations: result.evaluations,
            history: result.history.clone(),
            scenario: task.instantiate(&result.best)?.config,
        })
    }
}

/// Every time-varying channel of `scenario` with its endpoint-to-peak
/// derivative ratio.
pub fn tranquility_ratios(scenario: &Scenario) -> Vec<(String, f64)> {
    let scheme = scenario.config.scheme;
    scenario
        .setup
        .drives
        .channels()
        .iter()
        .filter(|(_, w)| w.kind() == WaveformKind::TimeVarying)
        .map(|(c, w)| (c.name(scheme).to_string(), w.endpoint_derivative_ratio()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Channel, DriveSet, Modulation, Scheme, Species};
    use crate::propagator::{initial_state, propagate_pulse};
    use crate::model::{build_branch, Occupation, PhysicalParams};
    use crate::waveform::WaveformSpec;

    #[test]
    fn pi_pulse_area_is_recovered() {
        // ground population after a constant drive of 2π·a MHz for 0.25 µs
        // vanishes at a = 2
        let pop = |a: f64| {
            let q = WaveformSpec::constant(a).unwrap();
            let z = WaveformSpec::constant(0.0).unwrap();
            let drives = DriveSet::new(
                Scheme::OnePhoton,
                Modulation::AmplitudeOnly,
                vec![
                    (Channel::new(Species::Buffer, Role::Rabi), q),
                    (Channel::new(Species::Buffer, Role::Detuning), z.clone()),
                    (Channel::new(Species::Qubit, Role::Rabi), z.clone()),
                    (Channel::new(Species::Qubit, Role::Detuning), z),
                ],
            )
            .unwrap();
            let h = build_branch(Occupation::new(false, true, false), &drives, &PhysicalParams::default()).unwrap();
            let psi = propagate_pulse(&h, &initial_state(&h), 1e-12).unwrap();
            psi[h.initial_index()].norm_sqr()
        };
        let mut f = |x: &[f64]| (pop(x[0]), Vec::new());
        let lo = [1.0];
        let hi = [3.0];
        let mut c = Counter::new(&mut f, &lo, &hi, 400, 0.0);
        let (x, fx) = nelder_mead(&mut c, &[1.5], &[0.2], 300, 1e-14).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-6, "{x:?} {fx}");
    }

    #[test]
    fn budget_one_evaluates_the_seed() {
        let s = registry_scenario("fig2a").unwrap();
        let task = OptimizationTask::new(s.clone()).unwrap().with_budget(1);
        let r = optimize(&task).unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.best, s.free_vector());
        assert_eq!(r.best_error, run_gate(&s.setup).unwrap().error);
    }

    #[test]
    fn zero_amplitudes_give_identity_error() {
        let s = registry_scenario("fig2c").unwrap();
        let task = OptimizationTask::new(s.clone()).unwrap();
        let mut x = s.free_vector();
        let mut k = 0;
        for (c, _, coeffs) in s.free_channels() {
            for _ in 0..coeffs.len() {
                if c.role == Role::Rabi {
                    x[k] = 0.0;
                }
                k += 1;
            }
        }
        let v = objective(&x, &task);
        assert!((v - 0.6).abs() < 1e-9, "{v}");
    }

    #[test]
    fn bad_bounds_are_rejected() {
        let s = registry_scenario("fig2a").unwrap();
        let mut task = OptimizationTask::new(s).unwrap();
        task.lower[0] = 10.0;
        task.upper[0] = -10.0;
        assert!(matches!(optimize(&task), Err(OptimizeError::Bounds(_))));
    }
}
