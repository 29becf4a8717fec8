//! Gate assembly from branch propagations: diagonal gate matrix, analytic
//! local-phase compensation and average gate error.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    build_branch, build_full_oracle, BranchHamiltonian, DriveSet, Layout,
    ModelError, Occupation, PhysicalParams,
};
use crate::propagator::{self, initial_state, propagate_pulse, wrap, PropagateError, DEFAULT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("missing branch {0}")]
    MissingBranch(String),
    #[error("branch {0} has vanishing return amplitude; compensation undefined")]
    Degenerate(String),
    #[error("task {task} does not fit the {layout:?} layout")]
    Layout { task: GateTask, layout: Layout },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Propagate(#[from] PropagateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateTask {
    /// Controlled-Z between the two qubit atoms, buffer prepared in |1⟩.
    Cz,
    /// Controlled-controlled-Z with the buffer as the middle qubit.
    Ccz,
}

impl GateTask {
    pub fn dim(self) -> usize {
        match self {
            GateTask::Cz => 4,
            GateTask::Ccz => 8,
        }
    }

    /// Computational labels in matrix order: "ct" for CZ, "cbt" for CCZ.
    pub fn labels(self) -> Vec<String> {
        let bits = match self {
            GateTask::Cz => 2,
            GateTask::Ccz => 3,
        };
        (0..1usize << bits)
            .map(|k| format!("{k:0width$b}", width = bits))
            .collect()
    }

    /// Diagonal of the ideal gate.
    pub fn target(self) -> Vec<Complex64> {
        let d = self.dim();
        (0..d)
            .map(|k| Complex64::new(if k == d - 1 { -1.0 } else { 1.0 }, 0.0))
            .collect()
    }
}

impl fmt::Display for GateTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateTask::Cz => "cz",
            GateTask::Ccz => "ccz",
        })
    }
}

impl FromStr for GateTask {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cz" => Ok(GateTask::Cz),
            "ccz" => Ok(GateTask::Ccz),
            other => Err(format!("unknown gate task '{other}'")),
        }
    }
}

/// How the pulse is applied in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseMode {
    /// One pulse, Doppler shifts at the configured sign.
    #[default]
    Single,
    /// The pulse twice, second time with the beam direction reversed.
    Dual,
    /// The pulse twice in the same direction (the non-reversed counterpart
    /// of `Dual`).
    Repeated,
}

/// Which atoms start in |1⟩ for a computational label, or `None` if the
/// branch is trivially idle (entry 1).
pub fn branch_occupation(task: GateTask, layout: Layout, label: &str) -> Result<Option<Occupation>, GateError> {
    let bits: Vec<bool> = label.chars().map(|c| c == '1').collect();
    let bad = || GateError::MissingBranch(label.to_string());
    if label.chars().any(|c| c != '0' && c != '1') {
        return Err(bad());
    }
    let occ = match (task, layout, bits.as_slice()) {
        (GateTask::Cz, Layout::BufferMediated, [c, t]) => Occupation::new(*c, true, *t),
        (GateTask::Cz, Layout::Direct, [c, t]) => Occupation::new(*c, false, *t),
        (GateTask::Ccz, Layout::BufferMediated, [c, b, t]) => Occupation::new(*c, *b, *t),
        (GateTask::Ccz, Layout::Direct, [_, _, _]) => {
            return Err(GateError::Layout { task, layout })
        }
        _ => return Err(bad()),
    };
    Ok((occ.count() > 0).then_some(occ))
}

/// Builds the generator for one branch; falls back to the product-space
/// construction when the qubit atoms are not exchange symmetric.
pub fn branch_hamiltonian(
    occupation: Occupation,
    drives: &DriveSet,
    params: &PhysicalParams,
) -> Result<BranchHamiltonian, ModelError> {
    match build_branch(occupation, drives, params) {
        Err(ModelError::AsymmetricQubits) => build_full_oracle(occupation, drives, params),
        other => other,
    }
}

/// Everything needed to evaluate one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSetup {
    pub drives: DriveSet,
    pub params: PhysicalParams,
    pub task: GateTask,
    pub pulse: PulseMode,
    pub tol: f64,
}

impl GateSetup {
    pub fn new(drives: DriveSet, params: PhysicalParams, task: GateTask) -> Self {
        Self {
            drives,
            params,
            task,
            pulse: PulseMode::Single,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_pulse(mut self, pulse: PulseMode) -> Self {
        self.pulse = pulse;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Total gate time in µs.
    pub fn duration(&self) -> f64 {
        match self.pulse {
            PulseMode::Single => self.drives.duration(),
            PulseMode::Dual | PulseMode::Repeated => 2.0 * self.drives.duration(),
        }
    }
}

/// Final state of one branch, with its basis.
#[derive(Debug, Clone)]
pub struct BranchOutcome {
    pub label: String,
    pub basis: Vec<String>,
    pub initial_index: usize,
    pub state: Vec<Complex64>,
}

impl BranchOutcome {
    pub fn amplitude(&self) -> Complex64 {
        self.state[self.initial_index]
    }
}

/// Propagates one computational branch; `None` for an idle branch.
pub fn simulate_branch(setup: &GateSetup, label: &str) -> Result<Option<BranchOutcome>, GateError> {
    let Some(occ) = branch_occupation(setup.task, setup.params.layout, label)? else {
        return Ok(None);
    };
    let p = &setup.params;
    let build = |q: &PhysicalParams| branch_hamiltonian(occ, &setup.drives, q);
    let (h, state) = match setup.pulse {
        PulseMode::Single => {
            let h = build(p)?;
            let s = propagate_pulse(&h, &initial_state(&h), setup.tol)?;
            (h, s)
        }
        PulseMode::Dual => {
            let h = build(p)?;
            let s = propagator::propagate_dual(build, p, p.doppler, &initial_state(&h), setup.tol)?;
            (h, s)
        }
        PulseMode::Repeated => {
            let h = build(p)?;
            let s = propagator::propagate_sequence(&[&h, &h], &initial_state(&h), setup.tol)?;
            (h, s)
        }
    };
    Ok(Some(BranchOutcome {
        label: label.to_string(),
        basis: h.basis().to_vec(),
        initial_index: h.initial_index(),
        state,
    }))
}

/// Diagonal of the gate matrix, one entry per computational label (idle
/// branches contribute 1).
pub fn assemble_gate_matrix(
    task: GateTask,
    outcomes: &[(String, Option<Complex64>)],
) -> Result<Vec<Complex64>, GateError> {
    task.labels()
        .iter()
        .map(|l| {
            outcomes
                .iter()
                .find(|(k, _)| k == l)
                .map(|(_, a)| a.unwrap_or(Complex64::new(1.0, 0.0)))
                .ok_or_else(|| GateError::MissingBranch(l.clone()))
        })
        .collect()
}

/// Local phase corrections (rad) applied as exp(i·angle) per qubit in |1⟩.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Compensation {
    pub global: f64,
    pub control: f64,
    pub target: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub buffer: Option<f64>,
}

/// Analytic single-qubit phase compensation of a diagonal gate. Returns
/// the angles, the compensated diagonal and the conditional-phase
/// residual wrapped to (−π, π].
pub fn compensate_local_phases(
    task: GateTask,
    diag: &[Complex64],
) -> Result<(Compensation, Vec<Complex64>, f64), GateError> {
    let labels = task.labels();
    if diag.len() != task.dim() {
        return Err(GateError::MissingBranch(format!("{} entries", diag.len())));
    }
    for (l, z) in labels.iter().zip(diag) {
        if z.norm() < 1e-14 {
            return Err(GateError::Degenerate(l.clone()));
        }
    }
    let ph: Vec<f64> = diag.iter().map(|z| z.arg()).collect();
    let (angles, residual) = match task {
        GateTask::Cz => {
            let angles = Compensation {
                global: -ph[0],
                control: -(ph[2] - ph[0]),
                target: -(ph[1] - ph[0]),
                buffer: None,
            };
            (angles, wrap(ph[3] - ph[2] - ph[1] + ph[0] - PI))
        }
        GateTask::Ccz => {
            // index bits: c = 4, b = 2, t = 1
            let angles = Compensation {
                global: -ph[0],
                control: -(ph[4] - ph[0]),
                target: -(ph[1] - ph[0]),
                buffer: Some(-(ph[2] - ph[0])),
            };
            let chi = ph[7] - ph[6] - ph[5] - ph[3] + ph[4] + ph[2] + ph[1] - ph[0];
            (angles, wrap(chi - PI))
        }
    };
    let compensated = diag
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let (c, b, t) = match task {
                GateTask::Cz => (k >> 1 & 1, 0, k & 1),
                GateTask::Ccz => (k >> 2 & 1, k >> 1 & 1, k & 1),
            };
            let a = angles.global
                + c as f64 * angles.control
                + t as f64 * angles.target
                + b as f64 * angles.buffer.unwrap_or(0.0);
            z * Complex64::from_polar(1.0, a)
        })
        .collect();
    Ok((angles, compensated, residual))
}

/// Average gate error 1 − (Tr(MM†) + |Tr(M T†)|²)/(d(d+1)) of a diagonal
/// gate against the task's target.
pub fn gate_error(task: GateTask, diag: &[Complex64]) -> f64 {
    let d = task.dim() as f64;
    let target = task.target();
    let tr_mm: f64 = diag.iter().map(|z| z.norm_sqr()).sum();
    let overlap: Complex64 = diag.iter().zip(&target).map(|(m, t)| m * t.conj()).sum();
    let f = (tr_mm + overlap.norm_sqr()) / (d * (d + 1.0));
    (1.0 - f).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub label: String,
    pub population: f64,
    /// arg of the return amplitude, rad.
    pub phase: f64,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub task: GateTask,
    pub pulse: PulseMode,
    pub branches: Vec<BranchReport>,
    pub compensation: Compensation,
    /// Conditional-phase residual, rad, in (−π, π].
    pub residual: f64,
    pub error: f64,
}

impl GateReport {
    pub fn from_diagonal(task: GateTask, pulse: PulseMode, diag: &[Complex64]) -> Result<Self, GateError> {
        let (compensation, compensated, residual) = compensate_local_phases(task, diag)?;
        let branches = task
            .labels()
            .into_iter()
            .zip(diag)
            .map(|(label, z)| BranchReport {
                label,
                population: z.norm_sqr(),
                phase: z.arg(),
                leakage: 1.0 - z.norm_sqr(),
            })
            .collect();
        Ok(Self {
            task,
            pulse,
            branches,
            compensation,
            residual,
            error: gate_error(task, &compensated),
        })
    }
}

/// Final states of every computational branch, in label order.
pub fn gate_outcomes(setup: &GateSetup) -> Result<Vec<(String, Option<BranchOutcome>)>, GateError> {
    setup
        .task
        .labels()
        .into_iter()
        .map(|label| Ok((label.clone(), simulate_branch(setup, &label)?)))
        .collect()
}

/// Propagates every branch and returns the gate diagonal.
pub fn gate_diagonal(setup: &GateSetup) -> Result<Vec<Complex64>, GateError> {
    let outcomes: Vec<(String, Option<Complex64>)> = gate_outcomes(setup)?
        .into_iter()
        .map(|(l, o)| (l, o.map(|o| o.amplitude())))
        .collect();
    assemble_gate_matrix(setup.task, &outcomes)
}

pub fn run_gate(setup: &GateSetup) -> Result<GateReport, GateError> {
    GateReport::from_diagonal(setup.task, setup.pulse, &gate_diagonal(setup)?)
}
