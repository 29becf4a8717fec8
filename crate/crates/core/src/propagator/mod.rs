//! Adaptive integration of i dψ/dt = H(t) ψ for branch Hamiltonians.

mod tableau;

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{apply_doppler, BranchHamiltonian, ModelError, PhysicalParams};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MIN_TOL: f64 = 1e-13;
pub const MAX_TOL: f64 = 1e-6;
/// Population below which the phase of the initial ket is reported as a gap.
pub const PHASE_GAP_POPULATION: f64 = 1e-14;
/// Minimum internal sampling density used for phase unwrapping.
pub const MIN_UNWRAP_SAMPLES: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagateError {
    #[error("initial state has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("state has {got} amplitudes, basis has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("tolerance {0} outside [1e-13, 1e-6]")]
    Tolerance(f64),
    #[error("empty or reversed time interval [{0}, {1}]")]
    Interval(f64, f64),
    #[error("non-finite generator or state at t = {0} µs")]
    NonFinite(f64),
    #[error("step size underflow at t = {0} µs")]
    StepUnderflow(f64),
    #[error("need at least 2 samples")]
    Samples,
    #[error(transparent)]
    Model(#[from] ModelError),
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;
// inputs may come out of an earlier propagation, which drifts by up to 1e-9
const NORM_SLACK: f64 = 1e-8;
const DRIFT_SLACK: f64 = 1e-9;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// DOP853 stepper with FSAL and scaled error control over the complex
/// amplitudes (absolute and relative tolerance both `tol`).
struct Solver<'a> {
    h: &'a BranchHamiltonian,
    tol: f64,
    t: f64,
    y: Vec<Complex64>,
    f: Vec<Complex64>,
    k: Vec<Vec<Complex64>>,
    y_new: Vec<Complex64>,
    f_new: Vec<Complex64>,
    tmp: Vec<Complex64>,
    step: Option<f64>,
    evaluations: usize,
}

impl<'a> Solver<'a> {
    fn new(h: &'a BranchHamiltonian, psi0: &[Complex64], t0: f64, tol: f64) -> Self {
        let n = psi0.len();
        let mut f = vec![ZERO; n];
        h.apply(t0, psi0, &mut f);
        Self {
            h,
            tol,
            t: t0,
            y: psi0.to_vec(),
            f,
            k: vec![vec![ZERO; n]; tableau::STAGES],
            y_new: vec![ZERO; n],
            f_new: vec![ZERO; n],
            tmp: vec![ZERO; n],
            step: None,
            evaluations: 1,
        }
    }

    fn scale(&self, i: usize) -> f64 {
        self.tol + self.tol * self.y[i].norm().max(self.y_new[i].norm())
    }

    fn initial_step(&mut self, span: f64) -> f64 {
        let n = self.y.len() as f64;
        let rms = |v: &[Complex64], y: &[Complex64], tol: f64| {
            (v.iter()
                .zip(y)
                .map(|(a, b)| (a.norm() / (tol + tol * b.norm())).powi(2))
                .sum::<f64>()
                / n)
                .sqrt()
        };
        let d0 = rms(&self.y, &self.y, self.tol);
        let d1 = rms(&self.f, &self.y, self.tol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
        for i in 0..self.y.len() {
            self.tmp[i] = self.y[i] + self.f[i] * h0;
        }
        self.h.apply(self.t + h0, &self.tmp, &mut self.f_new);
        self.evaluations += 1;
        let diff: Vec<Complex64> = self.f_new.iter().zip(&self.f).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff, &self.y, self.tol) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Attempts one step of size `h`; fills `y_new`, `f_new` and returns the
    /// scaled error norm.
    fn attempt(&mut self, h: f64) -> f64 {
        let n = self.y.len();
        self.k[0].copy_from_slice(&self.f);
        for s in 1..tableau::STAGES {
            for i in 0..n {
                let mut acc = ZERO;
                for j in 0..s {
                    let a = tableau::A[s][j];
                    if a != 0.0 {
                        acc += self.k[j][i] * a;
                    }
                }
                self.tmp[i] = self.y[i] + acc * h;
            }
            let rest = &mut self.k[s..];
            self.h.apply(self.t + tableau::C[s] * h, &self.tmp, &mut rest[0]);
        }
        for i in 0..n {
            let mut acc = ZERO;
            for j in 0..tableau::STAGES {
                acc += self.k[j][i] * tableau::B[j];
            }
            self.y_new[i] = self.y[i] + acc * h;
        }
        self.h.apply(self.t + h, &self.y_new, &mut self.f_new);
        self.evaluations += tableau::STAGES;

        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for i in 0..n {
            let mut a5 = ZERO;
            let mut a3 = ZERO;
            for j in 0..tableau::STAGES {
                a5 += self.k[j][i] * tableau::E5[j];
                a3 += self.k[j][i] * tableau::E3[j];
            }
            let sc = self.scale(i);
            e5 += (a5 / sc).norm_sqr();
            e3 += (a3 / sc).norm_sqr();
        }
        if e5 == 0.0 && e3 == 0.0 {
            return 0.0;
        }
        h.abs() * e5 / ((e5 + 0.01 * e3) * n as f64).sqrt()
    }

    /// Integrates up to exactly `t_end`.
    fn advance(&mut self, t_end: f64) -> Result<(), PropagateError> {
        let mut h = match self.step {
            Some(h) => h,
            None => self.initial_step(t_end - self.t),
        };
        let mut rejected = false;
        while self.t < t_end {
            let min_step = 10.0 * f64::EPSILON * self.t.abs().max(1e-3);
            if h < min_step {
                return Err(PropagateError::StepUnderflow(self.t));
            }
            let last = self.t + h >= t_end;
            let h_try = if last { t_end - self.t } else { h };
            let err = self.attempt(h_try);
            if !err.is_finite() {
                return Err(PropagateError::NonFinite(self.t));
            }
            if err < 1.0 {
                let mut factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    MAX_FACTOR.min(SAFETY * err.powf(ERROR_EXPONENT))
                };
                if rejected {
                    factor = factor.min(1.0);
                }
                self.t = if last { t_end } else { self.t + h_try };
                std::mem::swap(&mut self.y, &mut self.y_new);
                std::mem::swap(&mut self.f, &mut self.f_new);
                // keep the unclipped step for the next call
                h = if last { h.max(h_try * factor) } else { h_try * factor };
                rejected = false;
            } else {
                h = h_try * MIN_FACTOR.max(SAFETY * err.powf(ERROR_EXPONENT));
                rejected = true;
            }
        }
        self.step = Some(h);
        Ok(())
    }
}

fn check_request(
    h: &BranchHamiltonian,
    psi0: &[Complex64],
    tol: f64,
    slack: f64,
) -> Result<(), PropagateError> {
    if psi0.len() != h.dim() {
        return Err(PropagateError::Dimension {
            expected: h.dim(),
            got: psi0.len(),
        });
    }
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(PropagateError::Tolerance(tol));
    }
    let norm = norm(psi0);
    if !norm.is_finite() || (norm - 1.0).abs() > slack {
        return Err(PropagateError::NotNormalized(norm));
    }
    if !h.is_finite() {
        return Err(PropagateError::NonFinite(0.0));
    }
    Ok(())
}

pub fn norm(psi: &[Complex64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Evolves `psi0` from `t0` to `t1` (µs) under `h`.
pub fn propagate(
    h: &BranchHamiltonian,
    psi0: &[Complex64],
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Vec<Complex64>, PropagateError> {
    check_request(h, psi0, tol, NORM_SLACK)?;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(PropagateError::Interval(t0, t1));
    }
    let mut solver = Solver::new(h, psi0, t0, tol);
    solver.advance(t1)?;
    Ok(solver.y)
}

/// Evolves over the whole pulse `[0, h.duration()]`.
pub fn propagate_pulse(
    h: &BranchHamiltonian,
    psi0: &[Complex64],
    tol: f64,
) -> Result<Vec<Complex64>, PropagateError> {
    propagate(h, psi0, 0.0, h.duration(), tol)
}

/// The computational basis vector of `h`'s initial ket.
pub fn initial_state(h: &BranchHamiltonian) -> Vec<Complex64> {
    let mut psi = vec![ZERO; h.dim()];
    psi[h.initial_index()] = Complex64::new(1.0, 0.0);
    psi
}

/// Applies the pulse built by `build` twice: first with the Doppler shifts
/// at sign +1, then with the beam direction reversed (sign −1).
pub fn propagate_dual<F>(
    build: F,
    params: &PhysicalParams,
    shifts: [f64; 3],
    psi0: &[Complex64],
    tol: f64,
) -> Result<Vec<Complex64>, PropagateError>
where
    F: Fn(&PhysicalParams) -> Result<BranchHamiltonian, ModelError>,
{
    let forward = build(&apply_doppler(params, shifts, 1.0))?;
    let backward = build(&apply_doppler(params, shifts, -1.0))?;
    propagate_sequence(&[&forward, &backward], psi0, tol)
}

/// Applies full pulses one after another. Intermediate states are carried
/// over as they are, so their norm drift accumulates.
pub fn propagate_sequence(
    pulses: &[&BranchHamiltonian],
    psi0: &[Complex64],
    tol: f64,
) -> Result<Vec<Complex64>, PropagateError> {
    let mut psi = psi0.to_vec();
    for (k, h) in pulses.iter().enumerate() {
        let slack = if k == 0 { NORM_SLACK } else { DRIFT_SLACK * k as f64 };
        check_request(h, &psi, tol, slack)?;
        let mut solver = Solver::new(h, &psi, 0.0, tol);
        solver.advance(h.duration())?;
        psi = solver.y;
    }
    Ok(psi)
}

/// One sample of the initial-ket amplitude along the pulse.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TrajectoryPoint {
    /// µs
    pub time: f64,
    pub population: f64,
    /// Unwrapped phase in rad; `None` where the population is below
    /// [`PHASE_GAP_POPULATION`].
    pub phase: Option<f64>,
}

/// Population and continuously unwrapped phase of ⟨initial|ψ(t)⟩ at
/// `samples` equally spaced times over the pulse, starting from `psi0`.
pub fn phase_trajectory(
    h: &BranchHamiltonian,
    psi0: &[Complex64],
    samples: usize,
    tol: f64,
) -> Result<Vec<TrajectoryPoint>, PropagateError> {
    if samples < 2 {
        return Err(PropagateError::Samples);
    }
    check_request(h, psi0, tol, NORM_SLACK)?;
    // refine the internal grid so that consecutive samples stay on the
    // same branch
    let sub = (MIN_UNWRAP_SAMPLES - 1).div_ceil(samples - 1).max(1);
    let intervals = (samples - 1) * sub;
    let t_end = h.duration();
    let ix = h.initial_index();
    let mut solver = Solver::new(h, psi0, 0.0, tol);

    let mut out = Vec::with_capacity(samples);
    let mut unwrap = Unwrapper::default();
    for k in 0..=intervals {
        let t = t_end * k as f64 / intervals as f64;
        if k > 0 {
            solver.advance(t)?;
        }
        let amp = solver.y[ix];
        let phase = unwrap.push(amp);
        if k % sub == 0 {
            out.push(TrajectoryPoint {
                time: t,
                population: amp.norm_sqr(),
                phase,
            });
        }
    }
    Ok(out)
}

/// Nearest-branch phase continuation across samples, skipping gaps.
#[derive(Debug, Default)]
struct Unwrapper {
    last: Option<f64>,
}

impl Unwrapper {
    fn push(&mut self, amp: Complex64) -> Option<f64> {
        if amp.norm_sqr() < PHASE_GAP_POPULATION {
            return None;
        }
        let raw = amp.arg();
        let phase = match self.last {
            None => raw,
            Some(prev) => prev + wrap(raw - prev),
        };
        self.last = Some(phase);
        Some(phase)
    }
}

/// Maps an angle to (−π, π].
pub fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Writes trajectories as CSV with columns `branch,time_us,population,phase_rad`;
/// gaps leave the phase field empty.
pub fn write_trajectories_csv<W: Write>(
    mut w: W,
    branches: &[(String, Vec<TrajectoryPoint>)],
) -> std::io::Result<()> {
    writeln!(w, "branch,time_us,population,phase_rad")?;
    for (label, points) in branches {
        for p in points {
            match p.phase {
                Some(ph) => writeln!(w, "{label},{:.9},{:.15e},{:.15e}", p.time, p.population, ph)?,
                None => writeln!(w, "{label},{:.9},{:.15e},", p.time, p.population)?,
            }
        }
    }
    Ok(())
}
