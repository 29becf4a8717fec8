//! State-vector model of the buffer-atom relay: a Bell pair of buffer
//! atoms, one CZ between each buffer and its neighbouring qubit, buffer
//! measurements in the (|0⟩ ± |1⟩)/√2 basis and outcome-dependent Z
//! corrections, which together act as CZ between the two distant qubits.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelayError {
    #[error("unknown register label {0}")]
    Label(String),
    #[error("outcome has probability {0:e}; post-measurement state undefined")]
    Degenerate(f64),
    #[error("depth must be at least 1")]
    Depth,
    #[error("trials must be at least 1")]
    Trials,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Result of measuring one buffer in the (|0⟩ ± |1⟩)/√2 basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Outcomes for buffers (b, f).
pub type Outcome = (Sign, Sign);

pub const OUTCOMES: [Outcome; 4] = [
    (Sign::Plus, Sign::Plus),
    (Sign::Minus, Sign::Plus),
    (Sign::Plus, Sign::Minus),
    (Sign::Minus, Sign::Minus),
];

pub fn outcome_label(o: Outcome) -> String {
    let s = |x: Sign| if x == Sign::Plus { '+' } else { '-' };
    format!("({},{})", s(o.0), s(o.1))
}

/// Labeled register of qubits; the first label is the most significant
/// bit of the amplitude index.
#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    labels: Vec<String>,
    amps: Vec<Complex64>,
}

impl Register {
    pub fn new(labels: &[&str], amps: Vec<Complex64>) -> Self {
        assert_eq!(amps.len(), 1 << labels.len(), "amplitude count");
        Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            amps,
        }
    }

    /// Product state of the given single-qubit states.
    pub fn product(qubits: &[(&str, [Complex64; 2])]) -> Self {
        let mut amps = vec![ONE];
        for (_, q) in qubits {
            amps = amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        Self {
            labels: qubits.iter().map(|(l, _)| l.to_string()).collect(),
            amps,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn bit(&self, label: &str) -> Result<usize, RelayError> {
        let k = self
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| RelayError::Label(label.to_string()))?;
        Ok(self.labels.len() - 1 - k)
    }

    /// Appends a qubit in the given state as the least significant bit.
    pub fn push(&mut self, label: &str, q: [Complex64; 2]) {
        self.amps = self.amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        self.labels.push(label.to_string());
    }

    pub fn hadamard(&mut self, label: &str) -> Result<(), RelayError> {
        let m = 1usize << self.bit(label)?;
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let (a, b) = (self.amps[i], self.amps[i | m]);
                self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                self.amps[i | m] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    pub fn z(&mut self, label: &str) -> Result<(), RelayError> {
        let m = 1usize << self.bit(label)?;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & m != 0 {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// Applies a two-qubit diagonal `diag` indexed by (bit of `a`, bit of `b`).
    pub fn diagonal2(&mut self, a: &str, b: &str, diag: &[Complex64; 4]) -> Result<(), RelayError> {
        let (ma, mb) = (1usize << self.bit(a)?, 1usize << self.bit(b)?);
        for (i, z) in self.amps.iter_mut().enumerate() {
            let k = 2 * usize::from(i & ma != 0) + usize::from(i & mb != 0);
            *z *= diag[k];
        }
        Ok(())
    }

    pub fn cz(&mut self, a: &str, b: &str) -> Result<(), RelayError> {
        self.diagonal2(a, b, &CZ)
    }

    pub fn scale(&mut self, k: Complex64) {
        self.amps.iter_mut().for_each(|z| *z *= k);
    }

    /// Projects `label` onto (|0⟩ + s|1⟩)/√2 and removes it. Returns the
    /// outcome probability; the remaining state is renormalized.
    pub fn measure_pm(&mut self, label: &str, s: Sign) -> Result<f64, RelayError> {
        let bit = self.bit(label)?;
        let m = 1usize << bit;
        let low = m - 1;
        let mut out = Vec::with_capacity(self.amps.len() / 2);
        for j in 0..self.amps.len() / 2 {
            // reinsert a zero bit at position `bit`
            let i0 = ((j & !low) << 1) | (j & low);
            out.push((self.amps[i0] + self.amps[i0 | m] * s.value()) * FRAC_1_SQRT_2);
        }
        let p: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        if p < 1e-14 {
            return Err(RelayError::Degenerate(p));
        }
        let k = 1.0 / p.sqrt();
        self.amps = out.into_iter().map(|z| z * k).collect();
        let pos = self.labels.len() - 1 - bit;
        self.labels.remove(pos);
        Ok(p)
    }

    /// Amplitudes reordered to `order`, which must be a permutation of the
    /// labels.
    pub fn reordered(&self, order: &[&str]) -> Result<Vec<Complex64>, RelayError> {
        let bits: Vec<usize> = order.iter().map(|l| self.bit(l)).collect::<Result<_, _>>()?;
        let n = order.len();
        let mut out = vec![ZERO; self.amps.len()];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut i = 0;
            for (k, b) in bits.iter().enumerate() {
                if j >> (n - 1 - k) & 1 == 1 {
                    i |= 1 << b;
                }
            }
            *slot = self.amps[i];
        }
        Ok(out)
    }
}

pub const CZ: [Complex64; 4] = [ONE, ONE, ONE, Complex64::new(-1.0, 0.0)];

/// Hadamards on both buffers of |0_b 0_f⟩ followed by CZ:
/// ½(|00⟩ + |01⟩ + |10⟩ − |11⟩).
pub fn bell_prep() -> [Complex64; 4] {
    let mut r = Register::product(&[("b", [ONE, ZERO]), ("f", [ONE, ZERO])]);
    r.hadamard("b").expect("label");
    r.hadamard("f").expect("label");
    r.cz("b", "f").expect("label");
    [r.amps[0], r.amps[1], r.amps[2], r.amps[3]]
}

/// Joint (b, f, c, t) state of the Bell-paired buffers and the qubits.
pub fn relay_input(alpha: [Complex64; 2], beta: [Complex64; 2]) -> Register {
    let bell = bell_prep();
    let mut r = Register::new(&["b", "f"], bell.to_vec());
    r.push("c", alpha);
    r.push("t", beta);
    r
}

/// CZ(b, c) and CZ(f, t).
pub fn apply_cz_pairs(joint: &Register) -> Result<Register, RelayError> {
    let mut r = joint.clone();
    r.cz("b", "c")?;
    r.cz("f", "t")?;
    Ok(r)
}

/// Projects both buffers; returns the outcome probability and the
/// normalized (c, t) state.
pub fn measure_buffers(joint: &Register, outcome: Outcome) -> Result<(f64, [Complex64; 4]), RelayError> {
    let mut r = joint.clone();
    let pb = r.measure_pm("b", outcome.0)?;
    let pf = r.measure_pm("f", outcome.1)?;
    let v = r.reordered(&["c", "t"])?;
    Ok((pb * pf, [v[0], v[1], v[2], v[3]]))
}

/// Local Z corrections on the qubits that turn the post-measurement state
/// into CZ applied to the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub z_control: bool,
    pub z_target: bool,
    /// Global sign, −1 only for the (−,−) outcome.
    pub global: f64,
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.global < 0.0 {
            parts.push("-");
        }
        if self.z_control {
            parts.push("Z_c");
        }
        if self.z_target {
            parts.push("Z_t");
        }
        if !self.z_control && !self.z_target {
            parts.push("I");
        }
        f.write_str(&parts.concat())
    }
}

pub fn correction_rotations(outcome: Outcome) -> Correction {
    match outcome {
        (Sign::Plus, Sign::Plus) => Correction { z_control: false, z_target: false, global: 1.0 },
        (Sign::Minus, Sign::Plus) => Correction { z_control: false, z_target: true, global: 1.0 },
        (Sign::Plus, Sign::Minus) => Correction { z_control: true, z_target: false, global: 1.0 },
        (Sign::Minus, Sign::Minus) => Correction { z_control: true, z_target: true, global: -1.0 },
    }
}

impl Correction {
    /// Applies the correction to a (c, t) state.
    pub fn apply(&self, psi: &[Complex64; 4]) -> [Complex64; 4] {
        let mut out = *psi;
        for (k, z) in out.iter_mut().enumerate() {
            let c = k >> 1 & 1 == 1;
            let t = k & 1 == 1;
            let mut s = self.global;
            if self.z_control && c {
                s = -s;
            }
            if self.z_target && t {
                s = -s;
            }
            *z *= s;
        }
        out
    }

    fn apply_register(&self, r: &mut Register, c: &str, t: &str) -> Result<(), RelayError> {
        if self.z_control {
            r.z(c)?;
        }
        if self.z_target {
            r.z(t)?;
        }
        r.scale(Complex64::new(self.global, 0.0));
        Ok(())
    }
}

fn random_qubit(rng: &mut ChaCha8Rng) -> [Complex64; 2] {
    loop {
        let v: [Complex64; 2] = [
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        ];
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return [v[0] / n, v[1] / n];
        }
    }
}

fn product2(a: [Complex64; 2], b: [Complex64; 2]) -> [Complex64; 4] {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

fn max_deviation(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    /// Outcome string, one (b, f) pair per relay level, outermost first.
    pub outcome: String,
    pub corrections: Vec<String>,
    pub max_deviation: f64,
    pub min_probability: f64,
    pub max_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayReport {
    pub depth: usize,
    pub trials: usize,
    pub seed: u64,
    pub max_deviation: f64,
    /// Largest |Σ_outcomes p − 1| over trials.
    pub probability_sum_error: f64,
    pub outcomes: Vec<OutcomeReport>,
}

impl RelayReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_deviation <= tol && self.probability_sum_error <= 1e-14
    }
}

/// Steps 1–4 for random product inputs and every outcome; compares the
/// corrected output with CZ applied to the input.
pub fn verify_relay(trials: usize, seed: u64) -> Result<RelayReport, RelayError> {
    bootstrap_chain(1, trials, seed)
}

/// Runs a relay CZ between `c` and `t` inside `reg`. The buffer pair is
/// Bell-prepared directly at depth 1; at depth d > 1 it is entangled by a
/// depth-(d − 1) relay CZ acting on |+⟩|+⟩. `outcomes` lists one outcome per
/// level, outermost first. Returns the probability of the outcome string.
fn relay_cz(
    reg: &mut Register,
    c: &str,
    t: &str,
    depth: usize,
    outcomes: &[Outcome],
    cz_pair: &[Complex64; 4],
) -> Result<f64, RelayError> {
    let b = format!("b{depth}");
    let f = format!("f{depth}");
    let plus = [Complex64::new(FRAC_1_SQRT_2, 0.0); 2];
    let mut prob = 1.0;
    if depth == 1 {
        let zero = [ONE, ZERO];
        reg.push(&b, zero);
        reg.push(&f, zero);
        reg.hadamard(&b)?;
        reg.hadamard(&f)?;
        reg.cz(&b, &f)?;
    } else {
        reg.push(&b, plus);
        reg.push(&f, plus);
        prob *= relay_cz(reg, &b, &f, depth - 1, &outcomes[1..], cz_pair)?;
    }
    reg.diagonal2(&b, c, cz_pair)?;
    reg.diagonal2(&f, t, cz_pair)?;
    let o = outcomes[0];
    prob *= reg.measure_pm(&b, o.0)?;
    prob *= reg.measure_pm(&f, o.1)?;
    correction_rotations(o).apply_register(reg, c, t)?;
    Ok(prob)
}

fn outcome_strings(depth: usize) -> Vec<Vec<Outcome>> {
    let mut all: Vec<Vec<Outcome>> = vec![Vec::new()];
    for _ in 0..depth {
        all = all
            .into_iter()
            .flat_map(|s| {
                OUTCOMES.iter().map(move |o| {
                    let mut s = s.clone();
                    s.push(*o);
                    s
                })
            })
            .collect();
    }
    all
}

/// Relay between distant qubits whose buffer pair is itself produced by
/// nested relays, `depth` levels deep (depth 1 is the plain relay). Every
/// one of the 4^depth outcome strings is checked on every trial.
pub fn bootstrap_chain(depth: usize, trials: usize, seed: u64) -> Result<RelayReport, RelayError> {
    run_chain(depth, trials, seed, &CZ)
}

fn run_chain(depth: usize, trials: usize, seed: u64, cz_pair: &[Complex64; 4]) -> Result<RelayReport, RelayError> {
    if depth == 0 {
        return Err(RelayError::Depth);
    }
    if trials == 0 {
        return Err(RelayError::Trials);
    }
    let strings = outcome_strings(depth);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports: Vec<OutcomeReport> = strings
        .iter()
        .map(|s| OutcomeReport {
            outcome: s.iter().map(|o| outcome_label(*o)).collect(),
            corrections: s.iter().map(|o| correction_rotations(*o).to_string()).collect(),
            max_deviation: 0.0,
            min_probability: f64::INFINITY,
            max_probability: 0.0,
        })
        .collect();
    let mut sum_error: f64 = 0.0;
    for _ in 0..trials {
        let alpha = random_qubit(&mut rng);
        let beta = random_qubit(&mut rng);
        let mut ideal = product2(alpha, beta);
        for (z, k) in ideal.iter_mut().zip(CZ) {
            *z *= k;
        }
        let mut total = 0.0;
        for (s, rep) in strings.iter().zip(reports.iter_mut()) {
            let mut reg = Register::product(&[("c", alpha), ("t", beta)]);
            let p = relay_cz(&mut reg, "c", "t", depth, s, cz_pair)?;
            let out = reg.reordered(&["c", "t"])?;
            total += p;
            rep.max_deviation = rep.max_deviation.max(max_deviation(&out, &ideal));
            rep.min_probability = rep.min_probability.min(p);
            rep.max_probability = rep.max_probability.max(p);
        }
        sum_error = sum_error.max((total - 1.0).abs());
    }
    Ok(RelayReport {
        depth,
        trials,
        seed,
        max_deviation: reports.iter().map(|r| r.max_deviation).fold(0.0, f64::max),
        probability_sum_error: sum_error,
        outcomes: reports,
    })
}

/// The plain relay with both buffer–qubit CZs replaced by the diagonal
/// `gate` (e.g. a simulated, phase-compensated gate); deviations then
/// measure how gate imperfections propagate to the distant CZ.
pub fn relay_with_simulated_cz(gate: &[Complex64; 4], trials: usize, seed: u64) -> Result<RelayReport, RelayError> {
    run_chain(1, trials, seed, gate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn bell_amplitudes() {
        let b = bell_prep();
        for (z, e) in b.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert_abs_diff_eq!(z.re, e, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn bell_prep_inverts() {
        let b = bell_prep();
        let mut r = Register::new(&["b", "f"], b.to_vec());
        r.cz("b", "f").unwrap();
        r.hadamard("b").unwrap();
        r.hadamard("f").unwrap();
        assert_abs_diff_eq!(r.amps[0].re, 1.0, epsilon = 1e-15);
        assert!(r.amps[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn buffers_in_01_flip_target_phase() {
        let alpha = [c(0.6), c(0.8)];
        let beta = [Complex64::new(0.0, 0.6), c(0.8)];
        let mut r = Register::product(&[("b", [c(1.0), c(0.0)]), ("f", [c(0.0), c(1.0)])]);
        r.push("c", alpha);
        r.push("t", beta);
        let r = apply_cz_pairs(&r).unwrap();
        // the |0_b 1_f⟩ block is the whole state
        let q = &r.amps[4..8];
        let expect = product2(alpha, [beta[0], -beta[1]]);
        assert!(max_deviation(q, &expect) < 1e-15);
    }

    #[test]
    fn measurement_patterns_for_plus_inputs() {
        let plus = [c(FRAC_1_SQRT_2); 2];
        let joint = apply_cz_pairs(&relay_input(plus, plus)).unwrap();
        let (p, s) = measure_buffers(&joint, (Sign::Plus, Sign::Plus)).unwrap();
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        for (z, e) in s.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert_abs_diff_eq!(z.re, e, epsilon = 1e-15);
        }
        let (_, s) = measure_buffers(&joint, (Sign::Minus, Sign::Minus)).unwrap();
        // (−, +, +, +)/2 up to a global sign
        let k = s[1].re.signum();
        for (z, e) in s.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
            assert_abs_diff_eq!(z.re * k, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn corrections_restore_cz() {
        let h = 0.5;
        let row3 = [c(h), c(h), c(-h), c(h)];
        let out = correction_rotations((Sign::Plus, Sign::Minus)).apply(&row3);
        assert!(max_deviation(&out, &[c(h), c(h), c(h), c(-h)]) < 1e-15);
        let row4 = [c(-h), c(h), c(h), c(h)];
        let out = correction_rotations((Sign::Minus, Sign::Minus)).apply(&row4);
        assert!(max_deviation(&out, &[c(h), c(h), c(h), c(-h)]) < 1e-15);
        assert_eq!(correction_rotations((Sign::Plus, Sign::Plus)).to_string(), "I");
    }

    #[test]
    fn cz_pairs_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amps: Vec<Complex64> = (0..16)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let r = Register::new(&["b", "f", "c", "t"], amps);
        let mut x = r.clone();
        x.cz("b", "c").unwrap();
        x.cz("f", "t").unwrap();
        let mut y = r;
        y.cz("f", "t").unwrap();
        y.cz("b", "c").unwrap();
        assert!(max_deviation(&x.amps, &y.amps) <= 1e-15);
    }

    #[test]
    fn relay_is_exact() {
        let rep = verify_relay(20, 7).unwrap();
        assert!(rep.max_deviation <= 1e-12, "{}", rep.max_deviation);
        assert!(rep.probability_sum_error <= 1e-14);
        for o in &rep.outcomes {
            assert_abs_diff_eq!(o.min_probability, 0.25, epsilon = 1e-12);
            assert_abs_diff_eq!(o.max_probability, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_input_is_fixed() {
        let zero = [c(1.0), c(0.0)];
        let joint = apply_cz_pairs(&relay_input(zero, zero)).unwrap();
        for o in OUTCOMES {
            let (_, s) = measure_buffers(&joint, o).unwrap();
            let out = correction_rotations(o).apply(&s);
            assert!(max_deviation(&out, &[c(1.0), c(0.0), c(0.0), c(0.0)]) < 1e-15);
        }
    }

    #[test]
    fn bootstrap_depth_two_covers_sixteen_strings() {
        let rep = bootstrap_chain(2, 5, 1).unwrap();
        assert_eq!(rep.outcomes.len(), 16);
        assert!(rep.max_deviation <= 1e-12);
    }

    #[test]
    fn depth_one_matches_verify() {
        assert_eq!(bootstrap_chain(1, 4, 9).unwrap(), verify_relay(4, 9).unwrap());
    }

    #[test]
    fn imperfect_cz_shows_up() {
        let mut g = CZ;
        g[3] = Complex64::from_polar(1.0, std::f64::consts::PI + 0.01);
        let rep = relay_with_simulated_cz(&g, 5, 2).unwrap();
        assert!(rep.max_deviation > 1e-4);
        assert!(rep.probability_sum_error < 1e-12);
    }
}
