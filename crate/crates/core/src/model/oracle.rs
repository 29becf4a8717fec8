//! Brute-force product-space construction.
//!
//! Every active atom carries its full level ladder; the generator is
//! assembled term by term from single-atom drives and pairwise
//! interactions, then filtered by the truncation rule. The reduced branch
//! builders are checked against this, and the two-photon reduced branches
//! are obtained from it by projection onto the qubit-exchange-symmetric
//! sector.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::model::atoms::{Atom, Level, Occupation};
use crate::model::drive::{Channel, DriveSet, Role, Scheme};
use crate::model::hamiltonian::{BranchHamiltonian, Entry};
use crate::model::params::{Layout, PhysicalParams, Truncation};
use crate::model::ModelError;

fn ladder(scheme: Scheme) -> &'static [Level] {
    match scheme {
        Scheme::OnePhoton => &[Level::Ground, Level::Rydberg, Level::Pair],
        Scheme::TwoPhoton => &[Level::Ground, Level::Intermediate, Level::Rydberg, Level::Pair],
    }
}

/// Atom pairs coupled by the Förster blockade.
fn blockade_pairs(atoms: &[Atom], layout: Layout) -> Vec<(usize, usize)> {
    let pos = |a: Atom| atoms.iter().position(|x| *x == a);
    let candidates: &[(Atom, Atom)] = match layout {
        Layout::BufferMediated => &[(Atom::Buffer, Atom::Control), (Atom::Buffer, Atom::Target)],
        Layout::Direct => &[(Atom::Control, Atom::Target)],
    };
    candidates
        .iter()
        .filter_map(|(a, b)| Some((pos(*a)?, pos(*b)?)))
        .collect()
}

/// Truncation predicate on a product state (levels in `atoms` order).
pub(crate) fn admitted(atoms: &[Atom], levels: &[Level], truncation: Truncation) -> bool {
    if truncation == Truncation::Full {
        return true;
    }
    if levels.iter().filter(|l| l.is_rydberg()).count() > 2 {
        return false;
    }
    if truncation == Truncation::RydbergPairs || atoms.len() < 3 {
        return true;
    }
    let level = |a: Atom| levels[atoms.iter().position(|x| *x == a).unwrap()];
    let (c, b, t) = (level(Atom::Control), level(Atom::Buffer), level(Atom::Target));
    let excited = levels.iter().filter(|l| l.is_excited()).count();
    let pair_present = b == Level::Pair;
    if pair_present && excited > 2 {
        return false;
    }
    let qubit_intermediate = c == Level::Intermediate || t == Level::Intermediate;
    if b == Level::Intermediate && qubit_intermediate && excited > 2 {
        return false;
    }
    true
}

/// Full product space of the active atoms, with its generator.
#[derive(Debug, Clone)]
pub struct OracleSpace {
    occupation: Occupation,
    atoms: Vec<Atom>,
    states: Vec<Vec<Level>>,
    index: HashMap<Vec<Level>, usize>,
    hamiltonian: BranchHamiltonian,
}

impl OracleSpace {
    pub fn new(
        occupation: Occupation,
        drives: &DriveSet,
        params: &PhysicalParams,
    ) -> Result<Self, ModelError> {
        super::check_inputs(occupation, drives, params)?;
        let atoms = occupation.active();
        let ladder = ladder(drives.scheme());

        let mut states: Vec<Vec<Level>> = vec![Vec::new()];
        for _ in &atoms {
            states = states
                .into_iter()
                .flat_map(|s| {
                    ladder.iter().map(move |l| {
                        let mut s = s.clone();
                        s.push(*l);
                        s
                    })
                })
                .collect();
        }
        states.retain(|s| admitted(&atoms, s, params.truncation));
        let index: HashMap<Vec<Level>, usize> =
            states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();

        let labels = states
            .iter()
            .map(|s| {
                let lv: Vec<(Atom, Level)> = atoms.iter().copied().zip(s.iter().copied()).collect();
                occupation.ket(&lv)
            })
            .collect();
        let initial = index[&vec![Level::Ground; atoms.len()]];
        let mut h = BranchHamiltonian::new(labels, initial, drives.duration());

        let channel = |atom: Atom, role: Role| {
            drives
                .get(Channel::new(atom.species(), role))
                .expect("validated drive set")
        };
        let pairs = blockade_pairs(&atoms, params.layout);
        let qubit_pair = match (
            atoms.iter().position(|a| *a == Atom::Control),
            atoms.iter().position(|a| *a == Atom::Target),
        ) {
            (Some(c), Some(t)) if params.layout == Layout::BufferMediated => Some((c, t)),
            _ => None,
        };

        for (i, s) in states.iter().enumerate() {
            for (k, (&atom, &level)) in atoms.iter().zip(s.iter()).enumerate() {
                let up = |to: Level| {
                    let mut s2 = s.clone();
                    s2[k] = to;
                    index.get(&s2).copied()
                };
                match (drives.scheme(), level) {
                    (Scheme::OnePhoton, Level::Ground) => {
                        if let Some(j) = up(Level::Rydberg) {
                            h.add_driven(channel(atom, Role::Rabi), i, j, 0.5);
                        }
                    }
                    (Scheme::TwoPhoton, Level::Ground) => {
                        if let Some(j) = up(Level::Intermediate) {
                            h.add_driven(channel(atom, Role::Rabi), i, j, 0.5);
                        }
                    }
                    (Scheme::TwoPhoton, Level::Intermediate) => {
                        if let Some(j) = up(Level::Rydberg) {
                            h.add_driven(channel(atom, Role::Coupling), i, j, 0.5);
                        }
                    }
                    _ => {}
                }
                match level {
                    Level::Rydberg | Level::Pair => {
                        h.add_driven(channel(atom, Role::Detuning), i, i, 1.0);
                        h.add_static(i, i, params.doppler_shift(atom));
                    }
                    Level::Intermediate => h.add_static(i, i, params.intermediate_detuning),
                    Level::Ground => {}
                }
            }
            for &(a, b) in &pairs {
                if s[a] == Level::Rydberg && s[b] == Level::Rydberg {
                    let mut s2 = s.clone();
                    s2[a] = Level::Pair;
                    s2[b] = Level::Pair;
                    if let Some(&j) = index.get(&s2) {
                        h.add_static(i, j, params.blockade);
                    }
                }
                if s[a] == Level::Pair && s[b] == Level::Pair {
                    h.add_static(i, i, params.forster_penalty);
                }
            }
            if let Some((c, t)) = qubit_pair {
                if s[c] == Level::Rydberg && s[t] == Level::Rydberg {
                    h.add_static(i, i, params.qubit_shift);
                }
            }
        }

        Ok(Self {
            occupation,
            atoms,
            states,
            index,
            hamiltonian: h,
        })
    }

    pub fn hamiltonian(&self) -> &BranchHamiltonian {
        &self.hamiltonian
    }

    pub fn into_hamiltonian(self) -> BranchHamiltonian {
        self.hamiltonian
    }

    pub fn occupation(&self) -> Occupation {
        self.occupation
    }

    /// Index of the state with the control and target levels exchanged.
    pub fn swapped(&self, i: usize) -> Option<usize> {
        let c = self.atoms.iter().position(|a| *a == Atom::Control)?;
        let t = self.atoms.iter().position(|a| *a == Atom::Target)?;
        let mut s = self.states[i].clone();
        s.swap(c, t);
        self.index.get(&s).copied()
    }

    fn qubit_positions(&self) -> Option<(usize, usize)> {
        Some((
            self.atoms.iter().position(|a| *a == Atom::Control)?,
            self.atoms.iter().position(|a| *a == Atom::Target)?,
        ))
    }

    /// Exchange-(anti)symmetric basis vectors over the product space, as
    /// (label, sparse components). `symmetric = false` yields only the
    /// antisymmetric partners of non-self-symmetric states.
    pub fn exchange_basis(&self, symmetric: bool) -> Result<Vec<(String, Vec<(usize, f64)>)>, ModelError> {
        let (c, t) = self.qubit_positions().ok_or_else(|| {
            ModelError::Branch("exchange symmetry needs both qubit atoms".into())
        })?;
        let labels = self.hamiltonian.basis();
        let mut out = Vec::new();
        for i in 0..self.states.len() {
            let j = self.swapped(i).ok_or_else(|| {
                ModelError::Branch("truncation rule is not exchange symmetric".into())
            })?;
            let s = &self.states[i];
            if j == i {
                if symmetric {
                    out.push((labels[i].clone(), vec![(i, 1.0)]));
                }
                continue;
            }
            // representative: control at least as excited as the target
            if s[c] < s[t] {
                continue;
            }
            if symmetric {
                out.push((
                    format!("sym({})", labels[i]),
                    vec![(i, FRAC_1_SQRT_2), (j, FRAC_1_SQRT_2)],
                ));
            } else {
                out.push((
                    format!("anti({})", labels[i]),
                    vec![(i, FRAC_1_SQRT_2), (j, -FRAC_1_SQRT_2)],
                ));
            }
        }
        Ok(out)
    }

    /// Projects the generator onto the exchange-symmetric sector.
    pub fn symmetric_projection(&self) -> Result<BranchHamiltonian, ModelError> {
        let basis = self.exchange_basis(true)?;
        let full = &self.hamiltonian;
        let initial = basis
            .iter()
            .position(|(_, v)| v.len() == 1 && v[0].0 == full.initial_index())
            .expect("ground state is exchange symmetric");
        let n = self.states.len();
        let mut owner = vec![Vec::new(); n];
        for (a, (_, v)) in basis.iter().enumerate() {
            for &(k, c) in v {
                owner[k].push((a, c));
            }
        }
        let project = |entries: &[Entry]| -> Vec<Entry> {
            let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
            let mut put = |k: usize, l: usize, w: f64| {
                for &(a, ca) in &owner[k] {
                    for &(b, cb) in &owner[l] {
                        if a <= b {
                            *acc.entry((a, b)).or_default() += ca * cb * w;
                        }
                    }
                }
            };
            for e in entries {
                put(e.row, e.col, e.weight);
                if e.row != e.col {
                    put(e.col, e.row, e.weight);
                }
            }
            let mut out: Vec<Entry> = acc
                .into_iter()
                .filter(|(_, w)| w.abs() > 1e-14 * (1.0 + w.abs()))
                .map(|((row, col), weight)| Entry { row, col, weight })
                .collect();
            out.sort_by_key(|e| (e.row, e.col));
            out
        };
        let labels = basis.iter().map(|(l, _)| l.clone()).collect();
        let mut h = BranchHamiltonian::new(labels, initial, full.duration());
        for e in project(full.static_entries()) {
            h.add_static(e.row, e.col, e.weight);
        }
        for (w, entries) in full.driven_terms() {
            for e in project(entries) {
                h.add_driven(w, e.row, e.col, e.weight);
            }
        }
        Ok(h)
    }

    /// Maps amplitudes given on a labeled reduced basis (plain kets,
    /// `sym(..)`, `anti(..)`) into the product space.
    pub fn embed(&self, labels: &[String], amplitudes: &[Complex64]) -> Result<Vec<Complex64>, ModelError> {
        let full = self.hamiltonian.basis();
        let find = |l: &str| {
            full.iter()
                .position(|x| x == l)
                .ok_or_else(|| ModelError::Branch(format!("unknown ket {l}")))
        };
        let mut out = vec![Complex64::new(0.0, 0.0); full.len()];
        for (label, &amp) in labels.iter().zip(amplitudes) {
            if let Some(inner) = label.strip_prefix("sym(").and_then(|s| s.strip_suffix(')')) {
                let i = find(inner)?;
                let j = self.swapped(i).unwrap_or(i);
                out[i] += amp * FRAC_1_SQRT_2;
                out[j] += amp * FRAC_1_SQRT_2;
            } else if let Some(inner) = label.strip_prefix("anti(").and_then(|s| s.strip_suffix(')')) {
                let i = find(inner)?;
                let j = self.swapped(i).unwrap_or(i);
                out[i] += amp * FRAC_1_SQRT_2;
                out[j] -= amp * FRAC_1_SQRT_2;
            } else {
                out[find(label)?] += amp;
            }
        }
        Ok(out)
    }
}

/// Full product-space generator for the given active atoms.
pub fn build_full_oracle(
    occupation: Occupation,
    drives: &DriveSet,
    params: &PhysicalParams,
) -> Result<BranchHamiltonian, ModelError> {
    Ok(OracleSpace::new(occupation, drives, params)?.into_hamiltonian())
}
