//! Reduced branch systems.
//!
//! One-photon branches are written out directly from their linkage
//! patterns; the exchange-symmetric combinations of the two identically
//! driven qubit atoms carry the √2-enhanced couplings. Two-photon branches
//! (and untruncated one-photon branches) are obtained from the
//! product-space construction, projected onto the exchange-symmetric
//! sector whenever both qubit atoms are active.

use std::f64::consts::SQRT_2;

use crate::model::atoms::{Atom, Level, Occupation};
use crate::model::drive::{Channel, DriveSet, Role, Scheme};
use crate::model::hamiltonian::BranchHamiltonian;
use crate::model::oracle::OracleSpace;
use crate::model::params::{Layout, PhysicalParams, Truncation};
use crate::model::{check_inputs, ModelError};
use crate::waveform::WaveformSpec;

/// Builds the reduced generator for the branch starting from `occupation`.
pub fn build_branch(
    occupation: Occupation,
    drives: &DriveSet,
    params: &PhysicalParams,
) -> Result<BranchHamiltonian, ModelError> {
    check_inputs(occupation, drives, params)?;
    let both_qubits = occupation.contains(Atom::Control) && occupation.contains(Atom::Target);
    if both_qubits && !params.qubits_symmetric() {
        return Err(ModelError::AsymmetricQubits);
    }
    match (drives.scheme(), params.truncation) {
        (Scheme::OnePhoton, Truncation::RydbergPairs | Truncation::Linkage) => Ok(one_photon(occupation, drives, params)),
        _ => {
            let space = OracleSpace::new(occupation, drives, params)?;
            let h = if both_qubits {
                space.symmetric_projection()?
            } else {
                space.into_hamiltonian()
            };
            Ok(h.prune_unreachable())
        }
    }
}

struct Ket<'a> {
    occupation: Occupation,
    levels: Vec<(Atom, Level)>,
    wrap: Option<&'a str>,
}

impl Ket<'_> {
    fn label(&self) -> String {
        let k = self.occupation.ket(&self.levels);
        match self.wrap {
            Some(w) => format!("{w}({k})"),
            None => k,
        }
    }
}

fn one_photon(occ: Occupation, drives: &DriveSet, params: &PhysicalParams) -> BranchHamiltonian {
    use Level::{Pair as Q, Rydberg as R};
    let buffer_rabi = rabi(drives, Atom::Buffer);
    let qubit_rabi = rabi(drives, Atom::Control);
    let buffer_det = detuning(drives, Atom::Buffer);
    let qubit_det = detuning(drives, Atom::Control);
    let kb = params.doppler_shift(Atom::Buffer);
    let kc = params.doppler_shift(Atom::Control);
    let kt = params.doppler_shift(Atom::Target);
    let duration = drives.duration();

    let ket = |levels: &[(Atom, Level)]| Ket {
        occupation: occ,
        levels: levels.to_vec(),
        wrap: None,
    };
    let sym = |levels: &[(Atom, Level)]| Ket {
        occupation: occ,
        levels: levels.to_vec(),
        wrap: Some("sym"),
    };
    let anti = |levels: &[(Atom, Level)]| Ket {
        occupation: occ,
        levels: levels.to_vec(),
        wrap: Some("anti"),
    };
    let make = |kets: Vec<Ket>| {
        let labels = kets.iter().map(Ket::label).collect();
        BranchHamiltonian::new(labels, 0, duration)
    };

    let active = occ.active();
    match active.as_slice() {
        // single atom: |1⟩ ↔ |r⟩
        [atom] => {
            let (omega, delta) = if *atom == Atom::Buffer {
                (buffer_rabi, buffer_det)
            } else {
                (qubit_rabi, qubit_det)
            };
            let mut h = make(vec![ket(&[]), ket(&[(*atom, R)])]);
            h.add_driven(omega, 0, 1, 0.5);
            h.add_driven(delta, 1, 1, 1.0);
            h.add_static(1, 1, params.doppler_shift(*atom));
            h
        }
        // buffer with one qubit: |11⟩, |r1⟩, |1r'⟩, |rr'⟩, |qq'⟩
        [a, b] if active.contains(&Atom::Buffer) => {
            let u = if *a == Atom::Buffer { *b } else { *a };
            let ku = params.doppler_shift(u);
            let mut h = make(vec![
                ket(&[]),
                ket(&[(Atom::Buffer, R)]),
                ket(&[(u, R)]),
                ket(&[(Atom::Buffer, R), (u, R)]),
                ket(&[(Atom::Buffer, Q), (u, Q)]),
            ]);
            h.add_driven(buffer_rabi, 0, 1, 0.5);
            h.add_driven(qubit_rabi, 0, 2, 0.5);
            h.add_driven(qubit_rabi, 1, 3, 0.5);
            h.add_driven(buffer_rabi, 2, 3, 0.5);
            h.add_driven(buffer_det, 1, 1, 1.0);
            h.add_driven(qubit_det, 2, 2, 1.0);
            h.add_driven(buffer_det, 3, 3, 1.0);
            h.add_driven(qubit_det, 3, 3, 1.0);
            h.add_driven(buffer_det, 4, 4, 1.0);
            h.add_driven(qubit_det, 4, 4, 1.0);
            h.add_static(1, 1, kb);
            h.add_static(2, 2, ku);
            h.add_static(3, 3, kb + ku);
            h.add_static(4, 4, kb + ku + params.forster_penalty);
            h.add_static(3, 4, params.blockade);
            h
        }
        // both qubits, no buffer: |11⟩, sym(|r'1⟩), |r'r'⟩ [, |q'q'⟩]
        [_, _] => {
            let mut kets = vec![
                ket(&[]),
                sym(&[(Atom::Control, R)]),
                ket(&[(Atom::Control, R), (Atom::Target, R)]),
            ];
            let direct = params.layout == Layout::Direct;
            if direct {
                kets.push(ket(&[(Atom::Control, Q), (Atom::Target, Q)]));
            }
            let mut h = make(kets);
            h.add_driven(qubit_rabi, 0, 1, SQRT_2 / 2.0);
            h.add_driven(qubit_rabi, 1, 2, SQRT_2 / 2.0);
            h.add_driven(qubit_det, 1, 1, 1.0);
            h.add_driven(qubit_det, 2, 2, 2.0);
            h.add_static(1, 1, kc);
            h.add_static(2, 2, kc + kt);
            if direct {
                h.add_driven(qubit_det, 3, 3, 2.0);
                h.add_static(3, 3, kc + kt + params.forster_penalty);
                h.add_static(2, 3, params.blockade);
            } else {
                h.add_static(2, 2, params.qubit_shift);
            }
            h
        }
        // all three atoms
        _ => {
            let mut h = make(vec![
                ket(&[]),                                                  // 0 |111⟩
                sym(&[(Atom::Control, R)]),                                // 1 sym(|r'11⟩)
                ket(&[(Atom::Buffer, R)]),                                 // 2 |1r1⟩
                ket(&[(Atom::Control, R), (Atom::Target, R)]),             // 3 |r'1r'⟩
                sym(&[(Atom::Control, R), (Atom::Buffer, R)]),             // 4 sym(|r'r1⟩)
                sym(&[(Atom::Control, Q), (Atom::Buffer, Q)]),             // 5 sym(|q'q1⟩)
                anti(&[(Atom::Control, R)]),                               // 6 anti(|r'11⟩)
            ]);
            let s2 = SQRT_2 / 2.0;
            h.add_driven(qubit_rabi, 0, 1, s2);
            h.add_driven(buffer_rabi, 0, 2, 0.5);
            h.add_driven(qubit_rabi, 1, 3, s2);
            h.add_driven(buffer_rabi, 1, 4, 0.5);
            h.add_driven(qubit_rabi, 2, 4, s2);
            h.add_driven(qubit_det, 1, 1, 1.0);
            h.add_driven(buffer_det, 2, 2, 1.0);
            h.add_driven(qubit_det, 3, 3, 2.0);
            h.add_driven(buffer_det, 4, 4, 1.0);
            h.add_driven(qubit_det, 4, 4, 1.0);
            h.add_driven(buffer_det, 5, 5, 1.0);
            h.add_driven(qubit_det, 5, 5, 1.0);
            h.add_driven(qubit_det, 6, 6, 1.0);
            h.add_static(1, 1, kc);
            h.add_static(2, 2, kb);
            h.add_static(3, 3, kc + kt + params.qubit_shift);
            h.add_static(4, 4, kb + kc);
            h.add_static(5, 5, kb + kc + params.forster_penalty);
            h.add_static(6, 6, kc);
            h.add_static(4, 5, params.blockade);
            h
        }
    }
}

fn rabi(drives: &DriveSet, atom: Atom) -> &WaveformSpec {
    drives
        .get(Channel::new(atom.species(), Role::Rabi))
        .expect("validated drive set")
}

fn detuning(drives: &DriveSet, atom: Atom) -> &WaveformSpec {
    drives
        .get(Channel::new(atom.species(), Role::Detuning))
        .expect("validated drive set")
}
