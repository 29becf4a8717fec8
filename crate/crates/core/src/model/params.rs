use serde::{Deserialize, Serialize};

use crate::model::atoms::Atom;
use crate::units::mhz;

/// Which atom pairs interact through the blockade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Buffer between two qubits: blockade acts on (buffer, control) and
    /// (buffer, target); the qubit pair only feels the residual shift δ_r.
    #[default]
    BufferMediated,
    /// Two neighbouring qubit atoms with direct blockade, no buffer.
    Direct,
}

/// Rule deciding which multiply-excited product states are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// At most two atoms in the Rydberg manifold (|r⟩, |q⟩ and primes).
    RydbergPairs,
    /// `RydbergPairs`, and for three active atoms additionally drop the
    /// two-photon states outside the drawn linkage pattern: a Förster pair
    /// together with a third excited atom, and the buffer intermediate
    /// level together with a qubit intermediate level and a further
    /// excitation (|e'ee'⟩, |r'ee'⟩). Identical to `RydbergPairs` for
    /// one-photon driving.
    #[default]
    Linkage,
    /// Every product state, triply excited ones included. Only useful for
    /// checking the no-interaction limit, where the pair rule no longer
    /// holds.
    Full,
}

/// Physical constants of the three-atom system. All frequencies in rad/µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Förster coupling B between |r r'⟩ and |q q'⟩.
    pub blockade: f64,
    /// Energy penalty δ_q of the |q q'⟩ pair state.
    pub forster_penalty: f64,
    /// Residual diagonal shift δ_r of |r'⟩|r'⟩ on the two qubit atoms.
    pub qubit_shift: f64,
    /// One-photon detuning Δ0 of the intermediate level (two-photon scheme).
    pub intermediate_detuning: f64,
    /// Static Doppler shift k·v per atom, in chain order (c, b, t).
    pub doppler: [f64; 3],
    /// Beam direction, ±1; multiplies every Doppler shift.
    pub doppler_sign: f64,
    #[serde(default)]
    pub layout: Layout,
    #[serde(default)]
    pub truncation: Truncation,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            blockade: mhz(50.0),
            forster_penalty: 0.0,
            qubit_shift: 0.0,
            intermediate_detuning: mhz(5000.0),
            doppler: [0.0; 3],
            doppler_sign: 1.0,
            layout: Layout::BufferMediated,
            truncation: Truncation::Linkage,
        }
    }
}

impl PhysicalParams {
    pub fn with_blockade(mut self, blockade: f64) -> Self {
        self.blockade = blockade;
        self
    }

    pub fn with_qubit_shift(mut self, shift: f64) -> Self {
        self.qubit_shift = shift;
        self
    }

    /// Signed Doppler shift applied to `atom`'s Rydberg levels.
    pub fn doppler_shift(&self, atom: Atom) -> f64 {
        self.doppler_sign * self.doppler[atom.index()]
    }

    pub fn qubits_symmetric(&self) -> bool {
        self.doppler[Atom::Control.index()] == self.doppler[Atom::Target.index()]
    }
}

/// Returns `params` with the given per-atom shifts and beam direction.
///
/// The shift lands on the Rydberg-state detuning of each atom only; in the
/// two-photon scheme the intermediate level is untouched.
pub fn apply_doppler(params: &PhysicalParams, shifts: [f64; 3], sign: f64) -> PhysicalParams {
    PhysicalParams {
        doppler: shifts,
        doppler_sign: sign.signum(),
        ..params.clone()
    }
}
