//! Labeled branch Hamiltonians for the qubit–buffer–qubit chain.

mod atoms;
mod branch;
mod drive;
mod hamiltonian;
mod oracle;
mod params;

pub use atoms::{Atom, Level, Occupation, Species};
pub use branch::build_branch;
pub use drive::{Channel, DriveSet, Modulation, Role, Scheme};
pub use hamiltonian::{BranchHamiltonian, Entry};
pub use oracle::{build_full_oracle, OracleSpace};
pub use params::{apply_doppler, Layout, PhysicalParams, Truncation};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid drive set: {0}")]
    Drive(String),
    #[error("invalid branch: {0}")]
    Branch(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("qubit atoms carry different Doppler shifts; no exchange-symmetric reduction")]
    AsymmetricQubits,
    #[error("two-photon driving needs a non-zero intermediate detuning")]
    MissingIntermediateDetuning,
}

pub(crate) fn check_inputs(
    occupation: Occupation,
    drives: &DriveSet,
    params: &PhysicalParams,
) -> Result<(), ModelError> {
    if occupation.count() == 0 {
        return Err(ModelError::Branch("no atom in |1⟩".into()));
    }
    if params.layout == Layout::Direct && occupation.contains(Atom::Buffer) {
        return Err(ModelError::Branch("direct layout has no buffer atom".into()));
    }
    if !(params.blockade >= 0.0) {
        return Err(ModelError::Params("blockade must be non-negative".into()));
    }
    let finite = params.blockade.is_finite()
        && params.forster_penalty.is_finite()
        && params.qubit_shift.is_finite()
        && params.intermediate_detuning.is_finite()
        && params.doppler.iter().all(|d| d.is_finite());
    if !finite {
        return Err(ModelError::Params("non-finite parameter".into()));
    }
    if drives.scheme() == Scheme::TwoPhoton && params.intermediate_detuning == 0.0 {
        return Err(ModelError::MissingIntermediateDetuning);
    }
    Ok(())
}
