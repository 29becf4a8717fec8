use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::atoms::Species;
use crate::model::ModelError;
use crate::waveform::{WaveformKind, WaveformSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    OnePhoton,
    TwoPhoton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulation {
    /// Amplitude and frequency (detuning) modulation.
    Hybrid,
    /// Only Rabi amplitudes vary; every detuning is constant.
    AmplitudeOnly,
}

/// What a channel drives on its species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    /// |1⟩↔|r⟩ (one-photon) or the lower leg |1⟩↔|e⟩ (two-photon).
    Rabi,
    /// Upper leg |e⟩↔|r⟩, two-photon only.
    Coupling,
    /// Rydberg-state detuning (Δ for one-photon, δ for two-photon).
    Detuning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Channel {
    pub species: Species,
    pub role: Role,
}

impl Channel {
    pub const fn new(species: Species, role: Role) -> Self {
        Self { species, role }
    }

    /// Channels carried by a scheme, in canonical order.
    pub fn for_scheme(scheme: Scheme) -> Vec<Channel> {
        let roles: &[Role] = match scheme {
            Scheme::OnePhoton => &[Role::Rabi, Role::Detuning],
            Scheme::TwoPhoton => &[Role::Rabi, Role::Coupling, Role::Detuning],
        };
        [Species::Buffer, Species::Qubit]
            .into_iter()
            .flat_map(|s| roles.iter().map(move |r| Channel::new(s, *r)))
            .collect()
    }

    /// Conventional name: Omega1/Delta1/Omega2/Delta2 for one-photon,
    /// Omega1p/Omega1S/delta1/Omega2p/Omega2S/delta2 for two-photon.
    pub fn name(&self, scheme: Scheme) -> &'static str {
        use Role::*;
        use Species::*;
        match (scheme, self.species, self.role) {
            (Scheme::OnePhoton, Buffer, Rabi) => "Omega1",
            (Scheme::OnePhoton, Buffer, Detuning) => "Delta1",
            (Scheme::OnePhoton, Qubit, Rabi) => "Omega2",
            (Scheme::OnePhoton, Qubit, Detuning) => "Delta2",
            (Scheme::OnePhoton, _, Coupling) => "(none)",
            (Scheme::TwoPhoton, Buffer, Rabi) => "Omega1p",
            (Scheme::TwoPhoton, Buffer, Coupling) => "Omega1S",
            (Scheme::TwoPhoton, Buffer, Detuning) => "delta1",
            (Scheme::TwoPhoton, Qubit, Rabi) => "Omega2p",
            (Scheme::TwoPhoton, Qubit, Coupling) => "Omega2S",
            (Scheme::TwoPhoton, Qubit, Detuning) => "delta2",
        }
    }

    pub fn from_name(scheme: Scheme, name: &str) -> Option<Channel> {
        Channel::for_scheme(scheme)
            .into_iter()
            .find(|c| c.name(scheme) == name)
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one-photon" => Ok(Scheme::OnePhoton),
            "two-photon" => Ok(Scheme::TwoPhoton),
            other => Err(format!("unknown scheme {other:?}")),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::OnePhoton => "one-photon",
            Scheme::TwoPhoton => "two-photon",
        })
    }
}

/// Per-species control waveforms for one transition scheme. The two qubit
/// atoms always share the qubit channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSet {
    scheme: Scheme,
    modulation: Modulation,
    channels: Vec<(Channel, WaveformSpec)>,
}

impl DriveSet {
    pub fn new(
        scheme: Scheme,
        modulation: Modulation,
        channels: Vec<(Channel, WaveformSpec)>,
    ) -> Result<Self, ModelError> {
        let expected = Channel::for_scheme(scheme);
        for (c, _) in &channels {
            if !expected.contains(c) {
                return Err(ModelError::Drive(format!(
                    "channel {:?}/{:?} not used by the {scheme} scheme",
                    c.species, c.role
                )));
            }
        }
        let mut ordered = Vec::with_capacity(expected.len());
        for c in &expected {
            let mut found = channels.iter().filter(|(k, _)| k == c);
            let (_, w) = found.next().ok_or_else(|| {
                ModelError::Drive(format!("missing channel {}", c.name(scheme)))
            })?;
            if found.next().is_some() {
                return Err(ModelError::Drive(format!(
                    "duplicate channel {}",
                    c.name(scheme)
                )));
            }
            if modulation == Modulation::AmplitudeOnly
                && c.role == Role::Detuning
                && w.kind() != WaveformKind::Constant
            {
                return Err(ModelError::Drive(format!(
                    "amplitude-only modulation needs a constant {}",
                    c.name(scheme)
                )));
            }
            ordered.push((*c, w.clone()));
        }
        let d = ordered[0].1.duration();
        if ordered.iter().any(|(_, w)| w.duration() != d) {
            return Err(ModelError::Drive("channels disagree on pulse duration".into()));
        }
        Ok(Self {
            scheme,
            modulation,
            channels: ordered,
        })
    }

    /// Every channel identically zero.
    pub fn idle(scheme: Scheme) -> Self {
        let channels = Channel::for_scheme(scheme)
            .into_iter()
            .map(|c| (c, WaveformSpec::zero()))
            .collect();
        Self {
            scheme,
            modulation: Modulation::AmplitudeOnly,
            channels,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn channels(&self) -> &[(Channel, WaveformSpec)] {
        &self.channels
    }

    pub fn get(&self, channel: Channel) -> Option<&WaveformSpec> {
        self.channels
            .iter()
            .find(|(c, _)| *c == channel)
            .map(|(_, w)| w)
    }

    pub fn by_name(&self, name: &str) -> Option<&WaveformSpec> {
        Channel::from_name(self.scheme, name).and_then(|c| self.get(c))
    }

    /// Pulse duration shared by every channel (µs).
    pub fn duration(&self) -> f64 {
        self.channels[0].1.duration()
    }

    /// Replaces one channel's waveform.
    pub fn with_channel(&self, channel: Channel, waveform: WaveformSpec) -> Result<Self, ModelError> {
        let channels = self
            .channels
            .iter()
            .map(|(c, w)| (*c, if *c == channel { waveform.clone() } else { w.clone() }))
            .collect();
        Self::new(self.scheme, self.modulation, channels)
    }
}
