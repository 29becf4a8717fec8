//! Gate scenarios: the built-in registry of published coefficient sets and
//! a TOML configuration format with explicit units.
//!
//! Channel expressions are written the way waveforms are quoted:
//!
//! * `[a0, a1, ..., aN]`: cosine-series coefficients (MHz-scale units),
//! * `9.33`: a constant, 2π × value MHz,
//! * `0.686*Omega2`: a fixed multiple of another channel of the set,
//! * `0.5*[...]`, `0.5*9.33`: a scaled literal.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate::{GateSetup, GateTask, PulseMode};
use crate::model::{Channel, DriveSet, Layout, ModelError, Modulation, PhysicalParams, Scheme, Truncation};
use crate::units::{khz, mhz};
use crate::waveform::{WaveformKind, WaveformSpec, DEFAULT_DURATION};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario id '{0}'")]
    UnknownId(String),
    #[error("channel {channel}: {message}")]
    Channel { channel: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_blockade() -> f64 {
    50.0
}

fn default_intermediate() -> f64 {
    5000.0
}

fn default_sign() -> f64 {
    1.0
}

fn default_duration() -> f64 {
    DEFAULT_DURATION
}

fn default_claim() -> f64 {
    1e-4
}

fn default_task() -> GateTask {
    GateTask::Cz
}

/// Physical parameters in laboratory units (frequencies in MHz or kHz,
/// all implicitly multiplied by 2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_blockade")]
    pub blockade_mhz: f64,
    #[serde(default)]
    pub forster_penalty_mhz: f64,
    #[serde(default)]
    pub qubit_shift_mhz: f64,
    #[serde(default = "default_intermediate")]
    pub intermediate_detuning_mhz: f64,
    /// k·v per atom (control, buffer, target).
    #[serde(default)]
    pub doppler_khz: [f64; 3],
    #[serde(default = "default_sign")]
    pub doppler_sign: f64,
    #[serde(default)]
    pub layout: Layout,
    #[serde(default)]
    pub truncation: Truncation,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            blockade_mhz: default_blockade(),
            forster_penalty_mhz: 0.0,
            qubit_shift_mhz: 0.0,
            intermediate_detuning_mhz: default_intermediate(),
            doppler_khz: [0.0; 3],
            doppler_sign: 1.0,
            layout: Layout::default(),
            truncation: Truncation::default(),
        }
    }
}

impl ParamsConfig {
    pub fn to_params(&self) -> Result<PhysicalParams, ScenarioError> {
        if !(self.blockade_mhz >= 0.0) {
            return Err(ScenarioError::Invalid("blockade_mhz must be non-negative".into()));
        }
        if self.doppler_sign.abs() != 1.0 {
            return Err(ScenarioError::Invalid("doppler_sign must be +1 or -1".into()));
        }
        Ok(PhysicalParams {
            blockade: mhz(self.blockade_mhz),
            forster_penalty: mhz(self.forster_penalty_mhz),
            qubit_shift: mhz(self.qubit_shift_mhz),
            intermediate_detuning: mhz(self.intermediate_detuning_mhz),
            doppler: self.doppler_khz.map(khz),
            doppler_sign: self.doppler_sign,
            layout: self.layout,
            truncation: self.truncation,
        })
    }
}

/// A scenario as written in a config file or the registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default)]
    pub figure: String,
    pub scheme: Scheme,
    pub modulation: Modulation,
    #[serde(default = "default_task")]
    pub task: GateTask,
    #[serde(default)]
    pub dual_pulse: bool,
    #[serde(default = "default_duration")]
    pub duration_us: f64,
    #[serde(default = "default_claim")]
    pub claimed_error: f64,
    #[serde(default)]
    pub params: ParamsConfig,
    /// Channel name → expression.
    pub channels: BTreeMap<String, String>,
}

impl ScenarioConfig {
    /// Parses TOML text; errors carry the 1-based line number.
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            ScenarioError::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

/// Parsed channel expression.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelExpr {
    Literal(WaveformSpec),
    Scaled(f64, Box<ChannelExpr>),
    Reference(String),
}

impl ChannelExpr {
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        if let Some((factor, rest)) = text.split_once('*') {
            let k: f64 = factor
                .trim()
                .parse()
                .map_err(|_| format!("bad scale factor {:?}", factor.trim()))?;
            if !k.is_finite() {
                return Err("non-finite scale factor".into());
            }
            return Ok(ChannelExpr::Scaled(k, Box::new(Self::parse(rest)?)));
        }
        if text.starts_with('[') {
            return WaveformSpec::parse(text)
                .map(ChannelExpr::Literal)
                .map_err(|e| e.to_string());
        }
        if let Ok(v) = text.parse::<f64>() {
            return WaveformSpec::constant(v)
                .map(ChannelExpr::Literal)
                .map_err(|e| e.to_string());
        }
        if !text.is_empty() && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Ok(ChannelExpr::Reference(text.to_string()));
        }
        Err(format!("cannot parse {text:?}"))
    }
}

impl fmt::Display for ChannelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelExpr::Literal(w) => match w.kind() {
                WaveformKind::Constant => write!(f, "{:?}", w.coefficients()[0]),
                WaveformKind::TimeVarying => f.write_str(&w.coefficient_list()),
            },
            ChannelExpr::Scaled(k, inner) => write!(f, "{k:?}*{inner}"),
            ChannelExpr::Reference(name) => f.write_str(name),
        }
    }
}

/// A resolved scenario, ready to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    /// Channel expressions in the scheme's canonical channel order.
    pub exprs: Vec<(Channel, ChannelExpr)>,
    pub setup: GateSetup,
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        let scheme = config.scheme;
        if !(config.duration_us > 0.0) || !config.duration_us.is_finite() {
            return Err(ScenarioError::Invalid("duration_us must be positive".into()));
        }
        let mut exprs = Vec::new();
        for (name, text) in &config.channels {
            let channel = Channel::from_name(scheme, name).ok_or_else(|| ScenarioError::Channel {
                channel: name.clone(),
                message: format!("not a {scheme} channel"),
            })?;
            let expr = ChannelExpr::parse(text).map_err(|message| ScenarioError::Channel {
                channel: name.clone(),
                message,
            })?;
            exprs.push((channel, expr));
        }
        exprs.sort_by_key(|(c, _)| *c);
        let drives = resolve(scheme, config.modulation, &exprs, config.duration_us)?;
        let params = config.params.to_params()?;
        let pulse = if config.dual_pulse { PulseMode::Dual } else { PulseMode::Single };
        let setup = GateSetup::new(drives, params, config.task).with_pulse(pulse);
        Ok(Self { config, exprs, setup })
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    /// Literal coefficients that can be varied, in channel order, as
    /// (channel, kind, coefficients).
    pub fn free_channels(&self) -> Vec<(Channel, WaveformKind, Vec<f64>)> {
        self.exprs
            .iter()
            .filter_map(|(c, e)| {
                let w = literal(e)?;
                Some((*c, w.kind(), w.coefficients().to_vec()))
            })
            .collect()
    }

    /// Concatenated free coefficients.
    pub fn free_vector(&self) -> Vec<f64> {
        self.free_channels().into_iter().flat_map(|(_, _, c)| c).collect()
    }

    /// The same scenario with the free coefficients replaced by `values`.
    pub fn with_free_vector(&self, values: &[f64]) -> Result<Self, ScenarioError> {
        let mut rest = values;
        let mut exprs = self.exprs.clone();
        for (_, e) in exprs.iter_mut() {
            if let Some(w) = literal_mut(e) {
                let n = w.coefficients().len();
                if rest.len() < n {
                    return Err(ScenarioError::Invalid("coefficient vector too short".into()));
                }
                *w = w
                    .with_coefficients(rest[..n].to_vec())
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
                rest = &rest[n..];
            }
        }
        if !rest.is_empty() {
            return Err(ScenarioError::Invalid("coefficient vector too long".into()));
        }
        let scheme = self.config.scheme;
        let drives = resolve(scheme, self.config.modulation, &exprs, self.config.duration_us)?;
        let mut config = self.config.clone();
        config.channels = exprs
            .iter()
            .map(|(c, e)| (c.name(scheme).to_string(), e.to_string()))
            .collect();
        let setup = GateSetup {
            drives,
            ..self.setup.clone()
        };
        Ok(Self { config, exprs, setup })
    }
}

fn literal(e: &ChannelExpr) -> Option<&WaveformSpec> {
    match e {
        ChannelExpr::Literal(w) => Some(w),
        ChannelExpr::Scaled(_, inner) => literal(inner),
        ChannelExpr::Reference(_) => None,
    }
}

fn literal_mut(e: &mut ChannelExpr) -> Option<&mut WaveformSpec> {
    match e {
        ChannelExpr::Literal(w) => Some(w),
        ChannelExpr::Scaled(_, inner) => literal_mut(inner),
        ChannelExpr::Reference(_) => None,
    }
}

fn resolve(
    scheme: Scheme,
    modulation: Modulation,
    exprs: &[(Channel, ChannelExpr)],
    duration: f64,
) -> Result<DriveSet, ScenarioError> {
    fn eval(
        scheme: Scheme,
        exprs: &[(Channel, ChannelExpr)],
        e: &ChannelExpr,
        depth: usize,
    ) -> Result<WaveformSpec, String> {
        if depth > exprs.len() {
            return Err("circular channel reference".into());
        }
        match e {
            ChannelExpr::Literal(w) => Ok(w.clone()),
            ChannelExpr::Scaled(k, inner) => {
                Ok(eval(scheme, exprs, inner, depth + 1)?.scaled(*k))
            }
            ChannelExpr::Reference(name) => {
                let c = Channel::from_name(scheme, name).ok_or(format!("unknown channel {name}"))?;
                let (_, target) = exprs
                    .iter()
                    .find(|(k, _)| *k == c)
                    .ok_or(format!("reference to undefined channel {name}"))?;
                eval(scheme, exprs, target, depth + 1)
            }
        }
    }
    let mut channels = Vec::new();
    for (c, e) in exprs {
        let w = eval(scheme, exprs, e, 0).map_err(|message| ScenarioError::Channel {
            channel: c.name(scheme).to_string(),
            message,
        })?;
        let w = w
            .with_duration(duration)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        channels.push((*c, w));
    }
    Ok(DriveSet::new(scheme, modulation, channels)?)
}

struct Entry {
    id: &'static str,
    figure: &'static str,
    scheme: Scheme,
    modulation: Modulation,
    task: GateTask,
    dual_pulse: bool,
    blockade_mhz: f64,
    qubit_shift_mhz: f64,
    channels: &'static [(&'static str, &'static str)],
}

const ONE: Scheme = Scheme::OnePhoton;
const TWO: Scheme = Scheme::TwoPhoton;
const HYBRID: Modulation = Modulation::Hybrid;
const AMP: Modulation = Modulation::AmplitudeOnly;

const REGISTRY: &[Entry] = &[
    Entry {
        id: "fig2a",
        figure: "Fig. 2(a)",
        scheme: ONE,
        modulation: HYBRID,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 50.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1", "0.686*Omega2"),
            ("Omega2", "[112.83, -46.32, -11.51, 2.35, 0.193, -1.14]"),
            ("Delta1", "[40.14, 31.41, -6.14]"),
            ("Delta2", "[41.67, 32.23, -6.56]"),
        ],
    },
    Entry {
        id: "fig2c",
        figure: "Fig. 2(c)",
        scheme: ONE,
        modulation: AMP,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 50.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1", "[124.49, -34.38, -28.36, 1.50, 10.93, -11.93]"),
            ("Omega2", "[153.58, -51.60, 2.09, -23.86, -33.57, 30.15]"),
            ("Delta1", "9.33"),
            ("Delta2", "5.27"),
        ],
    },
    Entry {
        id: "fig3a",
        figure: "Fig. 3(a)",
        scheme: TWO,
        modulation: HYBRID,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 50.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1S", "448.87"),
            ("Omega2S", "343.82"),
            ("Omega1p", "[3229.71, -1170.45, -239.25, -33.70, -43.47, -127.98]"),
            ("Omega2p", "[2713.71, -909.89, -215.59, -106.97, -129.61, 5.20]"),
            ("delta1", "[-21.25, 6.44, -14.58]"),
            ("delta2", "[2.00, 6.04, -14.49]"),
        ],
    },
    Entry {
        id: "fig3c",
        figure: "Fig. 3(c)",
        scheme: TWO,
        modulation: AMP,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 50.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1p", "[3442.06, -1350.63, -150.75, -22.40, -81.41, -115.84]"),
            ("Omega2p", "[3396.69, -885.46, -654.28, -205.05, 262.51, -216.07]"),
            ("Omega1S", "370.18"),
            ("Omega2S", "321.13"),
            ("delta1", "-4.03"),
            ("delta2", "-2.00"),
        ],
    },
    Entry {
        id: "fig4",
        figure: "Fig. 4",
        scheme: ONE,
        modulation: AMP,
        task: GateTask::Cz,
        dual_pulse: true,
        blockade_mhz: 50.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1", "[174.55, -33.89, -39.45, -18.46, -3.37, 7.20, -1.07, 1.76]"),
            ("Omega2", "[164.23, -57.66, 3.13, 6.80, -21.23, -11.14, -2.52, 0.50]"),
            ("Delta1", "3.768"),
            ("Delta2", "3.093"),
        ],
    },
    Entry {
        id: "fig5",
        figure: "Fig. 5",
        scheme: TWO,
        modulation: AMP,
        task: GateTask::Ccz,
        dual_pulse: false,
        blockade_mhz: 50.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1p", "[2828.10, -1469.66, -185.18, 285.37, 248.22, -292.80]"),
            ("Omega2p", "[3683.49, -1374.63, -434.93, 69.95, -48.91, -53.22]"),
            ("Omega1S", "472.49"),
            ("Omega2S", "368.79"),
            ("delta1", "5.574"),
            ("delta2", "-5.663"),
        ],
    },
    Entry {
        id: "figS4a",
        figure: "Supp. Fig. S4(a)",
        scheme: ONE,
        modulation: HYBRID,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 100.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1", "0.685*Omega2"),
            ("Omega2", "[111.45, -44.05, -11.36, 0.33, 1.33, -1.97]"),
            ("Delta1", "[42.79, 33.82, -5.44]"),
            ("Delta2", "[42.79, 33.82, -5.44]"),
        ],
    },
    Entry {
        id: "figS4c",
        figure: "Supp. Fig. S4(c)",
        scheme: ONE,
        modulation: AMP,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 100.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1", "[128.31, -35.90, -29.34, 1.79, 12.40, -13.11]"),
            ("Omega2", "[150.75, -50.32, 2.47, -24.40, -35.65, 32.53]"),
            ("Delta1", "9.24"),
            ("Delta2", "5.25"),
        ],
    },
    Entry {
        id: "figS5a",
        figure: "Supp. Fig. S5(a)",
        scheme: TWO,
        modulation: HYBRID,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 100.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1S", "442.41"),
            ("Omega2S", "350.90"),
            ("Omega1p", "[3234.43, -1086.98, -275.00, -93.96, -41.85, -119.42]"),
            ("Omega2p", "[2850.37, -995.04, -196.13, -84.17, -28.95, -120.89]"),
            ("delta1", "[-21.68, 4.06, -19.20]"),
            ("delta2", "[-3.57, 2.57, -18.87]"),
        ],
    },
    Entry {
        id: "figS5c",
        figure: "Supp. Fig. S5(c)",
        scheme: TWO,
        modulation: AMP,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 100.0,
        qubit_shift_mhz: 0.0,
        channels: &[
            ("Omega1p", "[3337.20, -767.85, -614.38, -41.25, -88.80, -156.33]"),
            ("Omega2p", "[3624.89, -894.35, -690.53, -346.77, 247.19, -127.99]"),
            ("Omega1S", "381.88"),
            ("Omega2S", "330.08"),
            ("delta1", "-2.02"),
            ("delta2", "-2.57"),
        ],
    },
    Entry {
        id: "figS7a",
        figure: "Supp. Fig. S7(a)",
        scheme: TWO,
        modulation: HYBRID,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 100.0,
        qubit_shift_mhz: 1.5625,
        channels: &[
            ("Omega1S", "440.79"),
            ("Omega2S", "349.13"),
            ("Omega1p", "[3244.11, -1061.56, -262.13, -112.21, 12.12, -198.28]"),
            ("Omega2p", "[2825.37, -922.56, -302.26, -34.04, -65.55, -88.27]"),
            ("delta1", "[-36.85, 4.22, -25.95]"),
            ("delta2", "[-11.85, 0.08, -17.50]"),
        ],
    },
    Entry {
        id: "figS7c",
        figure: "Supp. Fig. S7(c)",
        scheme: TWO,
        modulation: AMP,
        task: GateTask::Cz,
        dual_pulse: false,
        blockade_mhz: 100.0,
        qubit_shift_mhz: 1.5625,
        channels: &[
            ("Omega1p", "[3348.93, -726.20, -546.18, -159.50, -174.75, -67.84]"),
            ("Omega2p", "[3671.33, -936.72, -622.74, -393.10, 216.80, -99.90]"),
            ("Omega1S", "382.25"),
            ("Omega2S", "331.04"),
            ("delta1", "-2.00"),
            ("delta2", "-2.84"),
        ],
    },
];

/// Registry ids in fixed order.
pub fn registry_ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.id).collect()
}

/// The verbatim coefficient text of a registry channel.
pub fn registry_text(id: &str, channel: &str) -> Option<&'static str> {
    REGISTRY
        .iter()
        .find(|e| e.id == id)?
        .channels
        .iter()
        .find(|(n, _)| *n == channel)
        .map(|(_, t)| *t)
}

pub fn registry_config(id: &str) -> Result<ScenarioConfig, ScenarioError> {
    let e = REGISTRY
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| ScenarioError::UnknownId(id.to_string()))?;
    Ok(ScenarioConfig {
        id: e.id.to_string(),
        figure: e.figure.to_string(),
        scheme: e.scheme,
        modulation: e.modulation,
        task: e.task,
        dual_pulse: e.dual_pulse,
        duration_us: DEFAULT_DURATION,
        claimed_error: 1e-4,
        params: ParamsConfig {
            blockade_mhz: e.blockade_mhz,
            qubit_shift_mhz: e.qubit_shift_mhz,
            ..ParamsConfig::default()
        },
        channels: e
            .channels
            .iter()
            .map(|(n, t)| (n.to_string(), t.to_string()))
            .collect(),
    })
}

pub fn registry_scenario(id: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_config(registry_config(id)?)
}

impl FromStr for Scenario {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::from_config(ScenarioConfig::from_toml(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registry_entry_resolves() {
        for id in registry_ids() {
            let s = registry_scenario(id).unwrap();
            assert_eq!(s.id(), id);
            assert_eq!(s.setup.drives.channels().len(), Channel::for_scheme(s.config.scheme).len());
        }
    }

    #[test]
    fn reference_channels_follow_their_source() {
        let s = registry_scenario("fig2a").unwrap();
        let o1 = s.setup.drives.by_name("Omega1").unwrap();
        let o2 = s.setup.drives.by_name("Omega2").unwrap();
        for k in 0..=10 {
            let t = 0.025 * k as f64;
            let ratio = o1.eval(t).unwrap() / o2.eval(t).unwrap();
            assert!((ratio - 0.686).abs() < 1e-12);
        }
        // Omega1 is not free; Omega2, Delta1, Delta2 are
        assert_eq!(s.free_vector().len(), 6 + 3 + 3);
    }

    #[test]
    fn free_vector_round_trips() {
        let s = registry_scenario("fig3c").unwrap();
        let v = s.free_vector();
        let s2 = s.with_free_vector(&v).unwrap();
        assert_eq!(s2.setup, s.setup);
        let mut w = v.clone();
        w[0] += 1.0;
        let s3 = s.with_free_vector(&w).unwrap();
        assert_eq!(s3.free_vector(), w);
        assert!(s.with_free_vector(&v[1..]).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = registry_config("fig5").unwrap();
        let text = cfg.to_toml();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn parse_errors_report_lines() {
        let text = "id = \"x\"\nscheme = \"one-photon\"\nmodulation = 3\n";
        match ScenarioConfig::from_toml(text) {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn channel_expressions() {
        assert!(matches!(ChannelExpr::parse("9.33"), Ok(ChannelExpr::Literal(_))));
        assert!(matches!(ChannelExpr::parse("0.5*Omega2"), Ok(ChannelExpr::Scaled(..))));
        assert!(ChannelExpr::parse("[1, x]").is_err());
        assert!(ChannelExpr::parse("a b").is_err());
    }

    #[test]
    fn circular_references_fail() {
        let mut cfg = registry_config("fig2a").unwrap();
        cfg.channels.insert("Omega2".into(), "2*Omega1".into());
        assert!(Scenario::from_config(cfg).is_err());
    }
}
