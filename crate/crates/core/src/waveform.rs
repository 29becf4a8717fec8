//! Truncated cosine-series ("tranquilized") control waveforms.
//!
//! A time-varying waveform with coefficients `[a_0, a_1, ..., a_N]` over a
//! pulse of duration `τ` evaluates to
//!
//! ```text
//! f(t) = 2π · (a_0 + 2 Σ_{n=1..N} a_n cos(2π n t / τ)) / (2N + 1)   [rad/µs]
//! ```
//!
//! which is the real form of a Fourier series with real coefficients. Its
//! first derivative vanishes at `t = 0` and `t = τ`. Constant waveforms
//! evaluate to `2π · a_0` with no `(2N + 1)` divisor.
//!
//! Coefficients are stored as written (MHz-scale numbers); the `2π` and
//! divisor are applied on evaluation. An optional `scale` multiplies the
//! whole waveform, which is how a channel defined as `0.686 × Ω_2(t)` is
//! represented without rewriting the reference coefficients.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reference pulse duration in µs.
pub const DEFAULT_DURATION: f64 = 0.25;

/// Slack allowed on the evaluation domain, relative to the duration.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveformError {
    #[error("time {t} µs outside pulse window [0, {duration}] µs")]
    Domain { t: f64, duration: f64 },
    #[error("duration must be positive, got {0}")]
    Duration(f64),
    #[error("a time-varying waveform needs at least one coefficient")]
    Empty,
    #[error("a constant waveform takes exactly one value, got {0}")]
    ConstantArity(usize),
    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("coefficient list must be enclosed in square brackets")]
    Brackets,
    #[error("empty coefficient list")]
    Empty,
    #[error("malformed token {token:?} at position {position}")]
    Token { position: usize, token: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveformKind {
    TimeVarying,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    coefficients: Vec<f64>,
    duration: f64,
    kind: WaveformKind,
    #[serde(default = "unit_scale", skip_serializing_if = "is_unit")]
    scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

fn is_unit(s: &f64) -> bool {
    *s == 1.0
}

impl WaveformSpec {
    /// Cosine-series waveform over the default 0.25 µs window.
    pub fn time_varying(coefficients: Vec<f64>) -> Result<Self, WaveformError> {
        Self::new(coefficients, DEFAULT_DURATION, WaveformKind::TimeVarying)
    }

    /// Constant waveform `2π × value` (value in MHz).
    pub fn constant(value: f64) -> Result<Self, WaveformError> {
        Self::new(vec![value], DEFAULT_DURATION, WaveformKind::Constant)
    }

    /// The identically-zero waveform.
    pub fn zero() -> Self {
        Self {
            coefficients: vec![0.0],
            duration: DEFAULT_DURATION,
            kind: WaveformKind::Constant,
            scale: 1.0,
        }
    }

    pub fn new(
        coefficients: Vec<f64>,
        duration: f64,
        kind: WaveformKind,
    ) -> Result<Self, WaveformError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(WaveformError::Duration(duration));
        }
        match kind {
            WaveformKind::TimeVarying if coefficients.is_empty() => {
                return Err(WaveformError::Empty)
            }
            WaveformKind::Constant if coefficients.len() != 1 => {
                return Err(WaveformError::ConstantArity(coefficients.len()))
            }
            _ => {}
        }
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(WaveformError::NonFinite(i));
        }
        Ok(Self {
            coefficients,
            duration,
            kind,
            scale: 1.0,
        })
    }

    pub fn with_duration(mut self, duration: f64) -> Result<Self, WaveformError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(WaveformError::Duration(duration));
        }
        self.duration = duration;
        Ok(self)
    }

    /// Same coefficients, whole waveform multiplied by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale *= factor;
        self
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Replaces the coefficients, keeping kind, duration and scale.
    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Result<Self, WaveformError> {
        let mut w = Self::new(coefficients, self.duration, self.kind)?;
        w.scale = self.scale;
        Ok(w)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn kind(&self) -> WaveformKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Truncation order N (0 for constants).
    pub fn harmonics(&self) -> usize {
        match self.kind {
            WaveformKind::Constant => 0,
            WaveformKind::TimeVarying => self.coefficients.len() - 1,
        }
    }

    fn check_domain(&self, t: f64) -> Result<(), WaveformError> {
        let slack = DOMAIN_SLACK * self.duration;
        if t.is_nan() || t < -slack || t > self.duration + slack {
            Err(WaveformError::Domain {
                t,
                duration: self.duration,
            })
        } else {
            Ok(())
        }
    }

    /// Angular frequency (rad/µs) at time `t` (µs).
    pub fn eval(&self, t: f64) -> Result<f64, WaveformError> {
        self.check_domain(t)?;
        Ok(self.value(t))
    }

    /// Time derivative (rad/µs²) at time `t` (µs).
    pub fn eval_derivative(&self, t: f64) -> Result<f64, WaveformError> {
        self.check_domain(t)?;
        Ok(self.derivative(t))
    }

    /// Unchecked evaluation; callers guarantee `t` lies in the window.
    #[inline]
    pub(crate) fn value(&self, t: f64) -> f64 {
        let a = &self.coefficients;
        match self.kind {
            WaveformKind::Constant => TAU * self.scale * a[0],
            WaveformKind::TimeVarying => {
                let n = a.len() - 1;
                if n == 0 {
                    return TAU * self.scale * a[0];
                }
                let (s1, c1) = (TAU * t / self.duration).sin_cos();
                let (mut c, mut s) = (c1, s1);
                let mut sum = 0.0;
                for &an in &a[1..] {
                    sum += an * c;
                    let next = c * c1 - s * s1;
                    s = s * c1 + c * s1;
                    c = next;
                }
                TAU * self.scale * (a[0] + 2.0 * sum) / (2 * n + 1) as f64
            }
        }
    }

    #[inline]
    pub(crate) fn derivative(&self, t: f64) -> f64 {
        let a = &self.coefficients;
        match self.kind {
            WaveformKind::Constant => 0.0,
            WaveformKind::TimeVarying => {
                let n = a.len() - 1;
                if n == 0 {
                    return 0.0;
                }
                let omega = TAU / self.duration;
                let (s1, c1) = (omega * t).sin_cos();
                let (mut c, mut s) = (c1, s1);
                let mut sum = 0.0;
                for (k, &an) in a[1..].iter().enumerate() {
                    sum += an * (k + 1) as f64 * s;
                    let next = c * c1 - s * s1;
                    s = s * c1 + c * s1;
                    c = next;
                }
                -TAU * self.scale * 2.0 * omega * sum / (2 * n + 1) as f64
            }
        }
    }

    /// Largest |f'(t)| over `samples` evenly spaced points.
    pub fn peak_derivative(&self, samples: usize) -> f64 {
        let samples = samples.max(2);
        (0..samples)
            .map(|k| self.derivative(self.duration * k as f64 / (samples - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Endpoint derivative magnitude relative to the peak derivative.
    ///
    /// Zero for constants and for flat waveforms.
    pub fn endpoint_derivative_ratio(&self) -> f64 {
        let peak = self.peak_derivative(4097);
        if peak == 0.0 {
            return 0.0;
        }
        let ends = self.derivative(0.0).abs().max(self.derivative(self.duration).abs());
        ends / peak
    }

    /// Times at which the waveform changes sign, sampled on a uniform grid.
    /// Values with magnitude below `floor` (rad/µs) count as zero and do
    /// not register a change; the near-zero pulse edges are ignored this way.
    pub fn sign_changes(&self, samples: usize, floor: f64) -> Vec<f64> {
        let samples = samples.max(2);
        let mut out = Vec::new();
        let mut last: Option<f64> = None;
        for k in 0..samples {
            let t = self.duration * k as f64 / (samples - 1) as f64;
            let v = self.value(t);
            if v.abs() <= floor {
                continue;
            }
            if let Some(prev) = last {
                if prev.signum() != v.signum() {
                    out.push(t);
                }
            }
            last = Some(v);
        }
        out
    }

    /// Parses the bracketed list notation `[a_0, a_1, ..., a_N]`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let inner = text
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or(ParseError::Brackets)?;
        if inner.trim().is_empty() {
            return Err(ParseError::Empty);
        }
        let coefficients = inner
            .split(',')
            .enumerate()
            .map(|(i, tok)| {
                let tok = tok.trim();
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ParseError::Token {
                        position: i + 1,
                        token: tok.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            coefficients,
            duration: DEFAULT_DURATION,
            kind: WaveformKind::TimeVarying,
            scale: 1.0,
        })
    }

    /// Like [`parse`](Self::parse), but a single-element list becomes a
    /// constant waveform.
    pub fn parse_allow_constant(text: &str) -> Result<Self, ParseError> {
        let mut w = Self::parse(text)?;
        if w.coefficients.len() == 1 {
            w.kind = WaveformKind::Constant;
        }
        Ok(w)
    }

    /// Canonical bracketed coefficient list (shortest round-trip decimals).
    pub fn coefficient_list(&self) -> String {
        let items: Vec<String> = self.coefficients.iter().map(|c| format!("{c:?}")).collect();
        format!("[{}]", items.join(", "))
    }
}

impl fmt::Display for WaveformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale != 1.0 {
            write!(f, "{:?}*", self.scale)?;
        }
        match self.kind {
            WaveformKind::Constant => write!(f, "{:?}", self.coefficients[0]),
            WaveformKind::TimeVarying => f.write_str(&self.coefficient_list()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const FIG2A_OMEGA2: [f64; 6] = [112.83, -46.32, -11.51, 2.35, 0.193, -1.14];

    #[test]
    fn constant_skips_divisor() {
        let w = WaveformSpec::constant(2.5).unwrap();
        for t in [0.0, 0.1, 0.25] {
            assert_relative_eq!(w.eval(t).unwrap(), TAU * 2.5, max_relative = 1e-15);
            assert_eq!(w.eval_derivative(t).unwrap(), 0.0);
        }
        let d1 = WaveformSpec::constant(9.33).unwrap();
        assert_relative_eq!(d1.eval(0.17).unwrap(), TAU * 9.33, max_relative = 1e-15);
    }

    #[test]
    fn published_rabi_pulse_starts_near_zero() {
        let w = WaveformSpec::time_varying(FIG2A_OMEGA2.to_vec()).unwrap();
        // a_0 + 2 Σ a_n = 112.83 - 112.854 = -0.024 → /11 MHz
        let direct = TAU * (-0.024) / 11.0;
        assert_relative_eq!(w.eval(0.0).unwrap(), direct, max_relative = 1e-9);
        assert!(w.eval(0.0).unwrap().abs() < TAU * 0.01);
    }

    #[test]
    fn derivative_vanishes_at_endpoints() {
        let w = WaveformSpec::time_varying(FIG2A_OMEGA2.to_vec()).unwrap();
        let peak = w.peak_derivative(2001);
        assert!(peak > 1.0);
        assert!(w.eval_derivative(0.0).unwrap().abs() <= 1e-9 * peak + 1e-12);
        assert!(w.eval_derivative(0.25).unwrap().abs() <= 1e-9 * peak + 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let w = WaveformSpec::parse("[40.14, 31.41, -6.14]").unwrap();
        let h = 1e-6;
        for t in [0.03, 0.1, 0.2] {
            let fd = (w.value(t + h) - w.value(t - h)) / (2.0 * h);
            assert_relative_eq!(w.derivative(t), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn domain_is_enforced() {
        let w = WaveformSpec::constant(1.0).unwrap();
        assert!(matches!(w.eval(-0.01), Err(WaveformError::Domain { .. })));
        assert!(matches!(w.eval(0.26), Err(WaveformError::Domain { .. })));
        assert!(w.eval_derivative(0.3).is_err());
    }

    #[test]
    fn parse_examples() {
        let w = WaveformSpec::parse("[40.14, 31.41, -6.14]").unwrap();
        assert_eq!(w.harmonics(), 2);
        assert_eq!(w.coefficients(), &[40.14, 31.41, -6.14]);
        assert_eq!(WaveformSpec::parse("[]"), Err(ParseError::Empty));
        assert_eq!(
            WaveformSpec::parse("[1.0, x]"),
            Err(ParseError::Token {
                position: 2,
                token: "x".into()
            })
        );
        assert_eq!(WaveformSpec::parse("1.0, 2.0"), Err(ParseError::Brackets));
        let c = WaveformSpec::parse_allow_constant("[5.27]").unwrap();
        assert_eq!(c.kind(), WaveformKind::Constant);
    }

    #[test]
    fn scaled_waveform_tracks_reference() {
        let base = WaveformSpec::time_varying(FIG2A_OMEGA2.to_vec()).unwrap();
        let scaled = base.clone().scaled(0.686);
        for t in [0.0, 0.07, 0.125] {
            assert_relative_eq!(scaled.value(t), 0.686 * base.value(t), max_relative = 1e-14);
        }
        assert_eq!(scaled.to_string(), "0.686*[112.83, -46.32, -11.51, 2.35, 0.193, -1.14]");
    }

    #[test]
    fn rejects_bad_construction() {
        assert_eq!(WaveformSpec::time_varying(vec![]), Err(WaveformError::Empty));
        assert_eq!(
            WaveformSpec::new(vec![1.0, 2.0], 0.25, WaveformKind::Constant),
            Err(WaveformError::ConstantArity(2))
        );
        assert!(WaveformSpec::constant(1.0).unwrap().with_duration(0.0).is_err());
        assert_eq!(
            WaveformSpec::time_varying(vec![1.0, f64::NAN]),
            Err(WaveformError::NonFinite(1))
        );
    }

    #[test]
    fn sign_changes_flagged() {
        let w = WaveformSpec::parse("[0.0, 1.0]").unwrap();
        // cos crosses zero at τ/4 and 3τ/4
        let changes = w.sign_changes(1001, 1e-6);
        assert_eq!(changes.len(), 2);
        assert!((changes[0] - 0.0625).abs() < 1e-3);
        let positive = WaveformSpec::time_varying(FIG2A_OMEGA2.to_vec()).unwrap();
        assert!(positive.sign_changes(1001, TAU * 0.05).is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn simpson(w: &WaveformSpec, n: usize) -> f64 {
            let h = w.duration() / n as f64;
            let mut s = w.value(0.0) + w.value(w.duration());
            for k in 1..n {
                let wgt = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += wgt * w.value(k as f64 * h);
            }
            s * h / 3.0
        }

        proptest! {
            #[test]
            fn endpoint_derivatives_null(coeffs in prop::collection::vec(-500.0f64..500.0, 2..9),
                                         dur in 0.1f64..1.0) {
                let w = WaveformSpec::time_varying(coeffs).unwrap().with_duration(dur).unwrap();
                let peak = w.peak_derivative(1001);
                prop_assert!(w.derivative(0.0).abs() <= 1e-9 * peak + 1e-12);
                prop_assert!(w.derivative(dur).abs() <= 1e-9 * peak + 1e-12);
            }

            #[test]
            fn mean_value_is_scaled_offset(coeffs in prop::collection::vec(-500.0f64..500.0, 1..8)) {
                let w = WaveformSpec::time_varying(coeffs.clone()).unwrap();
                let n = coeffs.len() - 1;
                let expected = TAU * coeffs[0] / (2 * n + 1) as f64;
                let mean = simpson(&w, 2000) / w.duration();
                let scale = coeffs.iter().map(|c| c.abs()).fold(1.0, f64::max);
                prop_assert!((mean - expected).abs() <= 1e-8 * scale);
            }

            #[test]
            fn parse_serialize_round_trip(coeffs in prop::collection::vec(-5000.0f64..5000.0, 1..10)) {
                let w = WaveformSpec::time_varying(coeffs).unwrap();
                let text = w.coefficient_list();
                let back = WaveformSpec::parse(&text).unwrap();
                prop_assert_eq!(&back, &w);
                prop_assert_eq!(back.coefficient_list(), text);
            }
        }
    }
}
