//! Unit conversions at the boundary. Internally every frequency is an
//! angular frequency in rad/µs and every time is in µs.

use std::f64::consts::TAU;

/// `2π × f` for `f` in MHz, as rad/µs.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// `2π × f` for `f` in kHz, as rad/µs.
#[inline]
pub fn khz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Angular frequency (rad/µs) back to MHz.
#[inline]
pub fn to_mhz(w: f64) -> f64 {
    w / TAU
}

/// Angular frequency (rad/µs) back to kHz.
#[inline]
pub fn to_khz(w: f64) -> f64 {
    w / TAU * 1e3
}
