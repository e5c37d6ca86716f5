//! Conversions between the lab units used in configs (frequencies as
//! `f/2π` in GHz or MHz, times in ns) and the SI values used internally
//! (rad/s and s).

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// `f/2π` in GHz to rad/s.
pub fn ghz(f: f64) -> f64 {
    TWO_PI * f * 1e9
}

/// `f/2π` in MHz to rad/s.
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

pub fn ns(t: f64) -> f64 {
    t * 1e-9
}

pub fn to_ghz(omega: f64) -> f64 {
    omega / (TWO_PI * 1e9)
}

pub fn to_mhz(omega: f64) -> f64 {
    omega / (TWO_PI * 1e6)
}

pub fn to_ns(t: f64) -> f64 {
    t * 1e9
}
