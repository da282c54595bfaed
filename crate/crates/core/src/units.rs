//! Unit conventions.
//!
//! Internally every angular frequency is in rad/μs, every time in μs and
//! every length in μm. Velocities therefore come out in μm/μs, which is
//! numerically identical to m/s. Configuration files and the CLI speak in
//! ordinary frequencies (MHz, GHz), which are converted here.

use std::f64::consts::{PI, TAU};

/// Ordinary frequency in MHz to angular frequency in rad/μs.
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// Ordinary frequency in GHz to angular frequency in rad/μs.
pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e3
}

/// Angular frequency in rad/μs to ordinary MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU
}

/// Angular frequency in rad/μs to ordinary GHz.
pub fn to_ghz(omega: f64) -> f64 {
    omega / TAU * 1e-3
}

/// Reduces a phase to the half-open interval (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    if !phi.is_finite() {
        return phi;
    }
    let mut r = phi.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}
