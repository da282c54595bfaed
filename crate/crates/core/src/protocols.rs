//! Drive programs: constant rates, the exponential emitter ramp and the
//! closed-form dark-state receiver controller.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::DriveProgram;

/// Below this receiver amplitude the controller falls back to full drive.
pub const BOOTSTRAP_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("target rate {gamma} outside [0, {gamma_max}]")]
    CapViolation { gamma: f64, gamma_max: f64 },
    #[error("ramp time constant must be positive (got {0})")]
    NonPositiveRampTime(f64),
    #[error("branch fraction must be positive (got {0})")]
    NonPositiveBeta(f64),
}

pub fn constant_drive(gamma: f64, gamma_max: f64) -> Result<DriveProgram, ProtocolError> {
    if !(0.0..=gamma_max).contains(&gamma) {
        return Err(ProtocolError::CapViolation { gamma, gamma_max });
    }
    Ok(DriveProgram::Constant {
        gamma,
        phase: 0.0,
        gamma_max,
    })
}

/// Normalised emitter pulse `min{1, exp((t − 5 t_p)/t_p)}`.
pub fn exponential_ramp(t: f64, t_p: f64) -> f64 {
    ((t - 5.0 * t_p) / t_p).exp().min(1.0)
}

pub fn ramp_drive(gamma: f64, t_p: f64, gamma_max: f64) -> Result<DriveProgram, ProtocolError> {
    if !(t_p > 0.0) {
        return Err(ProtocolError::NonPositiveRampTime(t_p));
    }
    if !(0.0..=gamma_max).contains(&gamma) {
        return Err(ProtocolError::CapViolation { gamma, gamma_max });
    }
    Ok(DriveProgram::ExponentialRamp {
        gamma,
        t_p,
        phase: 0.0,
        gamma_max,
    })
}

pub fn dark_state(gamma_max: f64) -> DriveProgram {
    DriveProgram::DarkState { gamma_max }
}

/// One controller decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// Total receiver rate γ_r.
    pub gamma: f64,
    pub theta: f64,
    /// The requested rate hit the cap, so the null is only approximate.
    pub clamped: bool,
    /// |c_r| was below the bootstrap threshold.
    pub bootstrap: bool,
}

impl ControlOutput {
    /// Whether the emitted transverse field cancels the input exactly.
    pub fn is_exact(&self) -> bool {
        !self.clamped && !self.bootstrap && self.gamma > 0.0
    }
}

/// Chooses γ_r and θ_r so that `Φ_in + √(β_t γ_r/2) c_r e^{iθ_r} = 0`
/// as closely as the cap `γ_max` permits.
///
/// `phi_in` is the transverse field arriving from the emitter side and
/// `prev_theta` the phase held over from the previous step.
pub fn dark_state_controller(
    phi_in: Complex64,
    c_r: Complex64,
    beta_t: f64,
    gamma_max: f64,
    prev_theta: f64,
) -> ControlOutput {
    debug_assert!(beta_t > 0.0);
    if phi_in == Complex64::new(0.0, 0.0) {
        return ControlOutput {
            gamma: 0.0,
            theta: prev_theta,
            clamped: false,
            bootstrap: c_r.norm() <= BOOTSTRAP_EPSILON,
        };
    }
    let amp = c_r.norm();
    if amp <= BOOTSTRAP_EPSILON {
        return ControlOutput {
            gamma: gamma_max,
            theta: prev_theta,
            clamped: false,
            bootstrap: true,
        };
    }
    let theta = (-phi_in / c_r).arg();
    let wanted = 2.0 * phi_in.norm_sqr() / (amp * amp);
    let cap = beta_t * gamma_max;
    let (gamma_t, clamped) = if wanted > cap {
        (cap, true)
    } else {
        (wanted, false)
    };
    ControlOutput {
        gamma: (gamma_t / beta_t).min(gamma_max),
        theta,
        clamped,
        bootstrap: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ramp_values() {
        assert_eq!(exponential_ramp(5.0, 1.0), 1.0);
        assert!((exponential_ramp(0.0, 2.0) - (-5.0f64).exp()).abs() < 1e-15);
        assert!((exponential_ramp(0.0, 1.0) - 6.737_946_999e-3).abs() < 1e-12);
        assert_eq!(exponential_ramp(1e9, 1.0), 1.0);
    }

    #[test]
    fn constant_drive_checks_cap() {
        assert!(constant_drive(2.0, 1.0).is_err());
        assert!(constant_drive(-0.1, 1.0).is_err());
        let p = constant_drive(0.0, 1.0).unwrap();
        assert!(!p.is_active());
        let half = constant_drive(0.5, 1.0).unwrap();
        // split evenly between two branches
        assert_eq!(half.rate_at(3.0).unwrap() * 0.5, 0.25);
    }

    #[test]
    fn silent_without_input() {
        let out = dark_state_controller(Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.0), 0.5, 1.0, 0.2);
        assert_eq!(out.gamma, 0.0);
        assert_eq!(out.theta, 0.2);
    }

    #[test]
    fn bootstrap_uses_full_drive() {
        let out = dark_state_controller(Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0), 0.5, 1.0, 0.7);
        assert_eq!(out.gamma, 1.0);
        assert_eq!(out.theta, 0.7);
        assert!(out.bootstrap);
    }

    #[test]
    fn unclamped_output_cancels_input() {
        let phi = Complex64::new(0.01, -0.02);
        let c = Complex64::new(0.4, 0.3);
        let out = dark_state_controller(phi, c, 0.5, 10.0, 0.0);
        assert!(out.is_exact());
        let emitted = (0.5 * out.gamma / 2.0).sqrt() * c * Complex64::from_polar(1.0, out.theta);
        assert!((phi + emitted).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn rate_within_cap(
            re in -2.0f64..2.0, im in -2.0f64..2.0,
            cre in -1.0f64..1.0, cim in -1.0f64..1.0,
            beta in 0.05f64..1.0, gmax in 0.01f64..5.0,
        ) {
            let out = dark_state_controller(Complex64::new(re, im), Complex64::new(cre, cim), beta, gmax, 0.0);
            prop_assert!(out.gamma >= 0.0 && out.gamma <= gmax);
            prop_assert!(out.theta.abs() <= std::f64::consts::PI);
        }
    }
}
