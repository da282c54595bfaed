//! Closed-form calculators: ground-state level structure, strain couplings,
//! emission and Raman transfer rates, loss budgets.
//!
//! Unless stated otherwise the formulas are homogeneous in their frequency
//! arguments, so any consistent angular unit works; the rest of the crate
//! uses rad/μs. [`coupling_strength`] and [`emission_rate_compression`]
//! involve ħ and therefore take SI inputs.

pub mod query;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::units::wrap_phase;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Relative width of the |δ − 2ω_B| window flagged as resonant.
pub const FLIP_RESONANCE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} must be non-negative")]
    Negative(&'static str),
    #[error("δ² + Γ²/4 vanishes")]
    SingularDetuning,
    #[error("branch rates sum to {sum}, but the total rate is {total}")]
    BranchSum { sum: f64, total: f64 },
    #[error("spurious |1⟩→|4⟩ process is resonant: |δ − 2ω_B| = {gap} below tolerance")]
    ResonantFlip { gap: f64 },
    #[error("Δ ± ω_B vanishes")]
    DegenerateZeeman,
    #[error("reflectivity must lie in [0, 1] (got {0})")]
    Reflectivity(f64),
}

/// How a bundle entry should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnit {
    /// Angular frequency in rad/μs; shown as an ordinary frequency in MHz.
    AngularFrequency,
    /// Coupling in rad/s·√m.
    CouplingSi,
    /// Phase in rad, reduced to (−π, π].
    Phase,
    Dimensionless,
}

impl RateUnit {
    pub fn label(self) -> &'static str {
        match self {
            RateUnit::AngularFrequency => "MHz (ω/2π)",
            RateUnit::CouplingSi => "rad/s·√m",
            RateUnit::Phase => "rad",
            RateUnit::Dimensionless => "",
        }
    }

    /// Value as printed.
    pub fn display_value(self, v: f64) -> f64 {
        match self {
            RateUnit::AngularFrequency => crate::units::to_mhz(v),
            _ => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEntry {
    pub name: String,
    pub value: f64,
    pub unit: RateUnit,
}

/// Named scalar outputs of one rate calculation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateBundle {
    pub entries: Vec<RateEntry>,
}

impl RateBundle {
    pub fn push(&mut self, name: impl Into<String>, value: f64, unit: RateUnit) {
        let value = if unit == RateUnit::Phase {
            wrap_phase(value)
        } else {
            value
        };
        self.entries.push(RateEntry {
            name: name.into(),
            value,
            unit,
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.value)
    }
}

impl fmt::Display for RateBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
        for e in &self.entries {
            writeln!(
                f,
                "{:<width$}  {:>16.9e}  {}",
                e.name,
                e.unit.display_value(e.value),
                e.unit.label()
            )?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Ground-state level structure

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateSpectrum {
    /// E₁..E₄.
    pub energies: [f64; 4],
    pub splitting: f64,
    pub theta: f64,
    pub phi: f64,
    pub lambda_so: f64,
    pub upsilon_x: f64,
    pub upsilon_y: f64,
    pub omega_b: f64,
}

/// Diagonalises spin-orbit, Jahn-Teller and axial Zeeman terms of the SiV
/// ground-state manifold.
pub fn ground_state_spectrum(
    lambda_so: f64,
    upsilon_x: f64,
    upsilon_y: f64,
    omega_b: f64,
) -> Result<GroundStateSpectrum, RateError> {
    if !(lambda_so > 0.0) {
        return Err(RateError::NonPositive("spin-orbit coupling"));
    }
    let splitting =
        (lambda_so * lambda_so + 4.0 * (upsilon_x * upsilon_x + upsilon_y * upsilon_y)).sqrt();
    let theta = (2.0 * upsilon_x + splitting)
        .atan2((lambda_so * lambda_so + 4.0 * upsilon_y * upsilon_y).sqrt());
    let phi = (2.0 * upsilon_y).atan2(lambda_so);
    Ok(GroundStateSpectrum {
        energies: [
            (-omega_b - splitting) / 2.0,
            (omega_b - splitting) / 2.0,
            (-omega_b + splitting) / 2.0,
            (omega_b + splitting) / 2.0,
        ],
        splitting,
        theta: wrap_phase(theta),
        phi: wrap_phase(phi),
        lambda_so,
        upsilon_x,
        upsilon_y,
        omega_b,
    })
}

impl GroundStateSpectrum {
    /// The 4×4 Hamiltonian in the basis {e_x, e_y} ⊗ {↑, ↓}.
    pub fn hamiltonian(&self) -> [[Complex64; 4]; 4] {
        let i = Complex64::i();
        let orb_so = [
            [Complex64::from(self.omega_b), i * self.lambda_so],
            [-i * self.lambda_so, Complex64::from(self.omega_b)],
        ];
        let jt = [
            [self.upsilon_x, self.upsilon_y],
            [self.upsilon_y, -self.upsilon_x],
        ];
        let sz = [1.0, -1.0];
        let mut h = [[Complex64::new(0.0, 0.0); 4]; 4];
        for a in 0..2 {
            for b in 0..2 {
                for s in 0..2 {
                    h[2 * a + s][2 * b + s] = 0.5 * orb_so[a][b] * sz[s] + jt[a][b];
                }
            }
        }
        h
    }

    /// Eigenvectors |1⟩..|4⟩ in the same basis as [`Self::hamiltonian`].
    pub fn eigenvectors(&self) -> [[Complex64; 4]; 4] {
        let i = Complex64::i();
        let (s, c) = self.theta.sin_cos();
        let ep = Complex64::from_polar(1.0, self.phi);
        let em = ep.conj();
        let z = Complex64::new(0.0, 0.0);
        let up = |x: Complex64, y: Complex64| [x, z, y, z];
        let down = |x: Complex64, y: Complex64| [z, x, z, y];
        [
            down(c.into(), -i * s * em),
            up(c.into(), i * s * ep),
            down(s.into(), i * c * em),
            up(s.into(), -i * c * ep),
        ]
    }
}

// ---------------------------------------------------------------------------
// Strain coupling and emission rates (SI units)

/// Single-phonon strain coupling `d √(ħk²/(2ρAω)) ξ` in rad/s·√m.
pub fn coupling_strength(
    d: f64,
    density: f64,
    area: f64,
    omega: f64,
    k: f64,
    xi: f64,
) -> Result<f64, RateError> {
    if !(density > 0.0) {
        return Err(RateError::NonPositive("density"));
    }
    if !(area > 0.0) {
        return Err(RateError::NonPositive("area"));
    }
    if !(omega > 0.0) {
        return Err(RateError::NonPositive("frequency"));
    }
    Ok(d * (HBAR * k * k / (2.0 * density * area * omega)).sqrt() * xi)
}

/// Emission rate `d²ħω/(ρAv³)` of a single compression mode, rad/s.
pub fn emission_rate_compression(
    d: f64,
    density: f64,
    area: f64,
    velocity: f64,
    omega: f64,
) -> Result<f64, RateError> {
    for (name, v) in [
        ("strain sensitivity", d),
        ("density", density),
        ("area", area),
        ("velocity", velocity),
        ("frequency", omega),
    ] {
        if !(v > 0.0) {
            return Err(RateError::NonPositive(name));
        }
    }
    Ok(d * d * HBAR * omega / (density * area * velocity.powi(3)))
}

/// Emission rate `2g²/v` of a branch with coupling `g` (rad/s·√m).
pub fn emission_rate_from_coupling(g: f64, velocity: f64) -> f64 {
    2.0 * g * g / velocity
}

/// Cross-section of a triangular beam of top width `w` and etch angle
/// `angle` (rad), in the units of `w` squared.
pub fn triangular_area(width: f64, angle: f64) -> f64 {
    width * width * angle.tan() / 4.0
}

// ---------------------------------------------------------------------------
// Raman transfer

#[derive(Debug, Clone, PartialEq)]
pub struct RamanDriveParams {
    pub omega: f64,
    pub delta: f64,
    pub gamma_total: f64,
    /// Per-branch Γ_n; empty means a single branch carrying Γ_total.
    pub gamma_branches: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamanRates {
    pub gamma_branches: Vec<f64>,
    pub gamma_total: f64,
    pub stark_shift: f64,
    pub theta_offset: f64,
}

pub fn raman_rate(p: &RamanDriveParams) -> Result<RamanRates, RateError> {
    let denom = p.delta * p.delta + p.gamma_total * p.gamma_total / 4.0;
    if !(denom > 0.0) {
        return Err(RateError::SingularDetuning);
    }
    if p.gamma_total < 0.0 || p.gamma_branches.iter().any(|g| *g < 0.0) {
        return Err(RateError::Negative("emission rate"));
    }
    let branches = if p.gamma_branches.is_empty() {
        vec![p.gamma_total]
    } else {
        let sum: f64 = p.gamma_branches.iter().sum();
        if (sum - p.gamma_total).abs() > 1e-12 * p.gamma_total.abs().max(1.0) {
            return Err(RateError::BranchSum {
                sum,
                total: p.gamma_total,
            });
        }
        p.gamma_branches.clone()
    };
    let scale = p.omega * p.omega / (4.0 * denom);
    let gamma_branches: Vec<f64> = branches.iter().map(|g| scale * g).collect();
    Ok(RamanRates {
        gamma_total: gamma_branches.iter().sum(),
        gamma_branches,
        stark_shift: scale * p.delta,
        theta_offset: wrap_phase((p.gamma_total / (2.0 * p.delta)).atan()),
    })
}

/// Interference-modified emission rate `2γ sin²(φ/2)` of a node whose own
/// reflected field returns with phase `φ`.
pub fn effective_emission_rate(gamma: f64, phi: f64) -> f64 {
    let s = (phi / 2.0).sin();
    2.0 * gamma * s * s
}

/// Relative rate of the spurious |1⟩ → |4⟩ flip.
pub fn residual_flip_ratio(
    delta: f64,
    omega_b: f64,
    gamma_carrier: f64,
    gamma_flipped: f64,
) -> Result<f64, RateError> {
    let gap = delta - 2.0 * omega_b;
    if gap.abs() < FLIP_RESONANCE_TOLERANCE * delta.abs() || gap == 0.0 {
        return Err(RateError::ResonantFlip { gap: gap.abs() });
    }
    if !(gamma_carrier > 0.0) {
        return Err(RateError::NonPositive("carrier emission rate"));
    }
    Ok(delta * delta / (gap * gap) * gamma_flipped / gamma_carrier)
}

// ---------------------------------------------------------------------------
// Optical Raman scheme

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalRamanParams {
    pub omega_u: f64,
    pub omega_d: f64,
    pub delta_e: f64,
    /// Two-photon detuning δ, taken after Stark-shift compensation.
    pub delta: f64,
    pub gamma_rad: f64,
    pub omega_x: f64,
    pub splitting: f64,
    pub omega_b: f64,
    /// Phonon emission rate Γ(ω₀) of the |3⟩ → |1⟩ channel.
    pub gamma_carrier: f64,
    /// Phonon emission rate Γ(ω_B) of the direct |2⟩ → |1⟩ channel.
    pub gamma_zeeman: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalRamanRates {
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub eta: f64,
    pub omega_eff: f64,
    pub gamma_rad_u: f64,
    pub gamma_rad_d: f64,
    pub shift_u: f64,
    pub shift_d: f64,
    /// Spin-transfer rate into phonons at ω₀.
    pub gamma: f64,
    /// Direct spin-flip loss η²Γ(ω_B).
    pub zeeman_loss: f64,
}

pub fn optical_raman_params(p: &OpticalRamanParams) -> Result<OpticalRamanRates, RateError> {
    let minus = p.splitting - p.omega_b;
    let plus = p.splitting + p.omega_b;
    if minus == 0.0 || plus == 0.0 {
        return Err(RateError::DegenerateZeeman);
    }
    for (name, v) in [
        ("Ω_u", p.omega_u),
        ("Ω_d", p.omega_d),
        ("Γ_rad", p.gamma_rad),
        ("ω_x", p.omega_x),
        ("Γ(ω₀)", p.gamma_carrier),
        ("Γ(ω_B)", p.gamma_zeeman),
    ] {
        if v < 0.0 {
            return Err(RateError::Negative(name));
        }
    }
    let eta_minus = 0.5 * p.omega_x / minus;
    let eta_plus = 0.5 * p.omega_x / plus;
    let eta = eta_minus + eta_plus;
    let e2 = p.delta_e * p.delta_e + p.gamma_rad * p.gamma_rad / 4.0;
    if !(e2 > 0.0) {
        return Err(RateError::SingularDetuning);
    }
    let omega_eff = eta_minus / 2.0 * p.omega_d * p.omega_u / e2.sqrt();
    let u = eta_minus * eta_minus / 4.0 * p.omega_u * p.omega_u / e2;
    let d = p.omega_d * p.omega_d / (4.0 * e2);
    let gamma_rad_d = d * p.gamma_rad;
    let half_width = (gamma_rad_d + p.gamma_carrier) / 2.0;
    let denom = p.delta * p.delta + half_width * half_width;
    let gamma = if denom > 0.0 {
        omega_eff * omega_eff / 4.0 / denom * p.gamma_carrier
    } else {
        0.0
    };
    Ok(OpticalRamanRates {
        eta_minus,
        eta_plus,
        eta,
        omega_eff,
        gamma_rad_u: u * p.gamma_rad,
        gamma_rad_d,
        shift_u: u * p.delta_e,
        shift_d: d * p.delta_e,
        gamma,
        zeeman_loss: eta * eta * p.gamma_zeeman,
    })
}

// ---------------------------------------------------------------------------
// Boundary losses and cavity limit

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityLoss {
    /// Energy decay rate κ; infinite for a fully absorbing end.
    pub kappa: f64,
    /// Quality factor; infinite when lossless, zero when fully absorbing.
    pub q: f64,
    pub reflectivity: f64,
}

/// `κ = −ln(R) v/L`, `Q = ω₀/κ`.
pub fn reflectivity_q_conversion(
    reflectivity: f64,
    length: f64,
    velocity: f64,
    carrier: f64,
) -> Result<CavityLoss, RateError> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(RateError::Reflectivity(reflectivity));
    }
    if !(length > 0.0) {
        return Err(RateError::NonPositive("length"));
    }
    if !(velocity > 0.0) {
        return Err(RateError::NonPositive("velocity"));
    }
    if reflectivity == 0.0 {
        return Ok(CavityLoss {
            kappa: f64::INFINITY,
            q: 0.0,
            reflectivity,
        });
    }
    let kappa = -reflectivity.ln() * velocity / length;
    let q = if kappa == 0.0 {
        f64::INFINITY
    } else {
        carrier / kappa
    };
    Ok(CavityLoss {
        kappa,
        q,
        reflectivity,
    })
}

/// Inverse of [`reflectivity_q_conversion`].
pub fn q_to_reflectivity(
    q: f64,
    length: f64,
    velocity: f64,
    carrier: f64,
) -> Result<CavityLoss, RateError> {
    if q < 0.0 {
        return Err(RateError::Negative("quality factor"));
    }
    if !(length > 0.0) {
        return Err(RateError::NonPositive("length"));
    }
    if !(velocity > 0.0) {
        return Err(RateError::NonPositive("velocity"));
    }
    let kappa = carrier / q;
    Ok(CavityLoss {
        kappa,
        q,
        reflectivity: (-kappa * length / velocity).exp(),
    })
}

/// `κ = −ln(R) Δω/π`, the same loss expressed through the mode spacing.
pub fn kappa_from_spacing(reflectivity: f64, spacing: f64) -> f64 {
    -reflectivity.ln() * spacing / PI
}

/// Free spectral range `π v / L`.
pub fn mode_spacing(velocity: f64, length: f64) -> f64 {
    PI * velocity / length
}

/// Vacuum Rabi frequency `√(γ_max Δω_t / 2π)` of the cavity limit.
pub fn cavity_coupling(gamma_max: f64, spacing: f64) -> f64 {
    (gamma_max * spacing / (2.0 * PI)).sqrt()
}

/// Standing-wave coupling `√(2/L) (g Ω / 2δ) sin(k x)` of one node.
pub fn single_mode_coupling(
    g_branch: f64,
    omega: f64,
    delta: f64,
    k: f64,
    x: f64,
    length: f64,
) -> f64 {
    (2.0 / length).sqrt() * g_branch * omega / (2.0 * delta) * (k * x).sin()
}

/// Single-mode coupling `√(v γ_max / 2L) sin(k x)` matched to a transverse
/// Raman rate of γ_max/2.
pub fn matched_single_mode_coupling(
    gamma_max: f64,
    velocity: f64,
    length: f64,
    k: f64,
    x: f64,
) -> f64 {
    (velocity * gamma_max / (2.0 * length)).sqrt() * (k * x).sin()
}

/// Mode-volume scaling `g₀ √(λ/L)`.
pub fn mode_coupling_scaling(g0: f64, wavelength: f64, length: f64) -> f64 {
    g0 * (wavelength / length).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, mhz, to_mhz};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn spectrum_without_distortion() {
        let s = ground_state_spectrum(ghz(46.0), 0.0, 0.0, 0.0).unwrap();
        assert!(close(s.splitting, ghz(46.0), 1e-15));
        assert!((s.theta - PI / 4.0).abs() < 1e-15);
        assert_eq!(s.phi, 0.0);
    }

    #[test]
    fn spectrum_with_transverse_distortion() {
        let l = 3.0;
        let s = ground_state_spectrum(l, 0.0, l / 2.0, 0.0).unwrap();
        assert!((s.phi.tan() - 1.0).abs() < 1e-14);
        assert!(close(s.splitting, 2f64.sqrt() * l, 1e-15));
    }

    fn residual(s: &GroundStateSpectrum) -> f64 {
        let h = s.hamiltonian();
        let vs = s.eigenvectors();
        let scale = s.splitting.abs() + s.omega_b.abs();
        let mut worst: f64 = 0.0;
        for (e, v) in s.energies.iter().zip(vs.iter()) {
            for r in 0..4 {
                let hv: Complex64 = (0..4).map(|c| h[r][c] * v[c]).sum();
                worst = worst.max((hv - *e * v[r]).norm() / scale);
            }
        }
        worst
    }

    #[test]
    fn eigenpairs_at_zero_field() {
        let s = ground_state_spectrum(2.0, 0.0, 0.0, 0.0).unwrap();
        assert!(residual(&s) < 1e-12);
    }

    proptest! {
        #[test]
        fn eigenpairs_are_exact(
            l in 0.5f64..5.0, ux in -0.3f64..0.3, uy in -0.3f64..0.3, wb in -2.0f64..2.0,
        ) {
            let s = ground_state_spectrum(l, ux, uy, wb).unwrap();
            prop_assert!(residual(&s) < 1e-10, "residual {}", residual(&s));
            prop_assert!(((s.energies[2] - s.energies[0]) - s.splitting).abs() < 1e-12 * s.splitting);
            prop_assert!(((s.energies[3] - s.energies[1]) - s.splitting).abs() < 1e-12 * s.splitting);
        }

        #[test]
        fn raman_monotonicity(o in 0.0f64..200.0, d in 1.0f64..500.0, g in 0.1f64..10.0, step in 0.01f64..10.0) {
            let rate = |o: f64, d: f64| raman_rate(&RamanDriveParams {
                omega: o, delta: d, gamma_total: g, gamma_branches: vec![],
            }).unwrap().gamma_total;
            prop_assert!(rate(o + step, d) >= rate(o, d));
            prop_assert!(rate(o, d + step) <= rate(o, d));
            prop_assert!(rate(o, -(d + step)) <= rate(o, -d));
        }

        #[test]
        fn raman_branch_split(o in 0.0f64..200.0, d in 1.0f64..500.0, g in 0.1f64..10.0, beta in 0.0f64..1.0) {
            let r = raman_rate(&RamanDriveParams {
                omega: o, delta: d, gamma_total: g,
                gamma_branches: vec![beta * g, g - beta * g],
            }).unwrap();
            let sum: f64 = r.gamma_branches.iter().sum();
            prop_assert_eq!(sum, r.gamma_total);
            if r.gamma_total > 0.0 {
                prop_assert!((r.gamma_branches[0] / r.gamma_total - beta).abs() < 1e-12);
            }
        }

        #[test]
        fn q_round_trip(r in 0.01f64..0.999_999, l in 1.0f64..5000.0, v in 1000.0f64..20000.0) {
            let w0 = ghz(46.0);
            let fwd = reflectivity_q_conversion(r, l, v, w0).unwrap();
            let back = q_to_reflectivity(fwd.q, l, v, w0).unwrap();
            prop_assert!((back.reflectivity - r).abs() <= 1e-12 * r);
        }
    }

    #[test]
    fn raman_rate_at_full_drive() {
        let r = raman_rate(&RamanDriveParams {
            omega: mhz(70.0),
            delta: mhz(100.0),
            gamma_total: mhz(2.0),
            gamma_branches: vec![],
        })
        .unwrap();
        // 70² · 2 / (4 · 100² + 2²)
        let hand = 4900.0 * 2.0 / 40004.0;
        assert!(close(to_mhz(r.gamma_total), hand, 1e-13));
        assert!((r.theta_offset - (0.01f64).atan()).abs() < 1e-15);
        let flipped = raman_rate(&RamanDriveParams {
            delta: -mhz(100.0),
            ..RamanDriveParams {
                omega: mhz(70.0),
                delta: 0.0,
                gamma_total: mhz(2.0),
                gamma_branches: vec![],
            }
        })
        .unwrap();
        assert_eq!(flipped.gamma_total, r.gamma_total);
        assert_eq!(flipped.stark_shift, -r.stark_shift);
    }

    #[test]
    fn raman_drive_off() {
        let r = raman_rate(&RamanDriveParams {
            omega: 0.0,
            delta: 1.0,
            gamma_total: 0.1,
            gamma_branches: vec![],
        })
        .unwrap();
        assert_eq!(r.gamma_total, 0.0);
        assert_eq!(r.stark_shift, 0.0);
    }

    #[test]
    fn effective_rate_cases() {
        assert!((effective_emission_rate(1.0, PI) - 2.0).abs() < 1e-15);
        assert!(effective_emission_rate(1.0, 2.0 * PI).abs() < 1e-15);
        assert!((effective_emission_rate(1.0, PI / 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flip_ratio_cases() {
        assert_eq!(residual_flip_ratio(1.0, 0.0, 2.0, 2.0).unwrap(), 1.0);
        let r = residual_flip_ratio(mhz(100.0), ghz(1.0), 1.0, 1.0).unwrap();
        assert!(close(r, (100.0f64 / 1900.0).powi(2), 1e-12));
        assert_eq!(residual_flip_ratio(1.0, 5.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(residual_flip_ratio(2.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn compression_consistency() {
        let d = 2.0 * PI * 1e15;
        let a = 3e-15;
        let v = 1.71e4;
        let w = 2.0 * PI * 46e9;
        let gamma = emission_rate_compression(d, 3500.0, a, v, w).unwrap();
        let g = coupling_strength(d, 3500.0, a, w, w / v, 1.0).unwrap();
        assert!(close(emission_rate_from_coupling(g, v), gamma, 1e-12));
        let double = emission_rate_compression(d, 3500.0, a, v, 2.0 * w).unwrap();
        assert!(close(double, 2.0 * gamma, 1e-14));
        let quarter = coupling_strength(d, 3500.0, 4.0 * a, w, w / v, 1.0).unwrap();
        assert!(close(quarter, g / 2.0, 1e-14));
        assert_eq!(coupling_strength(d, 3500.0, a, w, w / v, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn optical_without_transverse_field() {
        let r = optical_raman_params(&OpticalRamanParams {
            omega_u: 1.0,
            omega_d: 1.0,
            delta_e: 10.0,
            delta: 1.0,
            gamma_rad: 0.1,
            omega_x: 0.0,
            splitting: 46.0,
            omega_b: 1.0,
            gamma_carrier: 0.01,
            gamma_zeeman: 0.01,
        })
        .unwrap();
        assert_eq!(r.eta, 0.0);
        assert_eq!(r.omega_eff, 0.0);
        assert_eq!(r.gamma, 0.0);
    }

    #[test]
    fn lossless_and_absorbing_ends() {
        let lossless = reflectivity_q_conversion(1.0, 100.0, 7000.0, ghz(46.0)).unwrap();
        assert_eq!(lossless.kappa, 0.0);
        assert!(lossless.q.is_infinite());
        let dead = reflectivity_q_conversion(0.0, 100.0, 7000.0, ghz(46.0)).unwrap();
        assert_eq!(dead.q, 0.0);
    }

    #[test]
    fn single_mode_coupling_node() {
        let k = 2.0 * PI / 0.2;
        assert!(single_mode_coupling(1.0, 1.0, 1.0, k, 0.1, 10.0).abs() < 1e-12);
        let g = matched_single_mode_coupling(mhz(0.25), 7300.0, 104.0, k, 0.05);
        let s = cavity_coupling(mhz(0.25), mode_spacing(7300.0, 104.0));
        assert!(close(g, s, 1e-12));
    }
}
