//! Closed-form references and sweep drivers built on the integrator.
//!
//! The oracles describe two centres exchanging an excitation through a single
//! lossy standing-wave mode; they are the yardstick against which the delay
//! network is checked in the cavity limit. The estimates collapse those
//! solutions into one-line fidelity figures.

mod output;
mod sweep;

pub use output::{write_curve_csv, write_matrix_csv, Sidecar};
pub use sweep::{connectivity_matrix, position_sweep, ConnectivityMatrix, PairProtocol, SweepPoint};

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::model::{NetworkConfig, NodeRole};
use crate::rates::kappa_from_spacing;

/// Fidelity above which a transfer beats any measure-and-prepare strategy.
pub const CLASSICAL_BOUND: f64 = 2.0 / 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("trajectory has no receiver")]
    NoReceiver,
    #[error("{0} must be positive (got {1})")]
    NonPositive(&'static str, f64),
    #[error("node decoupled from the {0} branch: sin(φ/2) = 0")]
    Decoupled(&'static str),
    #[error("connectivity needs at least two nodes (got {0})")]
    TooFewNodes(usize),
    #[error("invalid network: {0}")]
    Model(#[from] crate::model::ModelError),
    #[error("{0}")]
    Config(String),
}

/// `F(t) = |c_r(t)|²` on the recorded grid, with the running maximum over
/// every integration step taken from the run summary.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub peak: f64,
    pub t_peak: f64,
    pub last: f64,
}

impl FidelityCurve {
    pub fn beats_classical(&self) -> bool {
        self.peak > CLASSICAL_BOUND
    }
}

pub fn fidelity(trajectory: &Trajectory) -> Result<FidelityCurve, AnalyticsError> {
    if trajectory.receiver.is_none() {
        return Err(AnalyticsError::NoReceiver);
    }
    let s = &trajectory.summary;
    Ok(FidelityCurve {
        times: trajectory.times.clone(),
        values: trajectory.receiver_population(),
        peak: s.f_peak,
        t_peak: s.t_peak,
        last: s.f_final,
    })
}

/// Amplitudes of emitter, receiver and mode in the single-mode model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleMode {
    pub c_e: Complex64,
    pub c_r: Complex64,
    pub c_p: Complex64,
}

/// Eigenfrequencies `ω̃± = δ/2 − iκ/4 ± √(2g² + (δ − iκ/2)²/4)` of the
/// bright emitter-receiver combination coupled to the mode.
pub fn single_mode_frequencies(g: f64, delta: f64, kappa: f64) -> (Complex64, Complex64) {
    let half = Complex64::new(delta, -kappa / 2.0) / 2.0;
    let root = (2.0 * g * g + half * half).sqrt();
    (half + root, half - root)
}

/// Exact solution of
/// `ċ_j = −i g c_p`, `ċ_p = −(iδ + κ/2) c_p − i g (c_e + c_r)`
/// for `c_e(0) = 1`, all else zero.
///
/// The antisymmetric combination `c_e − c_r` is conserved; the symmetric one
/// and the mode amplitude evolve under a 2×2 generator whose exponential is
/// evaluated in a form that stays finite at critical damping.
pub fn single_mode_oracle(g: f64, delta: f64, kappa: f64, t: f64) -> SingleMode {
    if g == 0.0 {
        return SingleMode {
            c_e: Complex64::new(1.0, 0.0),
            c_r: Complex64::new(0.0, 0.0),
            c_p: Complex64::new(0.0, 0.0),
        };
    }
    let i = Complex64::i();
    // d/dt (s, p) = M (s, p) with s = c_e + c_r
    let m = [
        [Complex64::new(0.0, 0.0), -2.0 * i * g],
        [-i * g, -(i * delta + kappa / 2.0)],
    ];
    let mu = (m[0][0] + m[1][1]) / 2.0;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let lambda = (mu * mu - det).sqrt();
    let z = lambda * t;
    let cosh = z.cosh();
    // sinh(z)/λ, expanded near z = 0
    let sinhc = if z.norm() < 1e-4 {
        t * (1.0 + z * z / 6.0 + z * z * z * z / 120.0)
    } else {
        z.sinh() / lambda
    };
    let growth = (mu * t).exp();
    // first column of exp(Mt): s(0) = 1, p(0) = 0
    let s = growth * (cosh + sinhc * (m[0][0] - mu));
    let p = growth * sinhc * m[1][0];
    SingleMode {
        c_e: (s + 1.0) / 2.0,
        c_r: (s - 1.0) / 2.0,
        c_p: p,
    }
}

/// Single-mode parameters `(g, δ, κ)` matching a two-node network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeParams {
    pub g: f64,
    pub delta: f64,
    pub kappa: f64,
    pub spacing: f64,
}

/// Maps a network onto the transverse standing mode nearest its carrier.
///
/// The emitter's transverse rate `γ_t = β_t γ_max` sets
/// `g = √(γ_t Δω_t/π)·|sin(k_t x_e)|`; `δ` is the carrier offset from the
/// nearest mode `mπ/L` and `κ` follows from the transverse reflectivity.
pub fn single_mode_params(cfg: &NetworkConfig) -> Result<SingleModeParams, AnalyticsError> {
    if cfg.is_infinite() {
        return Err(AnalyticsError::Config("single-mode oracle needs a finite waveguide".into()));
    }
    let branch = cfg
        .transverse_branch()
        .ok_or_else(|| AnalyticsError::Config("no transverse branch".into()))?;
    let b = &cfg.branches[branch];
    let e = cfg
        .role_index(NodeRole::Emitter)
        .ok_or_else(|| AnalyticsError::Config("no emitter".into()))?;
    let node = &cfg.nodes[e];
    let gamma_max = node
        .drive
        .gamma_max()
        .ok_or_else(|| AnalyticsError::Config("emitter is undriven".into()))?;
    let gamma_t = gamma_max * node.branch_weights()[branch];
    let spacing = b.mode_spacing(cfg.length);
    let mode = (b.wavevector * cfg.length / PI).round() * PI / cfg.length;
    Ok(SingleModeParams {
        g: (gamma_t * spacing / PI).sqrt() * (b.wavevector * node.position).sin().abs(),
        delta: b.group_velocity * (b.wavevector - mode),
        kappa: kappa_from_spacing(b.reflectivity, spacing),
        spacing,
    })
}

/// Peak of `|c_r|²` and its time on `n` uniform samples of `[0, t_max]`.
pub fn single_mode_peak(p: &SingleModeParams, t_max: f64, n: usize) -> (f64, f64) {
    (0..=n)
        .map(|i| {
            let t = t_max * i as f64 / n as f64;
            (single_mode_oracle(p.g, p.delta, p.kappa, t).c_r.norm_sqr(), t)
        })
        .fold((0.0, 0.0), |best, x| if x.0 > best.0 { x } else { best })
}

/// `|c_r|² ≈ ¼[1 − cos(√2 g t) e^{−κt/4}]²`, the resonant weak-loss limit.
pub fn resonant_population(g: f64, kappa: f64, t: f64) -> f64 {
    let x = 1.0 - (SQRT_2 * g * t).cos() * (-kappa * t / 4.0).exp();
    0.25 * x * x
}

/// Resonant transfer time `π/(√2 g)`.
pub fn resonant_transfer_time(g: f64) -> f64 {
    PI / (SQRT_2 * g)
}

/// Peak of the resonant limit, `¼(1 + e^{−κ T_g/4})²`.
pub fn resonant_fidelity_estimate(g: f64, kappa: f64) -> f64 {
    let x = 1.0 + (-kappa * resonant_transfer_time(g) / 4.0).exp();
    0.25 * x * x
}

/// Receiver population with the mode detuned by half the spacing,
/// `¼|1 − exp[(4ig²/Δω − g²κ/δ²) t]|²` with `δ = Δω/2`.
pub fn detuned_population(g: f64, spacing: f64, kappa: f64, t: f64) -> f64 {
    let delta = spacing / 2.0;
    let g2 = g * g;
    let exponent = Complex64::new(-g2 / (delta * delta) * kappa, 4.0 * g2 / spacing) * t;
    0.25 * (1.0 - exponent.exp()).norm_sqr()
}

/// Virtual-phonon transfer time `πΔω/(4g²)`.
pub fn detuned_transfer_time(g: f64, spacing: f64) -> f64 {
    PI * spacing / (4.0 * g * g)
}

/// `F ≈ R − πΔω_t/(16 g² T₂*)`; pass `f64::INFINITY` to drop dephasing.
pub fn detuned_fidelity_estimate(
    reflectivity: f64,
    spacing: f64,
    g: f64,
    t2: f64,
) -> Result<f64, AnalyticsError> {
    if !(t2 > 0.0) {
        return Err(AnalyticsError::NonPositive("T2*", t2));
    }
    Ok(reflectivity - PI * spacing / (16.0 * g * g * t2))
}

/// `F ≃ R − π²/(8 T₂* γ_max)`, the same estimate with `g² = γ_max Δω/2π`.
pub fn fidelity_scaling(reflectivity: f64, gamma_max: f64, t2: f64) -> Result<f64, AnalyticsError> {
    if !(t2 > 0.0) {
        return Err(AnalyticsError::NonPositive("T2*", t2));
    }
    Ok(reflectivity - PI * PI / (8.0 * t2 * gamma_max))
}

/// Phases entering the longitudinal leak of a dark-state transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakPhases {
    pub emitter_t: f64,
    pub emitter_l: f64,
    pub receiver_t: f64,
    pub receiver_l: f64,
    pub loop_t: f64,
    pub loop_l: f64,
}

impl LeakPhases {
    /// Maximal coupling on both branches with matched loop phases.
    pub const SYMMETRIC: LeakPhases = LeakPhases {
        emitter_t: PI,
        emitter_l: PI,
        receiver_t: PI,
        receiver_l: PI,
        loop_t: 0.0,
        loop_l: 0.0,
    };

    /// Phases after displacing the two centres by `dx_e`, `dx_r` away from
    /// their mirrors, starting from [`LeakPhases::SYMMETRIC`] at fixed length.
    pub fn displaced(k_t: f64, k_l: f64, dx_e: f64, dx_r: f64) -> Self {
        LeakPhases {
            emitter_t: PI + 2.0 * k_t * dx_e,
            emitter_l: PI + 2.0 * k_l * dx_e,
            receiver_t: PI + 2.0 * k_t * dx_r,
            receiver_l: PI + 2.0 * k_l * dx_r,
            loop_t: 0.0,
            loop_l: 0.0,
        }
    }
}

/// Longitudinal signal left over when the transverse reflection is nulled:
/// `r_l = |1 − [sin(φ_e^t/2)/sin(φ_e^l/2)][sin(φ_r^l/2)/sin(φ_r^t/2)] e^{i(φ_L^t − φ_L^l)/2}|²`.
pub fn multimode_leak(p: &LeakPhases) -> Result<f64, AnalyticsError> {
    let half = |x: f64| (x / 2.0).sin();
    let (se_l, sr_t) = (half(p.emitter_l), half(p.receiver_t));
    if se_l.abs() < 1e-300 {
        return Err(AnalyticsError::Decoupled("longitudinal"));
    }
    if sr_t.abs() < 1e-300 {
        return Err(AnalyticsError::Decoupled("transverse"));
    }
    let ratio = half(p.emitter_t) / se_l * half(p.receiver_l) / sr_t;
    let rot = Complex64::from_polar(1.0, (p.loop_t - p.loop_l) / 2.0);
    Ok((1.0 - ratio * rot).norm_sqr())
}

/// Small-displacement form as usually quoted,
/// `((k_l − k_t)²/4)(δx_e² + δx_r²)²`.
///
/// The powers do not balance dimensionally; compare with
/// [`leak_leading_order`] for the consistent expansion.
pub fn leak_small_displacement(k_t: f64, k_l: f64, dx_e: f64, dx_r: f64) -> f64 {
    let dk = k_l - k_t;
    let s = dx_e * dx_e + dx_r * dx_r;
    dk * dk / 4.0 * s * s
}

/// Leading term of [`multimode_leak`] at [`LeakPhases::displaced`],
/// `((k_t² − k_l²)²/4)(δx_e² − δx_r²)²`.
pub fn leak_leading_order(k_t: f64, k_l: f64, dx_e: f64, dx_r: f64) -> f64 {
    let dk2 = k_t * k_t - k_l * k_l;
    let s = dx_e * dx_e - dx_r * dx_r;
    dk2 * dk2 / 4.0 * s * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn cavity(k: f64, x_e: f64, length: &str) -> NetworkConfig {
        crate::config::from_str(&format!(
            r#"
[waveguide]
length_um = {length}
[branches.transverse]
group_velocity_m_s = 7000.0
wavevector_rad_per_um = {k}
beta = 0.5
reflectivity = 0.9
[branches.longitudinal]
group_velocity_m_s = 17000.0
wavevector_rad_per_um = 16.0
beta = 0.5
reflectivity = 0.9
[nodes.e]
position_um = {x_e}
role = "emitter"
[nodes.e.drive]
kind = "constant"
gamma_max_mhz = 0.25
[simulation]
t_max_us = 1.0
"#
        ))
        .unwrap()
    }

    #[test]
    fn single_mode_params_on_an_antinode() {
        // mode 1000 of a 100 μm guide, emitter on an antinode
        let k = 1000.0 * PI / 100.0;
        let p = single_mode_params(&cavity(k, 0.05, "100.0")).unwrap();
        let spacing = crate::rates::mode_spacing(7000.0, 100.0);
        assert!(close(p.spacing, spacing, 1e-12));
        // β_t = 1/2 turns √(β_t γ Δω/π) into the cavity-limit coupling
        let g = crate::rates::cavity_coupling(crate::units::mhz(0.25), spacing);
        assert!(close(p.g, g, 1e-9 * g), "{} vs {g}", p.g);
        assert!(p.delta.abs() < 1e-9);
        assert!(close(p.kappa, -(0.9f64).ln() * 70.0, 1e-12));
    }

    #[test]
    fn single_mode_params_detuning_and_errors() {
        let k = 1000.0 * PI / 100.0 + 1e-3;
        let p = single_mode_params(&cavity(k, 0.05, "100.0")).unwrap();
        assert!(close(p.delta, 7000.0 * 1e-3, 1e-6));
        // a transverse node decouples the emitter
        let p = single_mode_params(&cavity(k - 1e-3, 0.1, "100.0")).unwrap();
        assert!(p.g.abs() < 1e-9);
        assert!(single_mode_params(&cavity(k, 0.05, "\"inf\"")).is_err());
    }

    #[test]
    fn single_mode_peak_of_the_lossless_resonance() {
        let p = SingleModeParams {
            g: 1.3,
            delta: 0.0,
            kappa: 0.0,
            spacing: 100.0,
        };
        let tg = resonant_transfer_time(p.g);
        let (f, t) = single_mode_peak(&p, 1.5 * tg, 3000);
        assert!(close(f, 1.0, 1e-6));
        assert!(close(t, tg, 1.5 * tg / 3000.0));
    }

    #[test]
    fn lossless_resonant_oracle() {
        let g = 1.3;
        let tg = resonant_transfer_time(g);
        let s = single_mode_oracle(g, 0.0, 0.0, tg);
        assert!(close(s.c_r.norm_sqr(), 1.0, 1e-12));
        for t in [0.1, 0.7, 2.3] {
            let s = single_mode_oracle(g, 0.0, 0.0, t);
            assert!(close(s.c_r.norm_sqr(), resonant_population(g, 0.0, t), 1e-12));
        }
    }

    #[test]
    fn paper_closed_form_agrees() {
        // c_r = −1 + c g/ω₋ (e^{−iω₋t} + 1) − c g/ω₊ (e^{−iω₊t} + 1)
        let (g, delta, kappa) = (1.1, 0.4, 0.9);
        let (wp, wm) = single_mode_frequencies(g, delta, kappa);
        let c = 1.0 / (2.0 * g) / (1.0 / wm - 1.0 / wp);
        let i = Complex64::i();
        for t in [0.0, 0.5, 1.7, 4.0] {
            let cr = -1.0 + c * g / wm * ((-i * wm * t).exp() + 1.0)
                - c * g / wp * ((-i * wp * t).exp() + 1.0);
            let cp = c * (-i * wm * t).exp() - c * (-i * wp * t).exp();
            let s = single_mode_oracle(g, delta, kappa, t);
            assert!((s.c_r - cr).norm() < 1e-12);
            assert!((s.c_p - cp).norm() < 1e-12);
        }
    }

    #[test]
    fn critical_damping_is_finite() {
        let g = 1.0;
        let kappa = 4.0 * SQRT_2 * g;
        let s = single_mode_oracle(g, 0.0, kappa, 0.8);
        assert!(s.c_r.norm().is_finite() && s.c_r.norm() > 0.0);
        let near = single_mode_oracle(g, 0.0, kappa * (1.0 + 1e-9), 0.8);
        assert!((s.c_r - near.c_r).norm() < 1e-7);
    }

    #[test]
    fn weak_loss_matches_the_approximation() {
        let g = 1.0;
        let s = single_mode_oracle(g, 0.0, g, resonant_transfer_time(g));
        let approx = resonant_fidelity_estimate(g, g);
        assert!(close(s.c_r.norm_sqr(), approx, 0.02), "{} {}", s.c_r.norm_sqr(), approx);
    }

    #[test]
    fn far_detuned_limit() {
        let (g, spacing) = (1.0, 80.0);
        let kappa = 0.3;
        let tg = detuned_transfer_time(g, spacing);
        let s = single_mode_oracle(g, spacing / 2.0, kappa, tg);
        let approx = detuned_population(g, spacing, kappa, tg);
        assert!(close(s.c_r.norm_sqr(), approx, 0.02), "{} {}", s.c_r.norm_sqr(), approx);
        assert!(approx > 0.9);
    }

    #[test]
    fn degenerate_coupling_freezes() {
        let s = single_mode_oracle(0.0, 1.0, 1.0, 5.0);
        assert_eq!(s.c_e, Complex64::new(1.0, 0.0));
        assert_eq!(s.c_r.norm(), 0.0);
    }

    #[test]
    fn estimate_examples() {
        assert_eq!(detuned_fidelity_estimate(0.92, 3.0, 1.0, f64::INFINITY).unwrap(), 0.92);
        assert!(fidelity_scaling(0.9, 1.0, 0.0).is_err());
        let gamma = crate::units::mhz(0.25);
        let f = fidelity_scaling(1.0, gamma, 100.0).unwrap();
        assert!(f > 0.99);
        // both forms agree once g² = γΔω/2π
        let spacing = 140.0 * gamma;
        let g = (gamma * spacing / (2.0 * PI)).sqrt();
        let a = detuned_fidelity_estimate(0.95, spacing, g, 50.0).unwrap();
        let b = fidelity_scaling(0.95, gamma, 50.0).unwrap();
        assert!(close(a, b, 1e-12));
    }

    #[test]
    fn leak_examples() {
        assert!(multimode_leak(&LeakPhases::SYMMETRIC).unwrap() < 1e-30);
        let flipped = LeakPhases {
            loop_t: 2.0 * PI,
            ..LeakPhases::SYMMETRIC
        };
        assert!(close(multimode_leak(&flipped).unwrap(), 4.0, 1e-12));
        let decoupled = LeakPhases {
            emitter_l: 0.0,
            ..LeakPhases::SYMMETRIC
        };
        assert_eq!(multimode_leak(&decoupled), Err(AnalyticsError::Decoupled("longitudinal")));
    }

    #[test]
    fn leak_expansion_orders() {
        let (kt, kl) = (31.7, 16.6);
        let (dxe, dxr) = (0.004, 0.001);
        let exact = multimode_leak(&LeakPhases::displaced(kt, kl, dxe, dxr)).unwrap();
        let lead = leak_leading_order(kt, kl, dxe, dxr);
        assert!((exact - lead).abs() < 0.05 * lead, "{exact} {lead}");
        assert!(leak_small_displacement(kt, kl, 0.0, 0.0) == 0.0);
    }

    proptest! {
        #[test]
        fn mode_model_conserves_norm_without_loss(g in 0.05f64..5.0, delta in -10.0f64..10.0, t in 0.0f64..20.0) {
            let s = single_mode_oracle(g, delta, 0.0, t);
            let n = s.c_e.norm_sqr() + s.c_r.norm_sqr() + s.c_p.norm_sqr();
            prop_assert!((n - 1.0).abs() < 1e-10);
        }

        #[test]
        fn oracle_solves_its_equations(g in 0.2f64..3.0, delta in -3.0f64..3.0, kappa in 0.0f64..3.0, t in 0.1f64..5.0) {
            let h = 1e-5;
            let a = single_mode_oracle(g, delta, kappa, t - h);
            let b = single_mode_oracle(g, delta, kappa, t + h);
            let s = single_mode_oracle(g, delta, kappa, t);
            let i = Complex64::i();
            let de = (b.c_e - a.c_e) / (2.0 * h);
            let dp = (b.c_p - a.c_p) / (2.0 * h);
            let rhs_e = -i * g * s.c_p;
            let rhs_p = -(i * delta + kappa / 2.0) * s.c_p - i * g * (s.c_e + s.c_r);
            prop_assert!((de - rhs_e).norm() <= 1e-6 * rhs_e.norm().max(1.0));
            prop_assert!((dp - rhs_p).norm() <= 1e-6 * rhs_p.norm().max(1.0));
        }

        #[test]
        fn leak_is_periodic(
            et in 0.3f64..6.0, el in 0.3f64..6.0, rt in 0.3f64..6.0, rl in 0.3f64..6.0,
            lt in -6.0f64..6.0, ll in -6.0f64..6.0, which in 0usize..4,
        ) {
            let p = LeakPhases { emitter_t: et, emitter_l: el, receiver_t: rt, receiver_l: rl, loop_t: lt, loop_l: ll };
            let base = multimode_leak(&p).unwrap();
            let tau = 2.0 * PI;
            let all = LeakPhases {
                emitter_t: et + tau, emitter_l: el + tau, receiver_t: rt + tau,
                receiver_l: rl + tau, loop_t: lt + tau, loop_l: ll + tau,
            };
            prop_assert!((multimode_leak(&all).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
            // a node phase moves with the loop phase of its own branch
            let mut one = p;
            match which {
                0 => { one.emitter_t += tau; one.loop_t += tau; }
                1 => { one.emitter_l += tau; one.loop_l += tau; }
                2 => { one.receiver_t += tau; one.loop_t += tau; }
                _ => { one.receiver_l += tau; one.loop_l += tau; }
            }
            prop_assert!((multimode_leak(&one).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
        }
    }
}
