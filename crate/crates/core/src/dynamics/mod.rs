//! Delay-network integrator.
//!
//! Each active node carries a complex amplitude `c_j` driven by the sum of
//! its incoming directed fields; its outgoing fields follow from the local
//! input-output relation and are stored in per-stream delay lines that feed
//! the neighbouring node or, after a round trip, the node itself. Nodes that
//! cannot interact with the field (no drive and no scattering) are pruned,
//! and their recorded fields are reconstructed from the active streams.

mod delay;
mod engine;
mod trajectory;

pub use delay::{DelayLine, Destination, STAGE_OFFSETS};
pub use engine::{simulate, simulate_with, Recording, SimOptions};
pub use trajectory::{ControlTrace, NodeFields, NormSample, Summary, Trajectory};

use num_complex::Complex64;

/// Right-hand side of the amplitude equation for one node.
///
/// `gammas[n]` is the rate into branch `n`, `inputs[n]` the total incoming
/// field `Φ_in,L + Φ_in,R` on that branch, `t2` an optional dephasing time.
pub fn node_derivative(
    c: Complex64,
    gammas: &[f64],
    theta: f64,
    inputs: &[Complex64],
    t2: Option<f64>,
) -> Complex64 {
    let total: f64 = gammas.iter().sum();
    let rot = Complex64::from_polar(1.0, -theta);
    let drive: Complex64 = gammas
        .iter()
        .zip(inputs)
        .map(|(g, phi)| (g / 2.0).sqrt() * phi)
        .sum();
    let deph = t2.map_or(0.0, |t| 1.0 / t);
    -0.5 * (total + deph) * c - rot * drive
}

/// Outgoing field of one direction and branch.
pub fn output_field(phi_in: Complex64, gamma: f64, c: Complex64, theta: f64) -> Complex64 {
    phi_in + (gamma / 2.0).sqrt() * c * Complex64::from_polar(1.0, theta)
}

/// Instantaneous branch-mixing amplitudes of an undriven scatterer with
/// detuning `detuning` and bare rates `bare`, row-major `B × B`:
/// `s_{nn'} = −i √(Γ_n Γ_n') / 2 / (δ + iΓ/2)`.
///
/// A field pair `(in_R, in_L)` leaves as `out = in + s·(in_R + in_L)` in both
/// directions, which is unitary.
pub fn scattering_matrix(detuning: f64, bare: &[f64]) -> Vec<Complex64> {
    let total: f64 = bare.iter().sum();
    let pole = Complex64::new(detuning, total / 2.0);
    let mut s = Vec::with_capacity(bare.len() * bare.len());
    for gn in bare {
        for gq in bare {
            s.push(-Complex64::i() * (gn * gq).sqrt() / 2.0 / pole);
        }
    }
    s
}

/// Field scattered back into branch `n` of a receiver by an undriven centre.
///
/// `delayed[n']` is the receiver's left-moving output on branch `n'`
/// already retarded by `τ_n + τ_n'`; `phases[n']` is the receiver-to-centre
/// propagation phase on that branch.
pub fn scattered_field(
    n: usize,
    delayed: &[Complex64],
    detuning: f64,
    bare: &[f64],
    phases: &[f64],
) -> Complex64 {
    let total: f64 = bare.iter().sum();
    let pole = Complex64::new(detuning, total / 2.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (q, field) in delayed.iter().enumerate() {
        let weight = (bare[n] / 2.0 * bare[q] / 2.0).sqrt();
        acc += weight * field * Complex64::from_polar(1.0, phases[n] - phases[q]);
    }
    -Complex64::i() / pole * acc
}
