use rayon::prelude::*;
use toml::Table;

use super::AnalyticsError;
use crate::config::{self, ParamPath};
use crate::dynamics::{simulate_with, Recording, SimOptions, Summary};
use crate::model::{validate, DriveProgram, NetworkConfig, NodeRole, NodeSpec};

const SUMMARY_ONLY: SimOptions = SimOptions {
    recording: Recording::Summary,
};

/// One scenario of a one-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub f_peak: f64,
    pub t_peak: f64,
    pub f_final: f64,
    pub norm_residual: f64,
}

impl SweepPoint {
    fn new(value: f64, s: &Summary) -> Self {
        SweepPoint {
            value,
            f_peak: s.f_peak,
            t_peak: s.t_peak,
            f_final: s.f_final,
            norm_residual: s.norm_residual,
        }
    }
}

/// Runs the scenario `document` once per value of `param`.
///
/// Scenarios run concurrently; the result is in the order of `values` and
/// independent of the thread count.
pub fn position_sweep(
    document: &Table,
    param: &ParamPath,
    values: &[f64],
) -> Result<Vec<SweepPoint>, AnalyticsError> {
    param
        .resolve(document)
        .map_err(|e| AnalyticsError::Config(e.to_string()))?;
    values
        .par_iter()
        .map(|&value| {
            let mut doc = document.clone();
            param
                .set(&mut doc, value)
                .map_err(|e| AnalyticsError::Config(e.to_string()))?;
            let cfg = config::from_document(&doc).map_err(|e| AnalyticsError::Config(e.to_string()))?;
            let cfg = validate(&cfg)?;
            Ok(SweepPoint::new(value, &simulate_with(&cfg, &SUMMARY_ONLY).summary))
        })
        .collect()
}

/// Drive programs assigned to the two active nodes of every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProtocol {
    pub emitter: DriveProgram,
    pub receiver: DriveProgram,
}

impl PairProtocol {
    /// Ramped emitter and dark-state receiver sharing one rate cap.
    pub fn dark_state(gamma_max: f64, t_p: f64) -> Self {
        PairProtocol {
            emitter: DriveProgram::ExponentialRamp {
                gamma: gamma_max,
                t_p,
                phase: 0.0,
                gamma_max,
            },
            receiver: DriveProgram::DarkState { gamma_max },
        }
    }

    pub fn describe(&self) -> String {
        format!("{} -> {}", self.emitter.kind(), self.receiver.kind())
    }
}

/// Peak fidelity for every ordered pair of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityMatrix {
    pub size: usize,
    pub positions: Vec<f64>,
    /// `values[e * size + r]`; the diagonal is NaN.
    pub values: Vec<f64>,
    pub t_max: f64,
    pub reflectivity: Vec<f64>,
    pub protocol: String,
}

impl ConnectivityMatrix {
    pub fn get(&self, emitter: usize, receiver: usize) -> f64 {
        self.values[emitter * self.size + receiver]
    }

    /// Off-diagonal entries in row-major order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.size * self.size)
            .filter(|k| k / self.size != k % self.size)
            .map(|k| self.values[k])
    }

    /// Fraction of off-diagonal pairs above `threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        let total = self.size * (self.size - 1);
        self.off_diagonal().filter(|&f| f > threshold).count() as f64 / total as f64
    }
}

/// Builds the two-active-node network for one ordered pair. Nodes are
/// ordered by position and named after their index in `positions`.
pub fn pair_network(
    base: &NetworkConfig,
    prototype: &NodeSpec,
    positions: &[f64],
    protocol: &PairProtocol,
    emitter: usize,
    receiver: usize,
) -> NetworkConfig {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|a, b| positions[*a].total_cmp(&positions[*b]));
    let nodes = order
        .iter()
        .map(|&i| {
            let (role, drive) = if i == emitter {
                (NodeRole::Emitter, protocol.emitter.clone())
            } else if i == receiver {
                (NodeRole::Receiver, protocol.receiver.clone())
            } else {
                (NodeRole::Passive, DriveProgram::Off)
            };
            NodeSpec {
                name: format!("n{i}"),
                position: positions[i],
                role,
                drive,
                ..prototype.clone()
            }
        })
        .collect();
    NetworkConfig {
        nodes,
        ..base.clone()
    }
}

/// Runs `protocol` for every ordered pair of `positions`, all other
/// centres left undriven, and records the peak fidelity within `base.t_max`.
///
/// The node geometry, drive caps and simulation settings come from `base`
/// (whose own node list is ignored) and `prototype`; entries follow the
/// order of `positions`, so permuting the input permutes rows and columns.
pub fn connectivity_matrix(
    base: &NetworkConfig,
    prototype: &NodeSpec,
    positions: &[f64],
    protocol: &PairProtocol,
) -> Result<ConnectivityMatrix, AnalyticsError> {
    let n = positions.len();
    if n < 2 {
        return Err(AnalyticsError::TooFewNodes(n));
    }
    let values = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (e, r) = (k / n, k % n);
            if e == r {
                return Ok(f64::NAN);
            }
            let cfg = validate(&pair_network(base, prototype, positions, protocol, e, r))?;
            Ok(simulate_with(&cfg, &SUMMARY_ONLY).summary.f_peak)
        })
        .collect::<Result<Vec<f64>, AnalyticsError>>()?;
    Ok(ConnectivityMatrix {
        size: n,
        positions: positions.to_vec(),
        values,
        t_max: base.t_max,
        reflectivity: base.branches.iter().map(|b| b.reflectivity).collect(),
        protocol: protocol.describe(),
    })
}
