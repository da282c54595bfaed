//! Network description: phonon branches, defect nodes, drive programs and
//! simulation controls, plus the validation pass that turns a raw
//! [`NetworkConfig`] into a [`ValidatedConfig`] with resolved delays and
//! propagation phases.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance on the branch fraction sum.
pub const BETA_SUM_TOLERANCE: f64 = 1e-12;

/// A node whose detuning is below this multiple of its bare emission rate
/// is flagged as outside the far-detuned regime.
pub const FAR_DETUNED_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BranchLabel {
    Longitudinal,
    Transverse,
    Custom(String),
}

impl BranchLabel {
    pub fn parse(s: &str) -> Self {
        match s {
            "longitudinal" | "l" => BranchLabel::Longitudinal,
            "transverse" | "t" => BranchLabel::Transverse,
            other => BranchLabel::Custom(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            BranchLabel::Longitudinal => "longitudinal",
            BranchLabel::Transverse => "transverse",
            BranchLabel::Custom(s) => s,
        }
    }
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One guided phonon branch, characterised at the carrier frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub label: BranchLabel,
    /// Group velocity in μm/μs (numerically m/s).
    pub group_velocity: f64,
    /// Carrier wavevector in rad/μm.
    pub wavevector: f64,
    /// Default fraction of emission into this branch.
    pub beta: f64,
    /// Power reflectivity of the waveguide ends.
    pub reflectivity: f64,
}

impl BranchSpec {
    /// Free spectral range `π v / L` of a waveguide of length `length`.
    pub fn mode_spacing(&self, length: f64) -> f64 {
        std::f64::consts::PI * self.group_velocity / length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Emitter,
    Receiver,
    Mirror,
    Passive,
}

impl NodeRole {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "emitter" => NodeRole::Emitter,
            "receiver" => NodeRole::Receiver,
            "mirror" => NodeRole::Mirror,
            "passive" => NodeRole::Passive,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Emitter => "emitter",
            NodeRole::Receiver => "receiver",
            NodeRole::Mirror => "mirror",
            NodeRole::Passive => "passive",
        }
    }
}

/// How the effective Raman decay rate γ(t) and the drive phase θ(t) of a
/// node evolve during a run. Rates are in rad/μs, times in μs.
#[derive(Debug, Clone, PartialEq)]
pub enum DriveProgram {
    Off,
    Constant {
        gamma: f64,
        phase: f64,
        gamma_max: f64,
    },
    /// `γ(t) = gamma · min{1, exp((t − 5 t_p)/t_p)}`.
    ExponentialRamp {
        gamma: f64,
        t_p: f64,
        phase: f64,
        gamma_max: f64,
    },
    /// Receiver controls synthesised online to null the back-reflected
    /// transverse field.
    DarkState { gamma_max: f64 },
}

impl DriveProgram {
    pub fn is_active(&self) -> bool {
        match self {
            DriveProgram::Off => false,
            DriveProgram::Constant { gamma, .. } => *gamma > 0.0,
            DriveProgram::ExponentialRamp { gamma, .. } => *gamma > 0.0,
            DriveProgram::DarkState { .. } => true,
        }
    }

    pub fn gamma_max(&self) -> Option<f64> {
        match self {
            DriveProgram::Off => None,
            DriveProgram::Constant { gamma_max, .. }
            | DriveProgram::ExponentialRamp { gamma_max, .. }
            | DriveProgram::DarkState { gamma_max } => Some(*gamma_max),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DriveProgram::Off => "off",
            DriveProgram::Constant { .. } => "constant",
            DriveProgram::ExponentialRamp { .. } => "exponential_ramp",
            DriveProgram::DarkState { .. } => "dark_state",
        }
    }

    /// Open-loop rate at time `t`; `None` for the closed-loop controller.
    pub fn rate_at(&self, t: f64) -> Option<f64> {
        match self {
            DriveProgram::Off => Some(0.0),
            DriveProgram::Constant { gamma, .. } => Some(*gamma),
            DriveProgram::ExponentialRamp { gamma, t_p, .. } => {
                Some(gamma * crate::protocols::exponential_ramp(t, *t_p))
            }
            DriveProgram::DarkState { .. } => None,
        }
    }

    pub fn phase(&self) -> f64 {
        match self {
            DriveProgram::Constant { phase, .. } | DriveProgram::ExponentialRamp { phase, .. } => {
                *phase
            }
            _ => 0.0,
        }
    }
}

/// One defect centre.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    /// Position along the waveguide in μm.
    pub position: f64,
    /// Drive detuning δ in rad/μs.
    pub detuning: f64,
    /// Bare phonon emission rate Γ_n(ω₀) into each branch, rad/μs.
    pub bare_emission: Vec<f64>,
    pub drive: DriveProgram,
    pub role: NodeRole,
    /// Qubit dephasing time T₂* in μs; `None` disables dephasing.
    pub dephasing_time: Option<f64>,
}

impl NodeSpec {
    pub fn total_emission(&self) -> f64 {
        self.bare_emission.iter().sum()
    }

    /// Fraction of this node's emission going into each branch.
    pub fn branch_weights(&self) -> Vec<f64> {
        let total = self.total_emission();
        if total > 0.0 {
            self.bare_emission.iter().map(|g| g / total).collect()
        } else {
            vec![0.0; self.bare_emission.len()]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Waveguide length in μm; `f64::INFINITY` for an unbounded guide.
    pub length: f64,
    /// Carrier frequency ω₀ in rad/μs.
    pub carrier: f64,
    pub branches: Vec<BranchSpec>,
    pub nodes: Vec<NodeSpec>,
    pub scattering: bool,
    /// Integration step in μs; `None` selects the default step.
    pub dt: Option<f64>,
    /// Simulated time span in μs.
    pub t_max: f64,
    /// Record every n-th step in the trajectory; `None` picks a stride that
    /// keeps roughly [`DEFAULT_RECORDED_SAMPLES`] rows.
    pub record_every: Option<usize>,
    /// Initial amplitude of the emitter.
    pub initial_amplitude: Complex64,
}

pub const DEFAULT_RECORDED_SAMPLES: usize = 2000;

impl NetworkConfig {
    pub fn is_infinite(&self) -> bool {
        self.length.is_infinite()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn role_index(&self, role: NodeRole) -> Option<usize> {
        self.nodes.iter().position(|n| n.role == role)
    }

    pub fn transverse_branch(&self) -> Option<usize> {
        self.branches
            .iter()
            .position(|b| b.label == BranchLabel::Transverse)
    }

    /// Largest drive cap over all nodes.
    pub fn gamma_max(&self) -> Option<f64> {
        self.nodes
            .iter()
            .filter_map(|n| n.drive.gamma_max())
            .fold(None, |acc, g| Some(acc.map_or(g, |a: f64| a.max(g))))
    }

    /// Whether a node takes part in the field dynamics. Undriven nodes are
    /// transparent unless scattering is enabled.
    pub fn is_active(&self, node: usize) -> bool {
        let n = &self.nodes[node];
        n.drive.is_active() || (self.scattering && n.total_emission() > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Free propagation between two neighbouring nodes along one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub from: usize,
    pub to: usize,
    pub branch: usize,
    pub length: f64,
    pub delay: f64,
    pub phase: f64,
}

/// Round trip from a node to a waveguide end and back.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySegment {
    pub node: usize,
    pub side: Side,
    pub branch: usize,
    pub delay: f64,
    pub phase: f64,
    pub reflectivity: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("at least one phonon branch is required")]
    NoBranches,
    #[error("branch {branch}: group velocity must be positive (got {value})")]
    NonPositiveVelocity { branch: String, value: f64 },
    #[error("branch {branch}: beta must lie in (0, 1] (got {value})")]
    BetaOutOfRange { branch: String, value: f64 },
    #[error("branch beta fractions sum to {sum}, expected 1")]
    BetaSum { sum: f64 },
    #[error("branch {branch}: reflectivity must lie in [0, 1] (got {value})")]
    ReflectivityOutOfRange { branch: String, value: f64 },
    #[error("waveguide length must be positive (got {0})")]
    NonPositiveLength(f64),
    #[error("node positions must be strictly increasing: {prev} at {prev_x} μm is not left of {next} at {next_x} μm")]
    NonMonotonePositions {
        prev: String,
        prev_x: f64,
        next: String,
        next_x: f64,
    },
    #[error("node {node} at {position} μm lies outside the waveguide [0, {length}] μm")]
    OutsideWaveguide {
        node: String,
        position: f64,
        length: f64,
    },
    #[error("node {node}: expected {expected} bare emission rates, got {got}")]
    EmissionArity {
        node: String,
        expected: usize,
        got: usize,
    },
    #[error("node {node}: bare emission rates must be non-negative and finite")]
    NegativeEmission { node: String },
    #[error("node {node}: driven node has no phonon coupling")]
    DrivenButUncoupled { node: String },
    #[error("node {node}: drive rate {gamma} exceeds its cap {gamma_max}")]
    DriveAboveCap {
        node: String,
        gamma: f64,
        gamma_max: f64,
    },
    #[error("node {node}: drive rates must be non-negative and finite")]
    InvalidDriveRate { node: String },
    #[error("node {node}: ramp time constant must be positive (got {t_p})")]
    NonPositiveRampTime { node: String, t_p: f64 },
    #[error("node {node}: dark-state control requires a transverse branch")]
    NoTransverseBranch { node: String },
    #[error("node {node}: dephasing time must be positive")]
    NonPositiveDephasing { node: String },
    #[error("more than one node has role {role}")]
    DuplicateRole { role: &'static str },
    #[error("time step must be positive (got {0})")]
    NonPositiveStep(f64),
    #[error("time step {dt} μs exceeds the smallest propagation delay {delay} μs")]
    StepExceedsDelay { dt: f64, delay: f64 },
    #[error("simulated time span must be positive (got {0})")]
    NonPositiveDuration(f64),
}

/// A configuration whose invariants have been checked, together with the
/// derived propagation delays and phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    config: NetworkConfig,
    segments: Vec<Segment>,
    boundaries: Vec<BoundarySegment>,
    active: Vec<usize>,
    dt: f64,
    warnings: Vec<String>,
}

impl std::ops::Deref for ValidatedConfig {
    type Target = NetworkConfig;

    fn deref(&self) -> &NetworkConfig {
        &self.config
    }
}

impl ValidatedConfig {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn into_config(self) -> NetworkConfig {
        self.config
    }

    /// Segments between consecutive nodes of the full node list.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Boundary round trips of the outermost nodes (finite guides only).
    pub fn boundaries(&self) -> &[BoundarySegment] {
        &self.boundaries
    }

    /// Indices of the nodes that take part in the field dynamics.
    pub fn active_nodes(&self) -> &[usize] {
        &self.active
    }

    /// Resolved integration step in μs.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn steps(&self) -> usize {
        (self.config.t_max / self.dt).round().max(1.0) as usize
    }

    pub fn segment(&self, from: usize, branch: usize) -> Option<&Segment> {
        self.segments
            .iter()
            .find(|s| s.from == from && s.branch == branch)
    }

    /// Smallest propagation delay of any route the dynamics actually uses.
    pub fn min_active_delay(&self) -> f64 {
        active_delays(&self.config, &self.active)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Delays of the routes between consecutive active nodes and of the
/// boundary round trips of the outermost active nodes.
fn active_delays(config: &NetworkConfig, active: &[usize]) -> Vec<f64> {
    let mut out = Vec::new();
    for b in &config.branches {
        for w in active.windows(2) {
            let dx = config.nodes[w[1]].position - config.nodes[w[0]].position;
            out.push(dx / b.group_velocity);
        }
        if !config.is_infinite() {
            if let (Some(&first), Some(&last)) = (active.first(), active.last()) {
                out.push(2.0 * config.nodes[first].position / b.group_velocity);
                out.push(2.0 * (config.length - config.nodes[last].position) / b.group_velocity);
            }
        }
    }
    out
}

/// Default integration step: `min(τ_min/20, 1/(200 γ_max))`.
pub fn default_step(min_delay: f64, gamma_max: Option<f64>, t_max: f64) -> f64 {
    let by_delay = min_delay / 20.0;
    let by_rate = gamma_max.map_or(f64::INFINITY, |g| 1.0 / (200.0 * g));
    let dt = by_delay.min(by_rate);
    if dt.is_finite() {
        dt.min(t_max)
    } else {
        t_max / 1000.0
    }
}

fn check_drive(node: &NodeSpec, config: &NetworkConfig) -> Result<(), ModelError> {
    let name = || node.name.clone();
    let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
    match &node.drive {
        DriveProgram::Off => {}
        DriveProgram::Constant {
            gamma, gamma_max, ..
        } => {
            if !finite_nonneg(*gamma) || !finite_nonneg(*gamma_max) {
                return Err(ModelError::InvalidDriveRate { node: name() });
            }
            if gamma > gamma_max {
                return Err(ModelError::DriveAboveCap {
                    node: name(),
                    gamma: *gamma,
                    gamma_max: *gamma_max,
                });
            }
        }
        DriveProgram::ExponentialRamp {
            gamma,
            t_p,
            gamma_max,
            ..
        } => {
            if !finite_nonneg(*gamma) || !finite_nonneg(*gamma_max) {
                return Err(ModelError::InvalidDriveRate { node: name() });
            }
            if gamma > gamma_max {
                return Err(ModelError::DriveAboveCap {
                    node: name(),
                    gamma: *gamma,
                    gamma_max: *gamma_max,
                });
            }
            if !(*t_p > 0.0) || !t_p.is_finite() {
                return Err(ModelError::NonPositiveRampTime {
                    node: name(),
                    t_p: *t_p,
                });
            }
        }
        DriveProgram::DarkState { gamma_max } => {
            if !finite_nonneg(*gamma_max) {
                return Err(ModelError::InvalidDriveRate { node: name() });
            }
            if config.transverse_branch().is_none() {
                return Err(ModelError::NoTransverseBranch { node: name() });
            }
        }
    }
    Ok(())
}

/// Checks every invariant of `config` and derives the propagation geometry.
pub fn validate(config: &NetworkConfig) -> Result<ValidatedConfig, ModelError> {
    let mut warnings = Vec::new();

    if config.branches.is_empty() {
        return Err(ModelError::NoBranches);
    }
    for b in &config.branches {
        let branch = || b.label.to_string();
        if !(b.group_velocity > 0.0) || !b.group_velocity.is_finite() {
            return Err(ModelError::NonPositiveVelocity {
                branch: branch(),
                value: b.group_velocity,
            });
        }
        if !(b.beta > 0.0 && b.beta <= 1.0) {
            return Err(ModelError::BetaOutOfRange {
                branch: branch(),
                value: b.beta,
            });
        }
        if !(0.0..=1.0).contains(&b.reflectivity) {
            return Err(ModelError::ReflectivityOutOfRange {
                branch: branch(),
                value: b.reflectivity,
            });
        }
    }
    let beta_sum: f64 = config.branches.iter().map(|b| b.beta).sum();
    if (beta_sum - 1.0).abs() > BETA_SUM_TOLERANCE {
        return Err(ModelError::BetaSum { sum: beta_sum });
    }
    if !(config.length > 0.0) {
        return Err(ModelError::NonPositiveLength(config.length));
    }
    if !(config.t_max > 0.0) || !config.t_max.is_finite() {
        return Err(ModelError::NonPositiveDuration(config.t_max));
    }

    let mut seen_emitter = false;
    let mut seen_receiver = false;
    for (i, node) in config.nodes.iter().enumerate() {
        if !node.position.is_finite()
            || (!config.is_infinite() && (node.position < 0.0 || node.position > config.length))
        {
            return Err(ModelError::OutsideWaveguide {
                node: node.name.clone(),
                position: node.position,
                length: config.length,
            });
        }
        if i > 0 {
            let prev = &config.nodes[i - 1];
            if !(node.position > prev.position) {
                return Err(ModelError::NonMonotonePositions {
                    prev: prev.name.clone(),
                    prev_x: prev.position,
                    next: node.name.clone(),
                    next_x: node.position,
                });
            }
        }
        if node.bare_emission.len() != config.branches.len() {
            return Err(ModelError::EmissionArity {
                node: node.name.clone(),
                expected: config.branches.len(),
                got: node.bare_emission.len(),
            });
        }
        if node
            .bare_emission
            .iter()
            .any(|g| !g.is_finite() || *g < 0.0)
        {
            return Err(ModelError::NegativeEmission {
                node: node.name.clone(),
            });
        }
        check_drive(node, config)?;
        if node.drive.is_active() && node.total_emission() <= 0.0 {
            return Err(ModelError::DrivenButUncoupled {
                node: node.name.clone(),
            });
        }
        if let Some(t2) = node.dephasing_time {
            if !(t2 > 0.0) {
                return Err(ModelError::NonPositiveDephasing {
                    node: node.name.clone(),
                });
            }
        }
        match node.role {
            NodeRole::Emitter if seen_emitter => {
                return Err(ModelError::DuplicateRole { role: "emitter" })
            }
            NodeRole::Receiver if seen_receiver => {
                return Err(ModelError::DuplicateRole { role: "receiver" })
            }
            NodeRole::Emitter => seen_emitter = true,
            NodeRole::Receiver => seen_receiver = true,
            _ => {}
        }
        if node.drive.is_active()
            && node.detuning.abs() < FAR_DETUNED_FACTOR * node.total_emission()
        {
            let msg = format!(
                "node {}: detuning {:.4} MHz is below {}x its emission rate {:.4} MHz; \
                 the effective rate model degrades outside the far-detuned regime",
                node.name,
                crate::units::to_mhz(node.detuning),
                FAR_DETUNED_FACTOR,
                crate::units::to_mhz(node.total_emission())
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let mut segments = Vec::new();
    for (branch, b) in config.branches.iter().enumerate() {
        for (i, w) in config.nodes.windows(2).enumerate() {
            let dx = w[1].position - w[0].position;
            segments.push(Segment {
                from: i,
                to: i + 1,
                branch,
                length: dx,
                delay: dx / b.group_velocity,
                phase: b.wavevector * dx,
            });
        }
    }

    let mut boundaries = Vec::new();
    if !config.is_infinite() && !config.nodes.is_empty() {
        let last = config.nodes.len() - 1;
        for (branch, b) in config.branches.iter().enumerate() {
            let left = config.nodes[0].position;
            let right = config.length - config.nodes[last].position;
            boundaries.push(BoundarySegment {
                node: 0,
                side: Side::Left,
                branch,
                delay: 2.0 * left / b.group_velocity,
                phase: 2.0 * b.wavevector * left,
                reflectivity: b.reflectivity,
            });
            boundaries.push(BoundarySegment {
                node: last,
                side: Side::Right,
                branch,
                delay: 2.0 * right / b.group_velocity,
                phase: 2.0 * b.wavevector * right,
                reflectivity: b.reflectivity,
            });
        }
    }

    let active: Vec<usize> = (0..config.nodes.len())
        .filter(|&i| config.is_active(i))
        .collect();
    let min_delay = active_delays(config, &active)
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    let dt = match config.dt {
        Some(dt) => {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(ModelError::NonPositiveStep(dt));
            }
            if dt > min_delay {
                return Err(ModelError::StepExceedsDelay {
                    dt,
                    delay: min_delay,
                });
            }
            dt
        }
        None => {
            let dt = default_step(min_delay, config.gamma_max(), config.t_max);
            if !(dt > 0.0) {
                // zero distance to a reflecting wall
                return Err(ModelError::StepExceedsDelay {
                    dt,
                    delay: min_delay,
                });
            }
            dt
        }
    };

    Ok(ValidatedConfig {
        config: config.clone(),
        segments,
        boundaries,
        active,
        dt,
        warnings,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::units::mhz;

    pub(crate) fn branches() -> Vec<BranchSpec> {
        vec![
            BranchSpec {
                label: BranchLabel::Transverse,
                group_velocity: 7300.0,
                wavevector: 31.7,
                beta: 0.5,
                reflectivity: 1.0,
            },
            BranchSpec {
                label: BranchLabel::Longitudinal,
                group_velocity: 17100.0,
                wavevector: 16.6,
                beta: 0.5,
                reflectivity: 1.0,
            },
        ]
    }

    pub(crate) fn node(name: &str, x: f64, drive: DriveProgram, role: NodeRole) -> NodeSpec {
        NodeSpec {
            name: name.into(),
            position: x,
            detuning: mhz(100.0),
            bare_emission: vec![mhz(1.0), mhz(1.0)],
            drive,
            role,
            dephasing_time: None,
        }
    }

    pub(crate) fn two_node(length: f64, xe: f64, xr: f64) -> NetworkConfig {
        let gmax = mhz(0.25);
        NetworkConfig {
            length,
            carrier: crate::units::ghz(46.0),
            branches: branches(),
            nodes: vec![
                node(
                    "e",
                    xe,
                    DriveProgram::Constant {
                        gamma: gmax,
                        phase: 0.0,
                        gamma_max: gmax,
                    },
                    NodeRole::Emitter,
                ),
                node(
                    "r",
                    xr,
                    DriveProgram::Constant {
                        gamma: gmax,
                        phase: 0.0,
                        gamma_max: gmax,
                    },
                    NodeRole::Receiver,
                ),
            ],
            scattering: false,
            dt: None,
            t_max: 1.0,
            record_every: None,
            initial_amplitude: Complex64::new(1.0, 0.0),
        }
    }

    #[test]
    fn segment_delay_hand_value() {
        let v = validate(&two_node(200.0, 50.0, 150.0)).unwrap();
        let seg = v.segment(0, 0).unwrap();
        // 100 μm at 7300 m/s
        assert!((seg.delay * 1e3 - 13.698_630_136_986_3).abs() < 1e-9);
        assert!((seg.phase - 31.7 * 100.0).abs() < 1e-9);
    }

    #[test]
    fn delay_phase_ratio_is_k_times_v() {
        let v = validate(&two_node(150.0, 3.0, 110.0)).unwrap();
        for s in v.segments() {
            let b = &v.branches[s.branch];
            let ratio = s.phase / s.delay;
            assert!((ratio - b.wavevector * b.group_velocity).abs() < 1e-9 * ratio.abs());
        }
        for s in v.boundaries() {
            let b = &v.branches[s.branch];
            assert!((s.phase / s.delay - b.wavevector * b.group_velocity).abs() < 1e-6);
        }
    }

    #[test]
    fn single_idle_node_has_no_segments() {
        let mut c = two_node(100.0, 10.0, 20.0);
        c.nodes.truncate(1);
        c.nodes[0].drive = DriveProgram::Off;
        let v = validate(&c).unwrap();
        assert!(v.segments().is_empty());
        assert!(v.active_nodes().is_empty());
    }

    #[test]
    fn rejects_negative_position() {
        let c = two_node(100.0, -1.0, 20.0);
        assert!(matches!(
            validate(&c),
            Err(ModelError::OutsideWaveguide { .. })
        ));
    }

    #[test]
    fn rejects_non_monotone_positions() {
        let c = two_node(100.0, 30.0, 20.0);
        assert!(matches!(
            validate(&c),
            Err(ModelError::NonMonotonePositions { .. })
        ));
    }

    #[test]
    fn rejects_bad_beta_sum() {
        let mut c = two_node(100.0, 10.0, 20.0);
        c.branches[0].beta = 0.6;
        assert!(matches!(validate(&c), Err(ModelError::BetaSum { .. })));
    }

    #[test]
    fn rejects_large_step() {
        let mut c = two_node(100.0, 10.0, 20.0);
        c.dt = Some(1.0);
        assert!(matches!(
            validate(&c),
            Err(ModelError::StepExceedsDelay { .. })
        ));
    }

    #[test]
    fn warns_outside_far_detuned_regime() {
        let mut c = two_node(100.0, 10.0, 20.0);
        c.nodes[0].detuning = mhz(3.0);
        let v = validate(&c).unwrap();
        assert_eq!(v.warnings().len(), 1);
    }

    #[test]
    fn validation_is_idempotent() {
        let c = two_node(100.0, 10.0, 20.0);
        let once = validate(&c).unwrap();
        let twice = validate(once.config()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn default_step_respects_both_limits() {
        let v = validate(&two_node(100.0, 10.0, 90.0)).unwrap();
        let tau = v.min_active_delay();
        assert!(v.dt() <= tau / 20.0 + 1e-15);
        assert!(v.dt() <= 1.0 / (200.0 * mhz(0.25)));
    }
}
