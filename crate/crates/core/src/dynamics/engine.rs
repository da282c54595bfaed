use num_complex::Complex64;

use super::delay::{DelayLine, Destination};
use super::trajectory::{ControlTrace, NodeFields, NormSample, Summary, Trajectory};
use super::scattering_matrix;
use crate::model::{DriveProgram, NodeRole, Side, ValidatedConfig, DEFAULT_RECORDED_SAMPLES};
use crate::protocols::dark_state_controller;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recording {
    /// Amplitudes, fields, controls and norm ledger on the recording grid.
    #[default]
    Full,
    /// Only the run summary.
    Summary,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    pub recording: Recording,
}

struct Controller {
    branch: usize,
    /// Direction of the field arriving from the emitter side after passing
    /// the receiver, i.e. the one whose output is nulled.
    target: usize,
    beta: f64,
    gamma_max: f64,
    theta: f64,
    exact: bool,
}

struct Node {
    global: usize,
    drive: DriveProgram,
    sqrt_beta: Vec<f64>,
    dephasing: f64,
    scatter: Option<Vec<Complex64>>,
    controller: Option<Controller>,
}

/// Field at a pruned node reconstructed from an active stream.
#[derive(Clone, Copy)]
struct Probe {
    line: usize,
    lag: f64,
    factor: Complex64,
}

const R: usize = 0;
const L: usize = 1;

/// Integrates the network with the default options.
pub fn simulate(config: &ValidatedConfig) -> Trajectory {
    simulate_with(config, &SimOptions::default())
}

pub fn simulate_with(config: &ValidatedConfig, options: &SimOptions) -> Trajectory {
    Engine::new(config, options).run()
}

struct Engine<'a> {
    cfg: &'a ValidatedConfig,
    options: SimOptions,
    dt: f64,
    steps: usize,
    nb: usize,
    nodes: Vec<Node>,
    lines: Vec<DelayLine>,
    /// Line feeding each input slot `(j·B + n)·2 + d`.
    feeds: Vec<Option<usize>>,
    /// `probes[global · B + n] = [right-moving, left-moving]` for pruned nodes.
    probes: Vec<[Option<Probe>; 2]>,
    c: Vec<Complex64>,
    initial: Vec<Complex64>,
    receiver: Option<usize>,
    emitter: Option<usize>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ValidatedConfig, options: &SimOptions) -> Self {
        let dt = cfg.dt();
        let steps = cfg.steps();
        let nb = cfg.branches.len();
        let active = cfg.active_nodes().to_vec();
        let m = active.len();
        let emitter = cfg.role_index(NodeRole::Emitter);
        let receiver = cfg.role_index(NodeRole::Receiver);

        let mut initial = vec![ZERO; cfg.nodes.len()];
        if let Some(e) = emitter {
            initial[e] = cfg.initial_amplitude;
        }

        let nodes: Vec<Node> = active
            .iter()
            .map(|&g| {
                let spec = &cfg.nodes[g];
                let weights = spec.branch_weights();
                let controller = match spec.drive {
                    DriveProgram::DarkState { gamma_max } => {
                        let branch = cfg.transverse_branch().expect("validated");
                        let emitter_left = emitter.map_or(true, |e| cfg.nodes[e].position < spec.position);
                        Some(Controller {
                            branch,
                            target: if emitter_left { L } else { R },
                            beta: weights[branch],
                            gamma_max,
                            theta: 0.0,
                            exact: false,
                        })
                    }
                    _ => None,
                };
                Node {
                    global: g,
                    drive: spec.drive.clone(),
                    sqrt_beta: weights.iter().map(|b| b.sqrt()).collect(),
                    dephasing: spec.dephasing_time.map_or(0.0, |t2| 1.0 / t2),
                    scatter: (cfg.scattering && spec.total_emission() > 0.0)
                        .then(|| scattering_matrix(spec.detuning, &spec.bare_emission)),
                    controller,
                }
            })
            .collect();

        // pruned-node probes, needed before the line depths are known
        let pos = |j: usize| cfg.nodes[active[j]].position;
        let line_index = |j: usize, n: usize, d: usize| (j * nb + n) * 2 + d;
        let mut probes = vec![[None, None]; cfg.nodes.len() * nb];
        for (g, spec) in cfg.nodes.iter().enumerate() {
            if active.contains(&g) {
                continue;
            }
            let x = spec.position;
            let left = (0..m).rev().find(|&j| pos(j) < x);
            let right = (0..m).find(|&j| pos(j) > x);
            for (n, b) in cfg.branches.iter().enumerate() {
                let k = b.wavevector;
                let v = b.group_velocity;
                let mirror = -b.reflectivity.sqrt();
                let make = |line, dist: f64, amp: f64| Probe {
                    line,
                    lag: dist / v / dt,
                    factor: amp * Complex64::from_polar(1.0, k * dist),
                };
                let right_moving = match (left, right) {
                    (Some(a), _) => Some(make(line_index(a, n, R), x - pos(a), 1.0)),
                    (None, Some(bn)) if !cfg.is_infinite() => {
                        Some(make(line_index(bn, n, L), pos(bn) + x, mirror))
                    }
                    _ => None,
                };
                let left_moving = match (right, left) {
                    (Some(bn), _) => Some(make(line_index(bn, n, L), pos(bn) - x, 1.0)),
                    (None, Some(a)) if !cfg.is_infinite() => Some(make(
                        line_index(a, n, R),
                        2.0 * cfg.length - x - pos(a),
                        mirror,
                    )),
                    _ => None,
                };
                probes[g * nb + n] = [right_moving, left_moving];
            }
        }
        let mut probe_depth = vec![0.0f64; m * nb * 2];
        for p in probes.iter().flatten().flatten() {
            probe_depth[p.line] = probe_depth[p.line].max(p.lag);
        }

        let mut lines = Vec::with_capacity(m * nb * 2);
        for j in 0..m {
            for (n, b) in cfg.branches.iter().enumerate() {
                let v = b.group_velocity;
                let k = b.wavevector;
                // right-moving output
                let (dest, dist) = if j + 1 < m {
                    (Destination::Node(j + 1), pos(j + 1) - pos(j))
                } else if cfg.is_infinite() {
                    (Destination::Sink, 0.0)
                } else {
                    (
                        Destination::Boundary {
                            reflectivity: b.reflectivity,
                        },
                        2.0 * (cfg.length - pos(j)),
                    )
                };
                let idx = line_index(j, n, R);
                lines.push(DelayLine::new(
                    n,
                    Side::Right,
                    j,
                    dest,
                    dist / v / dt,
                    k * dist,
                    probe_depth[idx],
                ));
                // left-moving output
                let (dest, dist) = if j > 0 {
                    (Destination::Node(j - 1), pos(j) - pos(j - 1))
                } else if cfg.is_infinite() {
                    (Destination::Sink, 0.0)
                } else {
                    (
                        Destination::Boundary {
                            reflectivity: b.reflectivity,
                        },
                        2.0 * pos(j),
                    )
                };
                let idx = line_index(j, n, L);
                lines.push(DelayLine::new(
                    n,
                    Side::Left,
                    j,
                    dest,
                    dist / v / dt,
                    k * dist,
                    probe_depth[idx],
                ));
            }
        }

        let mut feeds = vec![None; m * nb * 2];
        for j in 0..m {
            for n in 0..nb {
                feeds[line_index(j, n, R)] = if j > 0 {
                    Some(line_index(j - 1, n, R))
                } else if cfg.is_infinite() {
                    None
                } else {
                    Some(line_index(0, n, L))
                };
                feeds[line_index(j, n, L)] = if j + 1 < m {
                    Some(line_index(j + 1, n, L))
                } else if cfg.is_infinite() {
                    None
                } else {
                    Some(line_index(m - 1, n, R))
                };
            }
        }

        let c = active.iter().map(|&g| initial[g]).collect();
        Engine {
            cfg,
            options: *options,
            dt,
            steps,
            nb,
            nodes,
            lines,
            feeds,
            probes,
            c,
            initial,
            receiver,
            emitter,
        }
    }

    fn gather(&self, step: usize, stage: usize, out: &mut [Complex64]) {
        for (slot, feed) in out.iter_mut().zip(&self.feeds) {
            *slot = match feed {
                Some(l) => self.lines[*l].stage(step, stage),
                None => ZERO,
            };
        }
    }

    /// Open-loop rate of node `j` at time `t`, or the held controller rate.
    fn rate(&self, j: usize, t: f64, held: f64) -> f64 {
        self.nodes[j].drive.rate_at(t).unwrap_or(held)
    }

    fn derivative(
        &self,
        c: &[Complex64],
        gamma: &[f64],
        rot: &[Complex64],
        inputs: &[Complex64],
        dc: &mut [Complex64],
    ) {
        let nb = self.nb;
        for (j, node) in self.nodes.iter().enumerate() {
            let half = (gamma[j] / 2.0).sqrt();
            let mut drive = ZERO;
            for n in 0..nb {
                let s = (j * nb + n) * 2;
                drive += node.sqrt_beta[n] * (inputs[s] + inputs[s + 1]);
            }
            dc[j] = -0.5 * (gamma[j] + node.dephasing) * c[j] - half * rot[j].conj() * drive;
        }
    }

    fn pruned_amplitude(&self, g: usize, t: f64) -> Complex64 {
        let c0 = self.initial[g];
        match self.cfg.nodes[g].dephasing_time {
            Some(t2) => c0 * (-t / (2.0 * t2)).exp(),
            None => c0,
        }
    }

    fn run(mut self) -> Trajectory {
        let cfg = self.cfg;
        let dt = self.dt;
        let nb = self.nb;
        let m = self.nodes.len();
        let slots = m * nb * 2;
        let full = self.options.recording == Recording::Full;
        let stride = cfg
            .record_every
            .unwrap_or_else(|| (self.steps / DEFAULT_RECORDED_SAMPLES).max(1))
            .max(1);

        let local_of = |g: Option<usize>| g.and_then(|g| self.nodes.iter().position(|n| n.global == g));
        let recv_local = local_of(self.receiver);
        let emit_local = local_of(self.emitter);
        let controller_nodes: Vec<usize> = (0..m).filter(|&j| self.nodes[j].controller.is_some()).collect();

        let mut traj = Trajectory {
            node_names: cfg.nodes.iter().map(|n| n.name.clone()).collect(),
            branch_labels: cfg.branches.iter().map(|b| b.label.to_string()).collect(),
            emitter: self.emitter,
            receiver: self.receiver,
            dt,
            steps: self.steps,
            controls: controller_nodes
                .iter()
                .map(|&j| ControlTrace {
                    node: self.nodes[j].global,
                    ..Default::default()
                })
                .collect(),
            ..Default::default()
        };

        let initial_norm: f64 = self.initial.iter().map(|c| c.norm_sqr()).sum();
        let pruned: Vec<usize> = (0..cfg.nodes.len())
            .filter(|g| !cfg.active_nodes().contains(g))
            .collect();
        let pruned_dephasing: Vec<(usize, f64)> = pruned
            .iter()
            .filter_map(|&g| cfg.nodes[g].dephasing_time.map(|t2| (g, 1.0 / t2)))
            .collect();

        let mut in0 = vec![ZERO; slots];
        let mut in_half = vec![ZERO; slots];
        let mut in1 = vec![ZERO; slots];
        let mut out = vec![ZERO; slots];
        let mut emission = vec![ZERO; m * nb];
        let mut gamma = vec![0.0; m];
        let mut rot = vec![Complex64::new(1.0, 0.0); m];
        let mut g_stage = vec![0.0; m];
        let mut y = vec![ZERO; m];
        let mut k = [vec![ZERO; m], vec![ZERO; m], vec![ZERO; m], vec![ZERO; m]];

        let mut summary = Summary {
            initial_norm,
            ..Default::default()
        };
        let mut prev_flux: Option<[f64; 6]> = None;
        let (mut emitted, mut lost, mut dephased, mut emitter_net, mut back, mut leak) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);

        for i in 0..=self.steps {
            let t = i as f64 * dt;
            if i == 0 {
                self.gather(0, 0, &mut in0);
            } else {
                std::mem::swap(&mut in0, &mut in1);
            }

            // controls, held over the step
            for j in 0..m {
                let node = &mut self.nodes[j];
                if let Some(ctl) = node.controller.as_mut() {
                    let phi = in0[(j * nb + ctl.branch) * 2 + ctl.target];
                    let out_ctl = dark_state_controller(phi, self.c[j], ctl.beta, ctl.gamma_max, ctl.theta);
                    ctl.theta = out_ctl.theta;
                    ctl.exact = out_ctl.is_exact();
                    if out_ctl.clamped {
                        summary.clamped_steps += 1;
                    }
                    if out_ctl.bootstrap {
                        summary.bootstrap_steps += 1;
                    }
                    gamma[j] = out_ctl.gamma;
                    rot[j] = Complex64::from_polar(1.0, out_ctl.theta);
                } else {
                    gamma[j] = node.drive.rate_at(t).unwrap_or(0.0);
                    rot[j] = Complex64::from_polar(1.0, node.drive.phase());
                }
            }

            // emission and outputs at t_i
            for j in 0..m {
                let node = &self.nodes[j];
                let amp = (gamma[j] / 2.0).sqrt() * self.c[j] * rot[j];
                for n in 0..nb {
                    emission[j * nb + n] = node.sqrt_beta[n] * amp;
                }
                if let Some(ctl) = &node.controller {
                    if ctl.exact {
                        emission[j * nb + ctl.branch] = -in0[(j * nb + ctl.branch) * 2 + ctl.target];
                    }
                }
                for n in 0..nb {
                    let s = (j * nb + n) * 2;
                    let a = emission[j * nb + n];
                    out[s] = in0[s] + a;
                    out[s + 1] = in0[s + 1] + a;
                }
                if let Some(sm) = &node.scatter {
                    for n in 0..nb {
                        let mut acc = ZERO;
                        for q in 0..nb {
                            let s = (j * nb + q) * 2;
                            acc += sm[n * nb + q] * (in0[s] + in0[s + 1]);
                        }
                        let s = (j * nb + n) * 2;
                        out[s] += acc;
                        out[s + 1] += acc;
                    }
                }
            }
            // fields switch on at t = 0; the history stores the mean of the
            // vacuum before and the value after, centring the jump on the grid
            let weight = if i == 0 { 0.5 } else { 1.0 };
            for (line, value) in self.lines.iter_mut().zip(&out) {
                line.push(weight * *value);
            }

            // flux bookkeeping
            let mut net = 0.0;
            let mut net_emitter = 0.0;
            for j in 0..m {
                let mut local = 0.0;
                for s in (j * nb * 2)..((j + 1) * nb * 2) {
                    local += out[s].norm_sqr() - in0[s].norm_sqr();
                }
                net += local;
                if Some(j) == emit_local {
                    net_emitter = local;
                }
            }
            let mut loss = 0.0;
            for line in &self.lines {
                match line.destination {
                    Destination::Boundary { reflectivity } if reflectivity < 1.0 => {
                        loss += (1.0 - reflectivity) * line.raw_stage(i, 0).norm_sqr();
                    }
                    Destination::Sink => {
                        let s = (line.source * nb + line.branch) * 2
                            + if line.direction == Side::Right { R } else { L };
                        loss += out[s].norm_sqr();
                    }
                    _ => {}
                }
            }
            let mut node_norm = 0.0;
            let mut deph = 0.0;
            for (j, node) in self.nodes.iter().enumerate() {
                let p = self.c[j].norm_sqr();
                node_norm += p;
                deph += p * node.dephasing;
            }
            for &g in &pruned {
                node_norm += self.pruned_amplitude(g, t).norm_sqr();
            }
            for &(g, rate) in &pruned_dephasing {
                deph += self.pruned_amplitude(g, t).norm_sqr() * rate;
            }
            let (mut target_flux, mut leak_flux) = (0.0, 0.0);
            if let Some(j) = recv_local {
                if let Some(ctl) = &self.nodes[j].controller {
                    for n in 0..nb {
                        let f = out[(j * nb + n) * 2 + ctl.target].norm_sqr();
                        if n == ctl.branch {
                            target_flux = f;
                        } else {
                            leak_flux += f;
                        }
                    }
                }
            }
            let flux = [net, loss, deph, net_emitter, target_flux, leak_flux];
            if let Some(p) = prev_flux {
                let h = 0.5 * dt;
                emitted += h * (p[0] + flux[0]);
                lost += h * (p[1] + flux[1]);
                dephased += h * (p[2] + flux[2]);
                emitter_net += h * (p[3] + flux[3]);
                back += h * (p[4] + flux[4]);
                leak += h * (p[5] + flux[5]);
            }
            prev_flux = Some(flux);
            summary.norm_residual = summary
                .norm_residual
                .max((node_norm + emitted + dephased - initial_norm).abs());

            // fidelity tracking
            let f = match (recv_local, self.receiver) {
                (Some(j), _) => self.c[j].norm_sqr(),
                (None, Some(g)) => self.pruned_amplitude(g, t).norm_sqr(),
                _ => 0.0,
            };
            if f > summary.f_peak {
                summary.f_peak = f;
                summary.t_peak = t;
            }
            summary.f_final = f;

            if i % stride == 0 || i == self.steps {
                let in_flight: f64 = self.lines.iter().map(|l| l.in_flight(i)).sum::<f64>() * dt;
                let sample = NormSample {
                    nodes: node_norm,
                    in_flight,
                    lost: lost + dephased,
                    emitted,
                };
                summary.ledger_residual = summary
                    .ledger_residual
                    .max((sample.nodes + sample.in_flight + sample.lost - initial_norm).abs());
                if full {
                    self.record(&mut traj, i, t, &in0, &out, &gamma, &controller_nodes, sample);
                }
            }

            if i == self.steps {
                break;
            }

            // RK4 advance
            self.gather(i, 1, &mut in_half);
            self.gather(i, 2, &mut in1);
            let c0 = self.c.clone();
            for (s, (h, inputs)) in [(0.0, &in0), (0.5, &in_half), (0.5, &in_half), (1.0, &in1)]
                .into_iter()
                .enumerate()
            {
                for j in 0..m {
                    g_stage[j] = self.rate(j, t + h * dt, gamma[j]);
                    y[j] = match s {
                        0 => c0[j],
                        1 | 2 => c0[j] + 0.5 * dt * k[s - 1][j],
                        _ => c0[j] + dt * k[2][j],
                    };
                }
                self.derivative(&y, &g_stage, &rot, inputs, &mut k[s]);
            }
            for j in 0..m {
                self.c[j] = c0[j] + dt / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
            }
        }

        summary.emitted = emitter_net;
        summary.back_reflection = back;
        summary.leak = leak;
        summary.lost = lost + dephased;
        summary.t_final = self.steps as f64 * dt;
        traj.summary = summary;
        traj
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        traj: &mut Trajectory,
        step: usize,
        t: f64,
        inputs: &[Complex64],
        outputs: &[Complex64],
        gamma: &[f64],
        controller_nodes: &[usize],
        norm: NormSample,
    ) {
        let cfg = self.cfg;
        let nb = self.nb;
        let mut amps: Vec<Complex64> = (0..cfg.nodes.len()).map(|g| self.pruned_amplitude(g, t)).collect();
        let mut fields = vec![NodeFields::default(); cfg.nodes.len() * nb];
        for (j, node) in self.nodes.iter().enumerate() {
            amps[node.global] = self.c[j];
            for n in 0..nb {
                let s = (j * nb + n) * 2;
                fields[node.global * nb + n] = NodeFields {
                    in_r: inputs[s + R],
                    in_l: inputs[s + L],
                    out_r: outputs[s + R],
                    out_l: outputs[s + L],
                };
            }
        }
        for g in 0..cfg.nodes.len() {
            for n in 0..nb {
                let [rp, lp] = self.probes[g * nb + n];
                if rp.is_none() && lp.is_none() {
                    continue;
                }
                let probe = |p: Option<Probe>| match p {
                    Some(p) => p.factor * self.lines[p.line].raw_at(step, p.lag),
                    None => ZERO,
                };
                let (r, l) = (probe(rp), probe(lp));
                fields[g * nb + n] = NodeFields {
                    in_r: r,
                    in_l: l,
                    out_r: r,
                    out_l: l,
                };
            }
        }
        traj.times.push(t);
        traj.amplitudes.push(amps);
        traj.fields.push(fields);
        traj.norm.push(norm);
        for (trace, &j) in traj.controls.iter_mut().zip(controller_nodes) {
            trace.gamma.push(gamma[j]);
            let theta = self.nodes[j].controller.as_ref().map_or(0.0, |c| c.theta);
            trace.theta.push(theta);
        }
    }
}
