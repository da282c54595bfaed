use std::io::{self, Write};

use num_complex::Complex64;

/// Directed fields at one node and branch. `r` is the right-moving
/// component, `l` the left-moving one.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeFields {
    pub in_r: Complex64,
    pub in_l: Complex64,
    pub out_r: Complex64,
    pub out_l: Complex64,
}

/// Excitation bookkeeping at one recorded time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormSample {
    /// `Σ_j |c_j|²`.
    pub nodes: f64,
    /// Field norm still travelling along delay lines.
    pub in_flight: f64,
    /// Norm lost at lossy ends, into unbounded ends, or to dephasing.
    pub lost: f64,
    /// Integrated net emission `∫ Σ (|Φ_out|² − |Φ_in|²) dt`.
    pub emitted: f64,
}

impl NormSample {
    pub fn total(&self) -> f64 {
        self.nodes + self.in_flight
    }
}

/// Controls synthesised by one dark-state receiver.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlTrace {
    pub node: usize,
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    /// Running maximum of `|c_r|²`, tracked at every step.
    pub f_peak: f64,
    pub t_peak: f64,
    pub f_final: f64,
    /// Largest `|Σ|c|² + emitted + dephased − N₀|` over the run.
    pub norm_residual: f64,
    /// Largest `|Σ|c|² + in flight + lost − N₀|` over the recorded samples.
    pub ledger_residual: f64,
    pub initial_norm: f64,
    /// Net norm emitted by the emitter.
    pub emitted: f64,
    /// `∫|Φ_out|² dt` of the controlled branch in the controlled direction.
    pub back_reflection: f64,
    /// The same integral for the other branches.
    pub leak: f64,
    pub clamped_steps: usize,
    pub bootstrap_steps: usize,
    pub lost: f64,
    pub t_final: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub node_names: Vec<String>,
    pub branch_labels: Vec<String>,
    pub emitter: Option<usize>,
    pub receiver: Option<usize>,
    pub dt: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    /// `amplitudes[sample][node]`.
    pub amplitudes: Vec<Vec<Complex64>>,
    /// `fields[sample][node * branches + branch]`.
    pub fields: Vec<Vec<NodeFields>>,
    pub controls: Vec<ControlTrace>,
    pub norm: Vec<NormSample>,
    pub summary: Summary,
}

impl Trajectory {
    pub fn branches(&self) -> usize {
        self.branch_labels.len()
    }

    pub fn field(&self, sample: usize, node: usize, branch: usize) -> NodeFields {
        self.fields[sample][node * self.branches() + branch]
    }

    /// `|c_r(t)|²` on the recorded grid.
    pub fn receiver_population(&self) -> Vec<f64> {
        match self.receiver {
            Some(r) => self.amplitudes.iter().map(|a| a[r].norm_sqr()).collect(),
            None => vec![0.0; self.times.len()],
        }
    }

    /// Writes the trajectory as CSV: time, complex amplitudes, output-field
    /// magnitudes per node, branch and direction, and synthesised controls.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["t_us".to_string()];
        for name in &self.node_names {
            header.push(format!("re_c_{name}"));
            header.push(format!("im_c_{name}"));
        }
        for name in &self.node_names {
            for b in &self.branch_labels {
                header.push(format!("abs_out_r_{name}_{b}"));
                header.push(format!("abs_out_l_{name}_{b}"));
            }
        }
        for c in &self.controls {
            let name = &self.node_names[c.node];
            header.push(format!("gamma_mhz_{name}"));
            header.push(format!("theta_rad_{name}"));
        }
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for (s, t) in self.times.iter().enumerate() {
            use std::fmt::Write as _;
            line.clear();
            let _ = write!(line, "{t}");
            for c in &self.amplitudes[s] {
                let _ = write!(line, ",{},{}", c.re, c.im);
            }
            for f in &self.fields[s] {
                let _ = write!(line, ",{},{}", f.out_r.norm(), f.out_l.norm());
            }
            for c in &self.controls {
                let _ = write!(
                    line,
                    ",{},{}",
                    crate::units::to_mhz(c.gamma[s]),
                    c.theta[s]
                );
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
