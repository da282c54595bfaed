use num_complex::Complex64;

use crate::model::Side;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// RK4 stage offsets in units of the step.
pub const STAGE_OFFSETS: [f64; 3] = [0.0, 0.5, 1.0];

/// Splits a fractional sample position `h − D` into a base index offset and an
/// interpolation weight, snapping weights within 1e-12 of a grid point.
fn tap(position: f64) -> (i64, f64) {
    let base = position.floor();
    let w = position - base;
    if w < 1e-12 {
        (base as i64, 0.0)
    } else if w > 1.0 - 1e-12 {
        (base as i64 + 1, 0.0)
    } else {
        (base as i64, w)
    }
}

/// Where the field carried by a line ends up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Destination {
    /// Input of the neighbouring active node.
    Node(usize),
    /// Reflected back into the source node by a waveguide end.
    Boundary { reflectivity: f64 },
    /// Leaves an unbounded waveguide.
    Sink,
}

/// Ring buffer of the outgoing field of one node, branch and direction,
/// sampled on the integration grid and read back with a fixed retardation.
#[derive(Debug, Clone)]
pub struct DelayLine {
    pub branch: usize,
    /// Propagation direction of the stored field.
    pub direction: Side,
    pub source: usize,
    pub destination: Destination,
    /// Retardation in steps.
    pub delay_steps: f64,
    /// Propagation phase.
    pub phase: f64,
    /// Complex factor applied on delivery (phase and mirror amplitude).
    pub factor: Complex64,
    taps: [(i64, f64); 3],
    samples: Vec<Complex64>,
    pushed: usize,
}

impl DelayLine {
    /// `depth_steps` is the longest look-back any reader needs.
    pub fn new(
        branch: usize,
        direction: Side,
        source: usize,
        destination: Destination,
        delay_steps: f64,
        phase: f64,
        depth_steps: f64,
    ) -> Self {
        let snapped = if (delay_steps - delay_steps.round()).abs() < 1e-9 * delay_steps.max(1.0) {
            delay_steps.round()
        } else {
            delay_steps
        };
        let factor = match destination {
            Destination::Node(_) => Complex64::from_polar(1.0, phase),
            Destination::Boundary { reflectivity } => -reflectivity.sqrt() * Complex64::from_polar(1.0, phase),
            Destination::Sink => ZERO,
        };
        let taps = STAGE_OFFSETS.map(|h| tap(h - snapped));
        let capacity = depth_steps.max(snapped).ceil() as usize + 3;
        DelayLine {
            branch,
            direction,
            source,
            destination,
            delay_steps: snapped,
            phase,
            factor,
            taps,
            samples: vec![ZERO; capacity],
            pushed: 0,
        }
    }

    pub fn push(&mut self, value: Complex64) {
        let cap = self.samples.len();
        self.samples[self.pushed % cap] = value;
        self.pushed += 1;
    }

    pub fn len(&self) -> usize {
        self.pushed
    }

    pub fn is_empty(&self) -> bool {
        self.pushed == 0
    }

    #[inline]
    fn get(&self, index: i64) -> Complex64 {
        if index < 0 {
            return ZERO;
        }
        let index = index as usize;
        let cap = self.samples.len();
        assert!(
            index < self.pushed && index + cap >= self.pushed,
            "delay buffer underrun: sample {index} requested with {} pushed, depth {cap}",
            self.pushed
        );
        self.samples[index % cap]
    }

    /// Linear interpolation between samples. Sample −1 is vacuum, so the
    /// half-weight onset sample ramps in across the first step.
    #[inline]
    fn interpolate(&self, base: i64, w: f64) -> Complex64 {
        if base < -1 {
            return ZERO;
        }
        if w == 0.0 {
            self.get(base)
        } else {
            self.get(base) * (1.0 - w) + self.get(base + 1) * w
        }
    }

    /// Raw field arriving at the destination at stage `stage` of step
    /// `step`, before the delivery factor.
    #[inline]
    pub fn raw_stage(&self, step: usize, stage: usize) -> Complex64 {
        let (base, w) = self.taps[stage];
        self.interpolate(step as i64 + base, w)
    }

    /// Delivered field (raw value times the delivery factor).
    #[inline]
    pub fn stage(&self, step: usize, stage: usize) -> Complex64 {
        self.factor * self.raw_stage(step, stage)
    }

    /// Stored field at time `(step − lag) dt` for an arbitrary lag in steps.
    pub fn raw_at(&self, step: usize, lag: f64) -> Complex64 {
        let (base, w) = tap(-lag);
        self.interpolate(step as i64 + base, w)
    }

    /// Trapezoidal `∫|Φ|² dt` over the window of fields still travelling
    /// along the line at step `step`, in units of `dt`.
    pub fn in_flight(&self, step: usize) -> f64 {
        if matches!(self.destination, Destination::Sink) || self.delay_steps <= 0.0 {
            return 0.0;
        }
        let start = (step as f64 - self.delay_steps).max(-1.0);
        let first = start.ceil() as i64;
        let mut total = 0.0;
        let mut prev = self.get(first).norm_sqr();
        if first as f64 > start {
            let edge = self.raw_at(step, step as f64 - start).norm_sqr();
            total += 0.5 * (first as f64 - start) * (edge + prev);
        }
        for k in (first + 1)..=(step as i64) {
            let cur = self.get(k).norm_sqr();
            total += 0.5 * (prev + cur);
            prev = cur;
        }
        total
    }
}
