//! Named key-value interface to the rate calculators, as used by the
//! `rates` subcommand: `raman --omega-mhz 70 --delta-mhz 100 --gamma-mhz 2`.
//!
//! A key may carry a unit suffix (`-mhz`, `-ghz`, `-um`, `-nm`, `-deg`, ...)
//! which fixes both its dimension and its scale. Frequencies are ordinary
//! frequencies and are converted to rad/μs; lengths go to μm.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use indexmap::IndexMap;
use thiserror::Error;

use super::*;
use crate::units::ghz;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Frequency,
    Length,
    Area,
    Time,
    Angle,
    Plain,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Frequency => "frequency",
            Dim::Length => "length",
            Dim::Area => "area",
            Dim::Time => "time",
            Dim::Angle => "angle",
            Dim::Plain => "plain number",
        }
    }
}

/// Unit suffix → dimension and factor into internal units.
fn unit_suffix(s: &str) -> Option<(Dim, f64)> {
    Some(match s {
        "hz" => (Dim::Frequency, TAU * 1e-6),
        "khz" => (Dim::Frequency, TAU * 1e-3),
        "mhz" => (Dim::Frequency, TAU),
        "ghz" => (Dim::Frequency, TAU * 1e3),
        "thz" => (Dim::Frequency, TAU * 1e6),
        "phz" => (Dim::Frequency, TAU * 1e9),
        "nm" => (Dim::Length, 1e-3),
        "um" => (Dim::Length, 1.0),
        "mm" => (Dim::Length, 1e3),
        "nm2" => (Dim::Area, 1e-6),
        "um2" => (Dim::Area, 1.0),
        "ns" => (Dim::Time, 1e-3),
        "us" => (Dim::Time, 1.0),
        "ms" => (Dim::Time, 1e3),
        "deg" => (Dim::Angle, PI / 180.0),
        "rad" => (Dim::Angle, 1.0),
        _ => return None,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("no quantity given; expected one of: {}", Quantity::NAMES.join(", "))]
    MissingQuantity,
    #[error("unknown quantity `{0}`; expected one of: {names}", names = Quantity::NAMES.join(", "))]
    UnknownQuantity(String),
    #[error("expected a `--key` flag, found `{0}`")]
    ExpectedFlag(String),
    #[error("flag `--{0}` has no value")]
    MissingValue(String),
    #[error("cannot parse `{value}` as a number for `--{key}`")]
    BadValue { key: String, value: String },
    #[error("parameter `{0}` given twice")]
    Duplicate(String),
    #[error("parameter `{key}` must be a {expected}, got a {got}")]
    WrongDimension {
        key: String,
        expected: &'static str,
        got: &'static str,
    },
    #[error("missing required parameter `{0}`")]
    MissingKey(String),
    #[error("unknown parameter `--{0}` for this quantity")]
    UnknownKey(String),
    #[error(transparent)]
    Rate(#[from] RateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Spectrum,
    Coupling,
    Compression,
    Raman,
    Effective,
    Flip,
    Optical,
    Q,
    Cavity,
    SingleMode,
    Scaling,
}

impl Quantity {
    pub const NAMES: &'static [&'static str] = &[
        "spectrum",
        "coupling",
        "compression",
        "raman",
        "effective",
        "flip",
        "optical",
        "q",
        "cavity",
        "single-mode",
        "scaling",
    ];
}

impl FromStr for Quantity {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, QueryError> {
        Ok(match s {
            "spectrum" => Quantity::Spectrum,
            "coupling" => Quantity::Coupling,
            "compression" => Quantity::Compression,
            "raman" => Quantity::Raman,
            "effective" => Quantity::Effective,
            "flip" => Quantity::Flip,
            "optical" => Quantity::Optical,
            "q" | "reflectivity" => Quantity::Q,
            "cavity" => Quantity::Cavity,
            "single-mode" => Quantity::SingleMode,
            "scaling" => Quantity::Scaling,
            other => return Err(QueryError::UnknownQuantity(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Arg {
    dim: Dim,
    value: f64,
}

/// Parsed parameters keyed by base name (unit suffix removed).
#[derive(Debug, Clone, Default)]
pub struct RateArgs {
    values: IndexMap<String, Arg>,
    used: std::cell::RefCell<Vec<String>>,
}

impl RateArgs {
    pub fn parse<S: AsRef<str>>(flags: &[S]) -> Result<Self, QueryError> {
        let mut values = IndexMap::new();
        let mut it = flags.iter().map(AsRef::as_ref);
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .filter(|k| !k.is_empty())
                .ok_or_else(|| QueryError::ExpectedFlag(flag.to_string()))?;
            let (key, inline) = match key.split_once('=') {
                Some((k, v)) => (k, Some(v)),
                None => (key, None),
            };
            let raw = match inline {
                Some(v) => v,
                None => it
                    .next()
                    .ok_or_else(|| QueryError::MissingValue(key.to_string()))?,
            };
            let number: f64 = raw.trim().parse().map_err(|_| QueryError::BadValue {
                key: key.to_string(),
                value: raw.to_string(),
            })?;
            if !number.is_finite() {
                return Err(QueryError::BadValue {
                    key: key.to_string(),
                    value: raw.to_string(),
                });
            }
            let lower = key.to_ascii_lowercase();
            let (base, dim, factor) = match lower.rsplit_once('-') {
                Some((b, suffix)) if !b.is_empty() => match unit_suffix(suffix) {
                    Some((dim, f)) => (b.to_string(), dim, f),
                    None => (lower.clone(), Dim::Plain, 1.0),
                },
                _ => (lower.clone(), Dim::Plain, 1.0),
            };
            if values.contains_key(&base) {
                return Err(QueryError::Duplicate(base));
            }
            values.insert(
                base,
                Arg {
                    dim,
                    value: number * factor,
                },
            );
        }
        Ok(RateArgs {
            values,
            used: Default::default(),
        })
    }

    fn lookup(&self, key: &str, dim: Dim) -> Result<Option<f64>, QueryError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(arg) => {
                self.used.borrow_mut().push(key.to_string());
                // plain numbers are accepted as radians for angles
                if arg.dim == dim || (dim == Dim::Angle && arg.dim == Dim::Plain) {
                    Ok(Some(arg.value))
                } else {
                    Err(QueryError::WrongDimension {
                        key: key.to_string(),
                        expected: dim.name(),
                        got: arg.dim.name(),
                    })
                }
            }
        }
    }

    fn req(&self, key: &str, dim: Dim) -> Result<f64, QueryError> {
        self.lookup(key, dim)?
            .ok_or_else(|| QueryError::MissingKey(key.to_string()))
    }

    fn opt(&self, key: &str, dim: Dim, default: f64) -> Result<f64, QueryError> {
        Ok(self.lookup(key, dim)?.unwrap_or(default))
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn check_unused(&self) -> Result<(), QueryError> {
        let used = self.used.borrow();
        match self.values.keys().find(|k| !used.contains(k)) {
            Some(k) => Err(QueryError::UnknownKey(k.clone())),
            None => Ok(()),
        }
    }
}

/// Parses `<quantity> --key value ...` and evaluates it.
pub fn run<S: AsRef<str>>(args: &[S]) -> Result<RateBundle, QueryError> {
    let (first, rest) = args.split_first().ok_or(QueryError::MissingQuantity)?;
    let quantity: Quantity = first.as_ref().parse()?;
    let parsed = RateArgs::parse(rest)?;
    evaluate(quantity, &parsed)
}

/// SI conversions for the ħ-dependent formulas.
const PER_US_TO_PER_S: f64 = 1e6;
const UM2_TO_M2: f64 = 1e-12;

pub fn evaluate(q: Quantity, a: &RateArgs) -> Result<RateBundle, QueryError> {
    use Dim::*;
    use RateUnit::*;
    let mut b = RateBundle::default();
    match q {
        Quantity::Spectrum => {
            let s = ground_state_spectrum(
                a.req("lambda", Frequency)?,
                a.opt("upsilon-x", Frequency, 0.0)?,
                a.opt("upsilon-y", Frequency, 0.0)?,
                a.opt("omega-b", Frequency, 0.0)?,
            )?;
            for (i, e) in s.energies.iter().enumerate() {
                b.push(format!("E{}", i + 1), *e, AngularFrequency);
            }
            b.push("Delta", s.splitting, AngularFrequency);
            b.push("theta", s.theta, Phase);
            b.push("phi", s.phi, Phase);
        }
        Quantity::Coupling | Quantity::Compression => {
            let d = a.req("d", Frequency)? * PER_US_TO_PER_S;
            let rho = a.opt("rho", Plain, 3500.0)?;
            let area = if a.has("area") {
                a.req("area", Area)?
            } else {
                triangular_area(
                    a.req("width", Length)?,
                    a.opt("angle", Angle, 35f64.to_radians())?,
                )
            } * UM2_TO_M2;
            let omega = a.req("f", Frequency)? * PER_US_TO_PER_S;
            let v = a.req("v", Plain)?;
            if q == Quantity::Coupling {
                let xi = a.opt("xi", Plain, 1.0)?;
                let g = coupling_strength(d, rho, area, omega, omega / v, xi)?;
                b.push("g", g, CouplingSi);
                b.push(
                    "Gamma",
                    emission_rate_from_coupling(g, v) / PER_US_TO_PER_S,
                    AngularFrequency,
                );
            } else {
                let gamma = emission_rate_compression(d, rho, area, v, omega)?;
                b.push("Gamma", gamma / PER_US_TO_PER_S, AngularFrequency);
            }
            b.push("area_nm2", area / UM2_TO_M2 * 1e6, Dimensionless);
        }
        Quantity::Raman => {
            let gamma = a.req("gamma", Frequency)?;
            let branches = match a.lookup("beta", Plain)? {
                Some(beta) => vec![beta * gamma, gamma - beta * gamma],
                None => vec![],
            };
            let r = raman_rate(&RamanDriveParams {
                omega: a.req("omega", Frequency)?,
                delta: a.req("delta", Frequency)?,
                gamma_total: gamma,
                gamma_branches: branches,
            })?;
            b.push("gamma_total", r.gamma_total, AngularFrequency);
            if r.gamma_branches.len() > 1 {
                for (i, g) in r.gamma_branches.iter().enumerate() {
                    b.push(format!("gamma_{}", i + 1), *g, AngularFrequency);
                }
            }
            b.push("stark_shift", r.stark_shift, AngularFrequency);
            b.push("theta_offset", r.theta_offset, Phase);
        }
        Quantity::Effective => {
            let g = a.req("gamma", Frequency)?;
            let phi = a.req("phi", Angle)?;
            b.push("gamma_eff", effective_emission_rate(g, phi), AngularFrequency);
        }
        Quantity::Flip => {
            let carrier = a.req("gamma-carrier", Frequency)?;
            let r = residual_flip_ratio(
                a.req("delta", Frequency)?,
                a.req("omega-b", Frequency)?,
                carrier,
                a.opt("gamma-flipped", Frequency, carrier)?,
            )?;
            b.push("ratio", r, Dimensionless);
        }
        Quantity::Optical => {
            let splitting = a.opt("splitting", Frequency, ghz(46.0))?;
            let omega_b = a.opt("omega-b", Frequency, 0.0)?;
            let omega_x = if a.has("eta-minus") {
                2.0 * a.req("eta-minus", Plain)? * (splitting - omega_b)
            } else {
                a.req("omega-x", Frequency)?
            };
            let r = optical_raman_params(&OpticalRamanParams {
                omega_u: a.req("omega-u", Frequency)?,
                omega_d: a.req("omega-d", Frequency)?,
                delta_e: a.req("delta-e", Frequency)?,
                delta: a.req("delta", Frequency)?,
                gamma_rad: a.req("gamma-rad", Frequency)?,
                omega_x,
                splitting,
                omega_b,
                gamma_carrier: a.opt("gamma-carrier", Frequency, crate::units::mhz(2.0))?,
                gamma_zeeman: a.opt("gamma-zeeman", Frequency, crate::units::mhz(1.0))?,
            })?;
            b.push("eta_minus", r.eta_minus, Dimensionless);
            b.push("eta_plus", r.eta_plus, Dimensionless);
            b.push("eta", r.eta, Dimensionless);
            b.push("omega_eff", r.omega_eff, AngularFrequency);
            b.push("gamma_rad_u", r.gamma_rad_u, AngularFrequency);
            b.push("gamma_rad_d", r.gamma_rad_d, AngularFrequency);
            b.push("shift_u", r.shift_u, AngularFrequency);
            b.push("shift_d", r.shift_d, AngularFrequency);
            b.push("gamma", r.gamma, AngularFrequency);
            b.push("zeeman_loss", r.zeeman_loss, AngularFrequency);
        }
        Quantity::Q => {
            if a.has("dw") {
                let r = a.req("r", Plain)?;
                if !(0.0..=1.0).contains(&r) {
                    return Err(RateError::Reflectivity(r).into());
                }
                b.push(
                    "kappa",
                    kappa_from_spacing(r, a.req("dw", Frequency)?),
                    AngularFrequency,
                );
            } else {
                let l = a.req("l", Length)?;
                let v = a.req("v", Plain)?;
                let w0 = a.req("f0", Frequency)?;
                let loss = if a.has("q") {
                    q_to_reflectivity(a.req("q", Plain)?, l, v, w0)?
                } else {
                    reflectivity_q_conversion(a.req("r", Plain)?, l, v, w0)?
                };
                b.push("kappa", loss.kappa, AngularFrequency);
                b.push("Q", loss.q, Dimensionless);
                b.push("R", loss.reflectivity, Dimensionless);
                b.push("mode_spacing", mode_spacing(v, l), AngularFrequency);
            }
        }
        Quantity::Cavity => {
            let gmax = a.req("gamma-max", Frequency)?;
            let dw = if a.has("dw") {
                a.req("dw", Frequency)?
            } else {
                mode_spacing(a.req("v", Plain)?, a.req("l", Length)?)
            };
            b.push("g_tilde", cavity_coupling(gmax, dw), AngularFrequency);
            b.push("mode_spacing", dw, AngularFrequency);
            if a.has("r") {
                b.push(
                    "kappa",
                    kappa_from_spacing(a.req("r", Plain)?, dw),
                    AngularFrequency,
                );
            }
        }
        Quantity::SingleMode => {
            let g = matched_single_mode_coupling(
                a.req("gamma-max", Frequency)?,
                a.req("v", Plain)?,
                a.req("l", Length)?,
                a.req("k", Plain)?,
                a.req("x", Length)?,
            );
            b.push("g_j", g, AngularFrequency);
        }
        Quantity::Scaling => {
            let g = mode_coupling_scaling(
                a.req("g0", Frequency)?,
                a.req("lambda", Length)?,
                a.req("l", Length)?,
            );
            b.push("g_L", g, AngularFrequency);
        }
    }
    a.check_unused()?;
    Ok(b)
}
