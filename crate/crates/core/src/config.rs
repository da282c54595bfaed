//! Scenario files.
//!
//! A scenario is a TOML document with four kinds of sections:
//!
//! ```toml
//! [waveguide]
//! length_um = 100.0          # or "inf" for an unbounded guide
//! carrier_ghz = 46.0
//!
//! [branches.transverse]      # label: transverse | longitudinal | anything
//! group_velocity_m_s = 7300.0
//! wavevector_rad_per_um = 31.7   # or wavelength_nm
//! beta = 0.5
//! reflectivity = 0.92
//!
//! [nodes.e]                  # nodes are listed left to right
//! position_um = 5.0
//! role = "emitter"           # emitter | receiver | mirror | passive
//! detuning_mhz = 100.0
//! total_emission_mhz = 2.0   # split by branch beta unless
//! # bare_emission_mhz = { transverse = 1.0, longitudinal = 1.0 }
//! # t2_star_us = 100.0
//!
//! [nodes.e.drive]
//! kind = "exponential_ramp"  # off | constant | exponential_ramp | dark_state
//! gamma_max_mhz = 0.25
//! t_p_gamma_max = 1.0        # or t_p_us
//!
//! [simulation]
//! t_max_gamma_max = 12.0     # or t_max_us
//! # dt_us, record_every, scattering, initial_amplitude = [re, im]
//! ```
//!
//! Every frequency is an ordinary frequency; it is converted to rad/μs on
//! load. Errors name the offending section and key.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;
use toml::{Table, Value};

use crate::model::{
    validate, BranchLabel, BranchSpec, DriveProgram, ModelError, NetworkConfig, NodeRole,
    NodeSpec, ValidatedConfig,
};
use crate::units::{ghz, mhz};

/// Total bare emission rate assumed when a node gives none, in MHz.
pub const DEFAULT_TOTAL_EMISSION_MHZ: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("[{section}] {key}: {message}")]
    Field {
        section: String,
        key: String,
        message: String,
    },
    #[error("[{section}]: {message}")]
    Section { section: String, message: String },
    #[error("invalid network: {0}")]
    Model(#[from] ModelError),
    #[error("parameter `{path}`: {message}")]
    Param { path: String, message: String },
}

fn field_err(section: &str, key: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Field {
        section: section.to_string(),
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn section_err(section: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Section {
        section: section.to_string(),
        message: message.to_string(),
    }
}

/// Typed reads from one table with location-carrying errors.
struct Reader<'a> {
    section: String,
    table: &'a Table,
    seen: std::cell::RefCell<Vec<&'a str>>,
}

impl<'a> Reader<'a> {
    fn new(section: impl Into<String>, table: &'a Table) -> Self {
        Reader {
            section: section.into(),
            table,
            seen: Default::default(),
        }
    }

    fn raw(&self, key: &'a str) -> Option<&'a Value> {
        let v = self.table.get(key);
        if v.is_some() {
            self.seen.borrow_mut().push(key);
        }
        v
    }

    fn number(&self, key: &'a str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(field_err(
                &self.section,
                key,
                format!("expected a number, found {}", other.type_str()),
            )),
        }
    }

    fn require(&self, key: &'a str) -> Result<f64, ConfigError> {
        self.number(key)?
            .ok_or_else(|| field_err(&self.section, key, "missing required number"))
    }

    fn string(&self, key: &'a str) -> Result<Option<&'a str>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(field_err(
                &self.section,
                key,
                format!("expected a string, found {}", other.type_str()),
            )),
        }
    }

    fn boolean(&self, key: &'a str) -> Result<Option<bool>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(other) => Err(field_err(
                &self.section,
                key,
                format!("expected true or false, found {}", other.type_str()),
            )),
        }
    }

    fn table(&self, key: &'a str) -> Result<Option<&'a Table>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(other) => Err(field_err(
                &self.section,
                key,
                format!("expected a table, found {}", other.type_str()),
            )),
        }
    }

    /// At most one of `keys` may be present.
    fn exclusive(&self, keys: &[&str]) -> Result<(), ConfigError> {
        let present: Vec<&str> = keys
            .iter()
            .copied()
            .filter(|k| self.table.contains_key(*k))
            .collect();
        if present.len() > 1 {
            return Err(section_err(
                &self.section,
                format!("keys {} are mutually exclusive", present.join(" and ")),
            ));
        }
        Ok(())
    }

    fn finish(&self) -> Result<(), ConfigError> {
        let seen = self.seen.borrow();
        match self.table.keys().find(|k| !seen.contains(&k.as_str())) {
            Some(k) => Err(field_err(&self.section, k, "unknown key")),
            None => Ok(()),
        }
    }
}

/// Parses TOML text into a document that can be edited before building.
pub fn parse_document(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>()
        .map_err(|e| ConfigError::Syntax(e.to_string().trim_end().to_string()))
}

/// Reads, parses and builds a scenario file without validating it.
pub fn load_path(path: impl AsRef<Path>) -> Result<(String, NetworkConfig), ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg = from_str(&text)?;
    Ok((text, cfg))
}

pub fn from_str(text: &str) -> Result<NetworkConfig, ConfigError> {
    from_document(&parse_document(text)?)
}

/// Parses and validates in one go.
pub fn load_validated(text: &str) -> Result<ValidatedConfig, ConfigError> {
    Ok(validate(&from_str(text)?)?)
}

fn parse_drive(section: &str, table: Option<&Table>) -> Result<DriveProgram, ConfigError> {
    let Some(table) = table else {
        return Ok(DriveProgram::Off);
    };
    let r = Reader::new(section, table);
    let kind = r.string("kind")?.unwrap_or("off");
    r.exclusive(&["t_p_us", "t_p_gamma_max"])?;
    let gamma = r.number("gamma_mhz")?.map(mhz);
    let gamma_max = r.number("gamma_max_mhz")?.map(mhz);
    let phase = r.number("phase_rad")?.unwrap_or(0.0);
    let pick_cap = || -> Result<(f64, f64), ConfigError> {
        match (gamma, gamma_max) {
            (Some(g), Some(m)) => Ok((g, m)),
            (Some(g), None) => Ok((g, g)),
            (None, Some(m)) => Ok((m, m)),
            (None, None) => Err(field_err(section, "gamma_max_mhz", "missing drive rate")),
        }
    };
    let drive = match kind {
        "off" => DriveProgram::Off,
        "constant" => {
            let (gamma, gamma_max) = pick_cap()?;
            DriveProgram::Constant {
                gamma,
                phase,
                gamma_max,
            }
        }
        "exponential_ramp" | "ramp" => {
            let (gamma, gamma_max) = pick_cap()?;
            let t_p = match (r.number("t_p_us")?, r.number("t_p_gamma_max")?) {
                (Some(t), _) => t,
                (None, Some(units)) => units / gamma_max,
                (None, None) => return Err(field_err(section, "t_p_us", "missing ramp time")),
            };
            DriveProgram::ExponentialRamp {
                gamma,
                t_p,
                phase,
                gamma_max,
            }
        }
        "dark_state" | "dark_state_controller" => DriveProgram::DarkState {
            gamma_max: gamma_max
                .or(gamma)
                .ok_or_else(|| field_err(section, "gamma_max_mhz", "missing drive cap"))?,
        },
        other => {
            return Err(field_err(
                section,
                "kind",
                format!("unknown drive kind `{other}` (off, constant, exponential_ramp, dark_state)"),
            ))
        }
    };
    r.finish()?;
    Ok(drive)
}

/// Builds a configuration from a parsed document.
pub fn from_document(doc: &Table) -> Result<NetworkConfig, ConfigError> {
    let root = Reader::new("", doc);

    let wg_table = root
        .table("waveguide")?
        .ok_or_else(|| section_err("waveguide", "missing section"))?;
    let wg = Reader::new("waveguide", wg_table);
    let length = match wg.raw("length_um") {
        Some(Value::String(s)) if matches!(s.as_str(), "inf" | "infinite") => f64::INFINITY,
        Some(Value::Float(f)) => *f,
        Some(Value::Integer(i)) => *i as f64,
        Some(other) => {
            return Err(field_err(
                "waveguide",
                "length_um",
                format!("expected a number or \"inf\", found {}", other.type_str()),
            ))
        }
        None => return Err(field_err("waveguide", "length_um", "missing required number")),
    };
    let length = if wg.boolean("infinite")?.unwrap_or(false) {
        f64::INFINITY
    } else {
        length
    };
    let carrier = ghz(wg.number("carrier_ghz")?.unwrap_or(46.0));
    wg.finish()?;

    let branch_tables = root
        .table("branches")?
        .ok_or_else(|| section_err("branches", "missing section"))?;
    let mut branches = Vec::new();
    for (label, value) in branch_tables {
        let section = format!("branches.{label}");
        let Value::Table(t) = value else {
            return Err(section_err(&section, "expected a table"));
        };
        let r = Reader::new(section.clone(), t);
        r.exclusive(&["wavevector_rad_per_um", "wavelength_nm"])?;
        let wavevector = match (r.number("wavevector_rad_per_um")?, r.number("wavelength_nm")?) {
            (Some(k), _) => k,
            (None, Some(lambda)) => std::f64::consts::TAU / (lambda * 1e-3),
            (None, None) => {
                return Err(field_err(&section, "wavevector_rad_per_um", "missing required number"))
            }
        };
        branches.push(BranchSpec {
            label: BranchLabel::parse(label),
            group_velocity: r.require("group_velocity_m_s")?,
            wavevector,
            beta: r.require("beta")?,
            reflectivity: r.number("reflectivity")?.unwrap_or(1.0),
        });
        r.finish()?;
    }

    let mut nodes = Vec::new();
    if let Some(node_tables) = root.table("nodes")? {
        for (name, value) in node_tables {
            let section = format!("nodes.{name}");
            let Value::Table(t) = value else {
                return Err(section_err(&section, "expected a table"));
            };
            let r = Reader::new(section.clone(), t);
            r.exclusive(&["bare_emission_mhz", "total_emission_mhz"])?;
            let role = match r.string("role")? {
                None => NodeRole::Passive,
                Some(s) => NodeRole::parse(s).ok_or_else(|| {
                    field_err(&section, "role", format!("unknown role `{s}` (emitter, receiver, mirror, passive)"))
                })?,
            };
            let bare_emission = match r.raw("bare_emission_mhz") {
                Some(Value::Table(rates)) => {
                    let mut out = vec![0.0; branches.len()];
                    for (key, v) in rates {
                        let idx = branches
                            .iter()
                            .position(|b| b.label == BranchLabel::parse(key))
                            .ok_or_else(|| {
                                field_err(&section, "bare_emission_mhz", format!("no branch named `{key}`"))
                            })?;
                        out[idx] = mhz(v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).ok_or_else(
                            || field_err(&section, "bare_emission_mhz", format!("rate for `{key}` is not a number")),
                        )?);
                    }
                    out
                }
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|v| {
                        v.as_float()
                            .or_else(|| v.as_integer().map(|i| i as f64))
                            .map(mhz)
                            .ok_or_else(|| field_err(&section, "bare_emission_mhz", "expected numbers"))
                    })
                    .collect::<Result<_, _>>()?,
                Some(other) => {
                    return Err(field_err(
                        &section,
                        "bare_emission_mhz",
                        format!("expected a table or array, found {}", other.type_str()),
                    ))
                }
                None => {
                    let total = mhz(r.number("total_emission_mhz")?.unwrap_or(DEFAULT_TOTAL_EMISSION_MHZ));
                    branches.iter().map(|b| b.beta * total).collect()
                }
            };
            let drive = parse_drive(&format!("{section}.drive"), r.table("drive")?)?;
            nodes.push(NodeSpec {
                name: name.clone(),
                position: r.require("position_um")?,
                detuning: mhz(r.number("detuning_mhz")?.unwrap_or(100.0)),
                bare_emission,
                drive,
                role,
                dephasing_time: r.number("t2_star_us")?,
            });
            r.finish()?;
        }
    }

    let empty = Table::new();
    let sim_table = root.table("simulation")?.unwrap_or(&empty);
    let sim = Reader::new("simulation", sim_table);
    sim.exclusive(&["t_max_us", "t_max_gamma_max"])?;
    let provisional = NetworkConfig {
        length,
        carrier,
        branches,
        nodes,
        scattering: sim.boolean("scattering")?.unwrap_or(false),
        dt: sim.number("dt_us")?,
        t_max: 0.0,
        record_every: match sim.number("record_every")? {
            None => None,
            Some(n) if n >= 1.0 && n.fract() == 0.0 => Some(n as usize),
            Some(_) => return Err(field_err("simulation", "record_every", "expected a positive integer")),
        },
        initial_amplitude: match sim.raw("initial_amplitude") {
            None => Complex64::new(1.0, 0.0),
            Some(Value::Array(a)) if a.len() == 2 => {
                let part = |v: &Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
                match (part(&a[0]), part(&a[1])) {
                    (Some(re), Some(im)) => Complex64::new(re, im),
                    _ => return Err(field_err("simulation", "initial_amplitude", "expected [re, im]")),
                }
            }
            Some(_) => return Err(field_err("simulation", "initial_amplitude", "expected [re, im]")),
        },
    };
    let t_max = match (sim.number("t_max_us")?, sim.number("t_max_gamma_max")?) {
        (Some(t), _) => t,
        (None, Some(units)) => {
            let g = provisional.gamma_max().ok_or_else(|| {
                field_err("simulation", "t_max_gamma_max", "no driven node defines gamma_max_mhz")
            })?;
            units / g
        }
        (None, None) => return Err(field_err("simulation", "t_max_us", "missing required number")),
    };
    sim.finish()?;
    root.finish()?;
    Ok(NetworkConfig {
        t_max,
        ..provisional
    })
}

/// Dotted path to a numeric scenario entry, e.g. `nodes.r.position`.
///
/// The last segment may omit the unit suffix of the key it names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamPath {
    segments: Vec<String>,
}

impl ParamPath {
    pub fn parse(path: &str) -> Result<Self, ConfigError> {
        let bad = |message: &str| ConfigError::Param {
            path: path.to_string(),
            message: message.to_string(),
        };
        if path.is_empty() {
            return Err(bad("empty parameter path"));
        }
        let segments: Vec<String> = path.split('.').map(str::to_string).collect();
        if segments.len() < 2 {
            return Err(bad("expected section.key"));
        }
        for s in &segments {
            if s.is_empty() {
                return Err(bad("empty path segment"));
            }
            if !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(bad("segments may contain only letters, digits, '_' and '-'"));
            }
        }
        Ok(ParamPath { segments })
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    /// Resolves the concrete key in `doc` this path refers to.
    pub fn resolve(&self, doc: &Table) -> Result<Vec<String>, ConfigError> {
        let path = self.segments.join(".");
        let missing = |message: String| ConfigError::Param {
            path: path.clone(),
            message,
        };
        let (last, parents) = self.segments.split_last().expect("non-empty");
        let mut table = doc;
        for (depth, seg) in parents.iter().enumerate() {
            table = match table.get(seg) {
                Some(Value::Table(t)) => t,
                _ => {
                    return Err(missing(format!(
                        "no section `{}`",
                        self.segments[..=depth].join(".")
                    )))
                }
            };
        }
        let key = if table.contains_key(last) {
            last.clone()
        } else {
            let prefix = format!("{last}_");
            let candidates: Vec<&String> = table.keys().filter(|k| k.starts_with(&prefix)).collect();
            match candidates.as_slice() {
                [one] => (*one).clone(),
                [] => return Err(missing(format!("no parameter `{last}` in this section"))),
                _ => {
                    return Err(missing(format!(
                        "ambiguous: matches {}",
                        candidates.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
                    )))
                }
            }
        };
        match table.get(&key) {
            Some(Value::Float(_)) | Some(Value::Integer(_)) => {}
            _ => return Err(missing(format!("`{key}` is not numeric"))),
        }
        let mut full: Vec<String> = parents.to_vec();
        full.push(key);
        Ok(full)
    }

    /// Overwrites the addressed number in `doc`.
    pub fn set(&self, doc: &mut Table, value: f64) -> Result<(), ConfigError> {
        let full = self.resolve(doc)?;
        let (last, parents) = full.split_last().expect("non-empty");
        let mut table = doc;
        for seg in parents {
            table = table
                .get_mut(seg)
                .and_then(Value::as_table_mut)
                .expect("resolved path");
        }
        table.insert(last.clone(), Value::Float(value));
        Ok(())
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.segments.join("."))
    }
}
