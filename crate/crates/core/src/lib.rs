//! Simulation and design toolkit for phonon-mediated quantum state transfer
//! between silicon-vacancy centres embedded in a diamond waveguide.
//!
//! The [`rates`] module turns device parameters into effective emission
//! rates and loss figures, [`dynamics`] integrates the delay-coupled network
//! of driven and passive centres, [`protocols`] supplies drive programs for
//! emitters and receivers, and [`analytics`] holds closed-form references and
//! the sweep drivers built on the integrator.

pub mod analytics;
pub mod config;
pub mod dynamics;
pub mod model;
pub mod protocols;
pub mod rates;
pub mod units;

pub use config::ConfigError;
pub use dynamics::{simulate, Trajectory};
pub use model::{validate, ModelError, NetworkConfig, ValidatedConfig};
