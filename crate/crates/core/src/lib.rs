//! Clutter covariance structure and clutter-rank estimation for frequency
//! diverse radar waveforms (frequency diverse arrays, stepped-frequency pulse
//! trains, frequency diverse MIMO and airborne STAP).

pub mod cli;
pub mod config;
pub mod covariance;
pub mod detect;
pub mod error;
pub mod fdcm;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod presets;
pub mod rank;
pub mod steering;

pub use error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
