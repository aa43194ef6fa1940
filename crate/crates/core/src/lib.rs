//! Robust near-field multi-user precoding over spherical transmission zones.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: planar-array element coordinates, user kinematics,
//!   scatterer placement and spherical transmission zones.
//! - [`channel`]: spherical-wavefront steering vectors, Monte-Carlo zone
//!   covariances, Karhunen-Loève bases and channel realizations, plus the
//!   binary covariance cache.
//! - [`numerics`]: dense complex linear algebra and the second-order-cone
//!   solver behind sphere precoding.
//! - [`precoding`]: sphere precoding and the baseline precoders, beam gains
//!   and beampattern grids.
//! - [`simulation`]: user drops, SINR evaluation, metrics and the sweep
//!   pipelines.
//! - [`export`]: CSV writers for metrics, CDFs and beampatterns.

pub mod channel;
pub mod error;
pub mod export;
pub mod geometry;
pub mod numerics;
pub mod precoding;
pub mod simulation;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength in meters for a frequency in Hz.
pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

/// Linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Decibels to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
