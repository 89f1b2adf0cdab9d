//! GNSS toolkit: parsers for common GNSS file formats feeding one labeled
//! container ([`navdata::NavData`]), satellite and atmosphere models,
//! position solvers with outlier exclusion, an ephemeris downloader and
//! static plot emitters.

pub mod cli;
pub mod constellation;
pub mod coords;
pub mod ephemeris_dl;
pub mod navdata;
pub mod parsers;
pub mod solvers;
pub mod sv_models;
pub mod time;
pub mod visualize;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
