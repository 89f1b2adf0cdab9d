//! Satellite states from broadcast or precise products, atmospheric delay
//! models and dilution of precision.

mod atmosphere;
mod broadcast;
mod corrections;
mod dop;
mod precise;
mod states;

pub use atmosphere::{klobuchar_delay, klobuchar_seconds, tropo_delay, IonoParams};
pub use corrections::{add_corrections, Corrections};
pub use broadcast::{broadcast_sv_state, BroadcastStore, GM_EARTH, MAX_FIT_S, OMEGA_E, REL_F};
pub use dop::{compute_dop, dop_from_geometry, Dop};
pub use precise::{interpolate_sp3_clk, PreciseStore};
pub use states::{add_sv_states, transmit_state, SvSource};

use crate::constellation::Constellation;
use crate::coords::CoordError;
use crate::navdata::NavDataError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvModelError {
    #[error("Kepler's equation did not converge for {0}")]
    KeplerNonConvergence(String),
    #[error("{sv}: time {t_ms} ms outside product span [{start_ms}, {end_ms}]")]
    OutOfSpan {
        sv: String,
        t_ms: f64,
        start_ms: f64,
        end_ms: f64,
    },
    #[error("{sv}: {have} usable nodes, need {need}")]
    InsufficientNodes { sv: String, have: usize, need: usize },
    #[error("{0}: no clock data")]
    NoClock(String),
    #[error("{0}: no product data")]
    NoProduct(String),
    #[error("products are empty")]
    EmptyProducts,
    #[error("{0} satellites, need at least 4")]
    TooFewSatellites(usize),
    #[error("singular satellite geometry")]
    SingularGeometry,
    #[error(transparent)]
    NavData(#[from] NavDataError),
    #[error(transparent)]
    Coord(#[from] CoordError),
}

/// Satellite position, velocity and clock at one instant (ECEF, meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvState {
    pub gps_millis: f64,
    pub gnss_id: Constellation,
    pub sv_id: u32,
    pub x_sv_m: f64,
    pub y_sv_m: f64,
    pub z_sv_m: f64,
    pub vx_sv_mps: f64,
    pub vy_sv_mps: f64,
    pub vz_sv_mps: f64,
    /// Clock offset times c.
    pub b_sv_m: f64,
    pub b_dot_sv_mps: f64,
}

impl SvState {
    pub fn position(&self) -> [f64; 3] {
        [self.x_sv_m, self.y_sv_m, self.z_sv_m]
    }

    pub fn velocity(&self) -> [f64; 3] {
        [self.vx_sv_mps, self.vy_sv_mps, self.vz_sv_mps]
    }

    /// Rotates position and velocity about the z axis by `theta` (rad),
    /// i.e. expresses them in the Earth-fixed frame `theta / OMEGA_E` later.
    pub fn rotate_z(&mut self, theta: f64) {
        let (s, c) = theta.sin_cos();
        let (x, y) = (self.x_sv_m, self.y_sv_m);
        self.x_sv_m = c * x + s * y;
        self.y_sv_m = -s * x + c * y;
        let (vx, vy) = (self.vx_sv_mps, self.vy_sv_mps);
        self.vx_sv_mps = c * vx + s * vy;
        self.vy_sv_mps = -s * vx + c * vy;
    }
}

pub(crate) fn sv_label(c: Constellation, sv: u32) -> String {
    format!("{}{:02}", c.rinex_char(), sv)
}
