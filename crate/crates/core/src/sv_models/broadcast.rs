//! Keplerian propagation of broadcast ephemerides.

use super::{sv_label, SvModelError, SvState};
use crate::constellation::Constellation;
use crate::parsers::EphemerisRecord;
use crate::time::GpsTime;
use crate::SPEED_OF_LIGHT;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Earth gravitational parameter (m^3/s^2).
pub const GM_EARTH: f64 = 3.986005e14;
/// Earth rotation rate (rad/s).
pub const OMEGA_E: f64 = 7.2921151467e-5;
/// Relativistic clock constant (s/m^0.5).
pub const REL_F: f64 = -4.442807633e-10;
/// Beyond this distance from toe (s) a record is used with a warning.
pub const MAX_FIT_S: f64 = 4.0 * 3600.0;

const KEPLER_TOL: f64 = 1e-14;
const KEPLER_MAX_ITER: usize = 30;

fn eccentric_anomaly(m: f64, e: f64) -> Option<f64> {
    let mut ea = m;
    for _ in 0..KEPLER_MAX_ITER {
        let step = (ea - e * ea.sin() - m) / (1.0 - e * ea.cos());
        ea -= step;
        if step.abs() < KEPLER_TOL {
            return Some(ea);
        }
    }
    None
}

pub fn broadcast_sv_state(eph: &EphemerisRecord, t: impl Into<GpsTime>) -> Result<SvState, SvModelError> {
    let t = t.into();
    let tk = t.seconds_since(&eph.toe());
    if tk.abs() > MAX_FIT_S {
        log::warn!(
            "{}: ephemeris used {:.0} s from toe",
            sv_label(eph.gnss_id, eph.sv_id),
            tk
        );
    }
    let a = eph.sqrt_a * eph.sqrt_a;
    let e = eph.ecc;
    let n = (GM_EARTH / (a * a * a)).sqrt() + eph.delta_n_rad_s;
    let m = (eph.m0_rad + n * tk + PI).rem_euclid(2.0 * PI) - PI;
    let ea = eccentric_anomaly(m, e)
        .ok_or_else(|| SvModelError::KeplerNonConvergence(sv_label(eph.gnss_id, eph.sv_id)))?;
    let (sin_e, cos_e) = ea.sin_cos();
    let one_minus = 1.0 - e * cos_e;
    let root = (1.0 - e * e).sqrt();
    let nu = (root * sin_e).atan2(cos_e - e);
    let phi = nu + eph.omega_rad;
    let (s2, c2) = (2.0 * phi).sin_cos();

    let u = phi + eph.cus * s2 + eph.cuc * c2;
    let r = a * one_minus + eph.crs_m * s2 + eph.crc_m * c2;
    let inc = eph.i0_rad + eph.cis * s2 + eph.cic * c2 + eph.idot_rad_s * tk;

    let e_dot = n / one_minus;
    let phi_dot = e_dot * root / one_minus;
    let u_dot = phi_dot * (1.0 + 2.0 * (eph.cus * c2 - eph.cuc * s2));
    let r_dot = a * e * sin_e * e_dot + 2.0 * phi_dot * (eph.crs_m * c2 - eph.crc_m * s2);
    let i_dot = eph.idot_rad_s + 2.0 * phi_dot * (eph.cis * c2 - eph.cic * s2);

    let (sin_u, cos_u) = u.sin_cos();
    let xp = r * cos_u;
    let yp = r * sin_u;
    let xp_dot = r_dot * cos_u - r * u_dot * sin_u;
    let yp_dot = r_dot * sin_u + r * u_dot * cos_u;

    let om_dot = eph.omegadot_rad_s - OMEGA_E;
    let om = eph.omega0_rad + om_dot * tk - OMEGA_E * eph.toe_s;
    let (sin_o, cos_o) = om.sin_cos();
    let (sin_i, cos_i) = inc.sin_cos();

    let x = xp * cos_o - yp * cos_i * sin_o;
    let y = xp * sin_o + yp * cos_i * cos_o;
    let z = yp * sin_i;
    let vx = xp_dot * cos_o - yp_dot * cos_i * sin_o + yp * sin_i * sin_o * i_dot - om_dot * y;
    let vy = xp_dot * sin_o + yp_dot * cos_i * cos_o - yp * sin_i * cos_o * i_dot + om_dot * x;
    let vz = yp_dot * sin_i + yp * cos_i * i_dot;

    let dt = t.seconds_since(&eph.toc());
    let rel = REL_F * e * eph.sqrt_a * sin_e;
    let rel_dot = REL_F * e * eph.sqrt_a * cos_e * e_dot;
    let clk = eph.af0_s + eph.af1_s_s * dt + eph.af2_s_s2 * dt * dt + rel - eph.tgd_s;
    let clk_dot = eph.af1_s_s + 2.0 * eph.af2_s_s2 * dt + rel_dot;

    Ok(SvState {
        gps_millis: t.to_millis(),
        gnss_id: eph.gnss_id,
        sv_id: eph.sv_id,
        x_sv_m: x,
        y_sv_m: y,
        z_sv_m: z,
        vx_sv_mps: vx,
        vy_sv_mps: vy,
        vz_sv_mps: vz,
        b_sv_m: clk * SPEED_OF_LIGHT,
        b_dot_sv_mps: clk_dot * SPEED_OF_LIGHT,
    })
}

/// Broadcast records grouped by satellite.
#[derive(Debug, Clone, Default)]
pub struct BroadcastStore {
    by_sv: HashMap<(Constellation, u32), Vec<EphemerisRecord>>,
}

impl BroadcastStore {
    pub fn new(records: &[EphemerisRecord]) -> Self {
        let mut by_sv: HashMap<_, Vec<EphemerisRecord>> = HashMap::new();
        for r in records {
            by_sv.entry((r.gnss_id, r.sv_id)).or_default().push(r.clone());
        }
        Self { by_sv }
    }

    pub fn is_empty(&self) -> bool {
        self.by_sv.is_empty()
    }

    pub fn satellites(&self) -> impl Iterator<Item = (Constellation, u32)> + '_ {
        self.by_sv.keys().copied()
    }

    /// Healthy record with toe nearest to `t`.
    pub fn select(&self, gnss: Constellation, sv: u32, t: &GpsTime) -> Option<&EphemerisRecord> {
        self.by_sv.get(&(gnss, sv))?.iter().filter(|r| r.health == 0).min_by(|a, b| {
            let da = t.seconds_since(&a.toe()).abs();
            let db = t.seconds_since(&b.toe()).abs();
            da.total_cmp(&db)
        })
    }

    pub fn state(&self, gnss: Constellation, sv: u32, t: GpsTime) -> Result<SvState, SvModelError> {
        let eph = self
            .select(gnss, sv, &t)
            .ok_or_else(|| SvModelError::NoProduct(sv_label(gnss, sv)))?;
        broadcast_sv_state(eph, t)
    }
}
