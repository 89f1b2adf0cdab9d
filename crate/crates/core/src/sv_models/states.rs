//! Attaching satellite states at signal transmit time to measurements.

use super::{sv_label, BroadcastStore, PreciseStore, SvModelError, SvState, OMEGA_E};
use crate::constellation::Constellation;
use crate::navdata::{names, NavData, Row};
use crate::time::GpsTime;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy)]
pub enum SvSource<'a> {
    Broadcast(&'a BroadcastStore),
    Precise(&'a PreciseStore),
}

impl SvSource<'_> {
    pub fn state(&self, gnss: Constellation, sv: u32, t: GpsTime) -> Result<SvState, SvModelError> {
        match self {
            SvSource::Broadcast(b) => b.state(gnss, sv, t),
            SvSource::Precise(p) => p.state(gnss, sv, t),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            SvSource::Broadcast(b) => b.is_empty(),
            SvSource::Precise(p) => p.is_empty(),
        }
    }
}

const TRANSMIT_ITERATIONS: usize = 2;

/// Satellite state at the transmit time of a pseudorange received at `t_rx`,
/// expressed in the Earth-fixed frame at reception.
pub fn transmit_state(
    source: &SvSource,
    gnss: Constellation,
    sv: u32,
    t_rx: GpsTime,
    pr_m: f64,
) -> Result<SvState, SvModelError> {
    if pr_m == 0.0 {
        return source.state(gnss, sv, t_rx);
    }
    let mut b_sv = 0.0;
    let mut state = None;
    for _ in 0..TRANSMIT_ITERATIONS {
        let t_tx = t_rx.add_seconds(-(pr_m + b_sv) / SPEED_OF_LIGHT);
        let s = source.state(gnss, sv, t_tx)?;
        b_sv = s.b_sv_m;
        state = Some((s, t_tx));
    }
    let (mut s, t_tx) = state.ok_or_else(|| SvModelError::NoProduct(sv_label(gnss, sv)))?;
    s.rotate_z(OMEGA_E * t_rx.seconds_since(&t_tx));
    Ok(s)
}

/// Appends sv position, velocity and clock rows. Columns whose satellite
/// has no usable product get NaN; the returned list holds one warning per
/// such column.
pub fn add_sv_states(measurements: &NavData, source: SvSource) -> Result<(NavData, Vec<String>), SvModelError> {
    let t = measurements.numeric(names::GPS_MILLIS)?;
    let gnss = measurements.categorical(names::GNSS_ID)?;
    let sv = measurements.numeric(names::SV_ID)?;
    let pr = measurements.numeric(names::RAW_PR_M)?;
    if source.is_empty() {
        return Err(SvModelError::EmptyProducts);
    }
    let n = measurements.len();
    let mut rows: [Vec<f64>; 8] = Default::default();
    let mut warnings = Vec::new();
    for i in 0..n {
        let state = match (gnss[i].parse::<Constellation>(), sv_number(sv[i])) {
            (Ok(c), Some(prn)) if pr[i].is_finite() => {
                transmit_state(&source, c, prn, GpsTime::from_millis(t[i]), pr[i])
            }
            _ => Err(SvModelError::NoProduct(format!("{}:{}", gnss[i], sv[i]))),
        };
        let vals = match state {
            Ok(s) => [
                s.x_sv_m,
                s.y_sv_m,
                s.z_sv_m,
                s.vx_sv_mps,
                s.vy_sv_mps,
                s.vz_sv_mps,
                s.b_sv_m,
                s.b_dot_sv_mps,
            ],
            Err(e) => {
                log::warn!("column {i}: {e}");
                warnings.push(format!("column {i}: {e}"));
                [f64::NAN; 8]
            }
        };
        for (r, v) in rows.iter_mut().zip(vals) {
            r.push(v);
        }
    }
    let mut out = measurements.clone();
    let [x, y, z, vx, vy, vz, b, bd] = rows;
    for (name, values) in [
        (names::X_SV_M, x),
        (names::Y_SV_M, y),
        (names::Z_SV_M, z),
        (names::VX_SV_MPS, vx),
        (names::VY_SV_MPS, vy),
        (names::VZ_SV_MPS, vz),
        (names::B_SV_M, b),
        ("b_dot_sv_mps", bd),
    ] {
        out.insert(name, Row::Numeric(values))?;
    }
    Ok((out, warnings))
}

fn sv_number(v: f64) -> Option<u32> {
    (v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX)).then_some(v as u32)
}
