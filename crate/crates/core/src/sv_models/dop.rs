//! Dilution of precision from line-of-sight geometry.

use super::SvModelError;
use crate::coords::{ecef_to_geodetic, enu_rotation, EcefPosition};
use crate::navdata::{names, NavData};
use nalgebra::{DMatrix, Matrix3, Matrix4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dop {
    pub gdop: f64,
    pub pdop: f64,
    pub hdop: f64,
    pub vdop: f64,
    pub tdop: f64,
}

const SINGULAR_RATIO: f64 = 1e-10;

/// DOP for satellites at ECEF `svs` seen from `rx`.
pub fn dop_from_geometry(svs: &[[f64; 3]], rx: &EcefPosition) -> Result<Dop, SvModelError> {
    if svs.len() < 4 {
        return Err(SvModelError::TooFewSatellites(svs.len()));
    }
    let mut g = DMatrix::<f64>::zeros(svs.len(), 4);
    for (i, s) in svs.iter().enumerate() {
        let d = [s[0] - rx.x_m, s[1] - rx.y_m, s[2] - rx.z_m];
        let range = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if range == 0.0 {
            return Err(SvModelError::SingularGeometry);
        }
        for k in 0..3 {
            g[(i, k)] = -d[k] / range;
        }
        g[(i, 3)] = 1.0;
    }
    let sv = g.singular_values();
    let max = sv.max();
    if !(max > 0.0) || sv.min() / max < SINGULAR_RATIO {
        return Err(SvModelError::SingularGeometry);
    }
    let normal: Matrix4<f64> = (g.transpose() * &g).fixed_view::<4, 4>(0, 0).into_owned();
    let q = normal.try_inverse().ok_or(SvModelError::SingularGeometry)?;

    let origin = ecef_to_geodetic(rx)?;
    let r = Matrix3::from_fn(|i, j| enu_rotation(&origin)[i][j]);
    let q_pos: Matrix3<f64> = q.fixed_view::<3, 3>(0, 0).into_owned();
    let q_enu = r * q_pos * r.transpose();
    Ok(Dop {
        gdop: q.trace().sqrt(),
        pdop: (q[(0, 0)] + q[(1, 1)] + q[(2, 2)]).sqrt(),
        hdop: (q_enu[(0, 0)] + q_enu[(1, 1)]).sqrt(),
        vdop: q_enu[(2, 2)].sqrt(),
        tdop: q[(3, 3)].sqrt(),
    })
}

/// DOP of one epoch's satellites; columns with NaN sv positions are skipped.
pub fn compute_dop(data: &NavData, rx: &EcefPosition) -> Result<Dop, SvModelError> {
    let x = data.numeric(names::X_SV_M)?;
    let y = data.numeric(names::Y_SV_M)?;
    let z = data.numeric(names::Z_SV_M)?;
    let svs: Vec<[f64; 3]> = (0..data.len())
        .map(|i| [x[i], y[i], z[i]])
        .filter(|p| p.iter().all(|v| v.is_finite()))
        .collect();
    dop_from_geometry(&svs, rx)
}
