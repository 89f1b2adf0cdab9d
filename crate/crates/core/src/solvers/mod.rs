//! Receiver position and clock estimation: weighted least squares, an
//! extended Kalman filter, pseudorange residuals and residual-based fault
//! exclusion.

mod ekf;
mod fde;
mod residuals;
mod wls;

pub use ekf::{solve_gnss_ekf, solve_gnss_ekf_table, EkfConfig};
pub use fde::{solve_fde, FdeOutcome, FdeStatus, FdeStrategy};
pub use residuals::compute_residuals;
pub use wls::{gauss_newton_step, solve_wls, solve_wls_epochs, Weighting};

use crate::coords::{ecef_to_geodetic, EcefPosition};
use crate::navdata::{names, NavData, NavDataError, Row};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{0} usable satellites, need at least 4")]
    TooFewSatellites(usize),
    #[error("singular normal matrix")]
    Singular,
    #[error("empty epoch stream")]
    EmptyStream,
    #[error("no epoch could initialize the filter: {0}")]
    Initialization(String),
    #[error("missing row '{0}'")]
    MissingRow(String),
    #[error(transparent)]
    NavData(#[from] NavDataError),
}

/// Receiver state at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub gps_millis: f64,
    pub x_rx_m: f64,
    pub y_rx_m: f64,
    pub z_rx_m: f64,
    pub b_rx_m: f64,
    pub velocity_mps: Option<[f64; 3]>,
    pub b_dot_rx_mps: Option<f64>,
    /// 4x4 over (x, y, z, b), or 8x8 over (x, y, z, vx, vy, vz, b, b_dot).
    pub covariance: DMatrix<f64>,
    pub num_used: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl Solution {
    pub fn position(&self) -> EcefPosition {
        EcefPosition::new(self.x_rx_m, self.y_rx_m, self.z_rx_m)
    }

    /// Position block of the covariance.
    pub fn position_covariance(&self) -> nalgebra::Matrix3<f64> {
        self.covariance.fixed_view::<3, 3>(0, 0).into_owned()
    }
}

/// Measurements of one epoch in solver-ready form.
#[derive(Debug, Clone, Default)]
pub(crate) struct EpochObs {
    /// Column index into the source NavData.
    pub index: Vec<usize>,
    pub sv: Vec<[f64; 3]>,
    pub pr: Vec<f64>,
    pub sigma: Vec<f64>,
    pub el_deg: Vec<f64>,
}

impl EpochObs {
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn subset(&self, keep: &[usize]) -> EpochObs {
        EpochObs {
            index: keep.iter().map(|&k| self.index[k]).collect(),
            sv: keep.iter().map(|&k| self.sv[k]).collect(),
            pr: keep.iter().map(|&k| self.pr[k]).collect(),
            sigma: keep.iter().map(|&k| self.sigma[k]).collect(),
            el_deg: keep.iter().map(|&k| self.el_deg[k]).collect(),
        }
    }
}

/// `corr_pr_m` if present, else raw pseudoranges with whichever of the
/// satellite clock, iono and tropo rows exist applied.
pub fn corrected_pseudoranges(data: &NavData) -> Result<Vec<f64>, SolverError> {
    if data.contains(names::CORR_PR_M) {
        return Ok(data.numeric(names::CORR_PR_M)?.to_vec());
    }
    if !data.contains(names::RAW_PR_M) {
        return Err(SolverError::MissingRow(names::RAW_PR_M.into()));
    }
    let mut pr = data.numeric(names::RAW_PR_M)?.to_vec();
    for (name, sign) in [
        (names::B_SV_M, 1.0),
        (names::IONO_DELAY_M, -1.0),
        (names::TROPO_DELAY_M, -1.0),
    ] {
        if data.contains(name) {
            for (p, c) in pr.iter_mut().zip(data.numeric(name)?) {
                *p += sign * c;
            }
        }
    }
    Ok(pr)
}

/// Usable columns: finite sv position and pseudorange, not fault-flagged.
pub(crate) fn epoch_obs(data: &NavData) -> Result<EpochObs, SolverError> {
    for name in [names::X_SV_M, names::Y_SV_M, names::Z_SV_M] {
        if !data.contains(name) {
            return Err(SolverError::MissingRow(name.into()));
        }
    }
    let x = data.numeric(names::X_SV_M)?;
    let y = data.numeric(names::Y_SV_M)?;
    let z = data.numeric(names::Z_SV_M)?;
    let pr = corrected_pseudoranges(data)?;
    let sigma = optional_row(data, names::RAW_PR_SIGMA_M)?;
    let el = optional_row(data, names::EL_SV_DEG)?;
    let flag = optional_row(data, names::FAULT_FLAG)?;
    let mut out = EpochObs::default();
    for i in 0..data.len() {
        let p = [x[i], y[i], z[i]];
        if !(p.iter().all(|v| v.is_finite()) && pr[i].is_finite()) || flag[i] == 1.0 {
            continue;
        }
        out.index.push(i);
        out.sv.push(p);
        out.pr.push(pr[i]);
        out.sigma.push(sigma[i]);
        out.el_deg.push(el[i]);
    }
    Ok(out)
}

fn optional_row(data: &NavData, name: &str) -> Result<Vec<f64>, SolverError> {
    if data.contains(name) {
        Ok(data.numeric(name)?.to_vec())
    } else {
        Ok(vec![f64::NAN; data.len()])
    }
}

/// Unit line of sight from receiver to satellite and the geometric range.
pub(crate) fn line_of_sight(sv: &[f64; 3], rx: &[f64; 3]) -> ([f64; 3], f64) {
    let d = [sv[0] - rx[0], sv[1] - rx[1], sv[2] - rx[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    ([d[0] / r, d[1] / r, d[2] / r], r)
}

/// One row per solution: time, ECEF, clock, geodetic and (when present)
/// velocity.
pub fn solutions_to_navdata(sols: &[Solution]) -> Result<NavData, SolverError> {
    let col = |f: &dyn Fn(&Solution) -> f64| Row::Numeric(sols.iter().map(f).collect());
    let geo: Vec<_> = sols
        .iter()
        .map(|s| ecef_to_geodetic(&s.position()).ok())
        .collect();
    let g = |k: usize| {
        Row::Numeric(
            geo.iter()
                .map(|p| p.map_or(f64::NAN, |p| [p.lat_deg, p.lon_deg, p.alt_m][k]))
                .collect(),
        )
    };
    let mut rows = vec![
        (names::GPS_MILLIS, col(&|s| s.gps_millis)),
        (names::X_RX_M, col(&|s| s.x_rx_m)),
        (names::Y_RX_M, col(&|s| s.y_rx_m)),
        (names::Z_RX_M, col(&|s| s.z_rx_m)),
        (names::B_RX_M, col(&|s| s.b_rx_m)),
        (names::LAT_RX_DEG, g(0)),
        (names::LON_RX_DEG, g(1)),
        (names::ALT_RX_M, g(2)),
    ];
    if sols.iter().any(|s| s.velocity_mps.is_some()) {
        let v = |k: usize| move |s: &Solution| s.velocity_mps.map_or(f64::NAN, |v| v[k]);
        rows.push(("vx_rx_mps", col(&v(0))));
        rows.push(("vy_rx_mps", col(&v(1))));
        rows.push(("vz_rx_mps", col(&v(2))));
    }
    rows.push(("num_used", col(&|s| s.num_used as f64)));
    Ok(NavData::from_rows(rows)?)
}

#[cfg(test)]
pub(crate) mod test_support;
