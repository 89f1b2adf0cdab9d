//! Per-measurement geometry and atmospheric corrections for a receiver
//! position guess.

use super::{klobuchar_delay, tropo_delay, IonoParams, SvModelError};
use crate::coords::{ecef_to_geodetic, elevation_azimuth, EcefPosition};
use crate::navdata::{names, NavData, Row};
use crate::time::GpsTime;

/// Options for [`add_corrections`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Corrections<'a> {
    /// Klobuchar coefficients; without them no ionosphere row is written.
    pub iono: Option<&'a IonoParams>,
    pub skip_tropo: bool,
}

/// Appends `el_sv_deg`, `az_sv_deg`, `iono_delay_m`, `tropo_delay_m` and
/// `corr_pr_m` = raw_pr_m + b_sv_m − iono − tropo, all evaluated at `rx`.
/// Existing rows of those names are replaced.
pub fn add_corrections(epoch: &NavData, rx: &EcefPosition, opts: Corrections) -> Result<NavData, SvModelError> {
    let geo = ecef_to_geodetic(rx)?;
    let x = epoch.numeric(names::X_SV_M)?;
    let y = epoch.numeric(names::Y_SV_M)?;
    let z = epoch.numeric(names::Z_SV_M)?;
    let t = epoch.numeric(names::GPS_MILLIS)?;
    let raw = epoch.numeric(names::RAW_PR_M)?;
    let b_sv = if epoch.contains(names::B_SV_M) {
        epoch.numeric(names::B_SV_M)?.to_vec()
    } else {
        vec![0.0; epoch.len()]
    };
    let n = epoch.len();
    let (mut el, mut az) = (vec![f64::NAN; n], vec![f64::NAN; n]);
    let (mut iono, mut tropo, mut corr) = (vec![f64::NAN; n], vec![f64::NAN; n], vec![f64::NAN; n]);
    for i in 0..n {
        let sv = EcefPosition::new(x[i], y[i], z[i]);
        let Ok((e, a)) = elevation_azimuth(&sv, rx) else {
            continue;
        };
        el[i] = e;
        az[i] = a;
        iono[i] = opts
            .iono
            .map_or(0.0, |p| klobuchar_delay(p, &geo, e, a, GpsTime::from_millis(t[i])));
        tropo[i] = if opts.skip_tropo { 0.0 } else { tropo_delay(&geo, e) };
        corr[i] = raw[i] + b_sv[i] - iono[i] - tropo[i];
    }
    let mut out = epoch.clone();
    out.insert(names::EL_SV_DEG, Row::Numeric(el))?;
    out.insert(names::AZ_SV_DEG, Row::Numeric(az))?;
    if opts.iono.is_some() {
        out.insert(names::IONO_DELAY_M, Row::Numeric(iono))?;
    } else {
        out.remove(names::IONO_DELAY_M);
    }
    if opts.skip_tropo {
        out.remove(names::TROPO_DELAY_M);
    } else {
        out.insert(names::TROPO_DELAY_M, Row::Numeric(tropo))?;
    }
    out.insert(names::CORR_PR_M, Row::Numeric(corr))?;
    Ok(out)
}
