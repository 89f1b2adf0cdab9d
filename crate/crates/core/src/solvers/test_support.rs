use crate::coords::{enu_to_ecef, geodetic_to_ecef, Enu, GeodeticPosition};
use crate::navdata::{names, NavData, Row};

pub const ORIGIN: (f64, f64, f64) = (37.427, -122.17, 30.0);

pub fn origin() -> GeodeticPosition {
    GeodeticPosition::new(ORIGIN.0, ORIGIN.1, ORIGIN.2)
}

/// Satellites spread in azimuth and elevation, 20 200 km up.
pub fn sky(n: usize) -> Vec<[f64; 3]> {
    let o = origin();
    (0..n)
        .map(|k| {
            let az = (k as f64 * 137.5).to_radians();
            let el = (15.0 + (k as f64 * 23.0) % 70.0).to_radians();
            let d = 2.2e7;
            let enu = Enu {
                e_m: d * el.cos() * az.sin(),
                n_m: d * el.cos() * az.cos(),
                u_m: d * el.sin(),
            };
            enu_to_ecef(&enu, &o).unwrap().as_array()
        })
        .collect()
}

pub fn truth() -> [f64; 3] {
    geodetic_to_ecef(&origin()).unwrap().as_array()
}

/// One epoch with pseudorange = range + clock + noise[k].
pub fn epoch_at(t_ms: f64, svs: &[[f64; 3]], clock_m: f64, noise: &[f64]) -> NavData {
    let rx = truth();
    let pr: Vec<f64> = svs
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let r = ((s[0] - rx[0]).powi(2) + (s[1] - rx[1]).powi(2) + (s[2] - rx[2]).powi(2)).sqrt();
            r + clock_m + noise.get(k).copied().unwrap_or(0.0)
        })
        .collect();
    let n = svs.len();
    NavData::from_rows([
        (names::GPS_MILLIS, Row::Numeric(vec![t_ms; n])),
        (names::GNSS_ID, Row::Categorical(vec!["gps".into(); n])),
        (names::SV_ID, Row::Numeric((1..=n).map(|k| k as f64).collect())),
        (names::X_SV_M, Row::Numeric(svs.iter().map(|s| s[0]).collect())),
        (names::Y_SV_M, Row::Numeric(svs.iter().map(|s| s[1]).collect())),
        (names::Z_SV_M, Row::Numeric(svs.iter().map(|s| s[2]).collect())),
        (names::CORR_PR_M, Row::Numeric(pr)),
    ])
    .unwrap()
}

pub fn epoch(svs: &[[f64; 3]], clock_m: f64, noise: &[f64]) -> NavData {
    epoch_at(1_293_494_418_000.0, svs, clock_m, noise)
}
