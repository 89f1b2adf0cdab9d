//! Broadcast ionosphere and standard-atmosphere troposphere delays.

use crate::coords::GeodeticPosition;
use crate::time::{GpsTime, SECONDS_PER_WEEK};
use crate::SPEED_OF_LIGHT;
use std::f64::consts::PI;

/// Klobuchar coefficients as broadcast: alpha in s, s/semicircle, ...;
/// beta in s, s/semicircle, ...
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IonoParams {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
}

const NIGHT_DELAY_S: f64 = 5e-9;

/// Single-frequency (L1) ionospheric delay in seconds.
pub fn klobuchar_seconds(iono: &IonoParams, rx: &GeodeticPosition, el_deg: f64, az_deg: f64, t: GpsTime) -> f64 {
    let e = el_deg.max(0.0) / 180.0;
    let a = az_deg.to_radians();
    let phi_u = rx.lat_deg / 180.0;
    let lam_u = rx.lon_deg / 180.0;

    let psi = 0.0137 / (e + 0.11) - 0.022;
    let phi_i = (phi_u + psi * a.cos()).clamp(-0.416, 0.416);
    let lam_i = lam_u + psi * a.sin() / (phi_i * PI).cos();
    let phi_m = phi_i + 0.064 * ((lam_i - 1.617) * PI).cos();

    let tow = t.tow_s().rem_euclid(SECONDS_PER_WEEK);
    let local = (4.32e4 * lam_i + tow).rem_euclid(86_400.0);

    let poly = |c: &[f64; 4]| c[0] + phi_m * (c[1] + phi_m * (c[2] + phi_m * c[3]));
    let amp = poly(&iono.alpha).max(0.0);
    let per = poly(&iono.beta).max(72_000.0);

    let x = 2.0 * PI * (local - 50_400.0) / per;
    let f = obliquity(el_deg);
    if x.abs() < 1.57 {
        f * (NIGHT_DELAY_S + amp * (1.0 - x * x / 2.0 + x.powi(4) / 24.0))
    } else {
        f * NIGHT_DELAY_S
    }
}

/// Slant factor 1 + 16 (0.53 - E)^3 with E the elevation in semicircles.
pub(crate) fn obliquity(el_deg: f64) -> f64 {
    let e = el_deg.max(0.0) / 180.0;
    1.0 + 16.0 * (0.53 - e).powi(3)
}

/// Klobuchar delay in meters.
pub fn klobuchar_delay(iono: &IonoParams, rx: &GeodeticPosition, el_deg: f64, az_deg: f64, t: GpsTime) -> f64 {
    klobuchar_seconds(iono, rx, el_deg, az_deg, t) * SPEED_OF_LIGHT
}

const MIN_TROPO_EL_DEG: f64 = 5.0;

/// Saastamoinen zenith delay from a standard atmosphere (50 % humidity)
/// mapped with 1/sin(el); elevations below 5° use the 5° value.
pub fn tropo_delay(rx: &GeodeticPosition, el_deg: f64) -> f64 {
    let h = rx.alt_m.clamp(-500.0, 40_000.0);
    let pressure = 1013.25 * (1.0 - 2.2557e-5 * h).powf(5.2568);
    let temp = 15.0 - 6.5e-3 * h + 273.15;
    let humidity = 0.5;
    let e = 6.108 * humidity * ((17.15 * temp - 4684.0) / (temp - 38.45)).exp();
    let lat = rx.lat_deg.to_radians();
    let dry = 0.0022768 * pressure / (1.0 - 0.00266 * (2.0 * lat).cos() - 0.00028 * h / 1e3);
    let wet = 0.002277 * (1255.0 / temp + 0.05) * e;
    let el = el_deg.max(MIN_TROPO_EL_DEG).to_radians();
    (dry + wet) / el.sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::GpsTime;

    /// Straight transcription of the broadcast-model steps with all
    /// intermediate quantities held as separate variables.
    fn oracle(alpha: [f64; 4], beta: [f64; 4], lat: f64, lon: f64, el: f64, az: f64, tow: f64) -> f64 {
        let el_sc = el / 180.0;
        let earth_angle = 0.0137 / (el_sc + 0.11) - 0.022;
        let mut ipp_lat = lat / 180.0 + earth_angle * (az * PI / 180.0).cos();
        if ipp_lat > 0.416 {
            ipp_lat = 0.416;
        }
        if ipp_lat < -0.416 {
            ipp_lat = -0.416;
        }
        let ipp_lon = lon / 180.0 + earth_angle * (az * PI / 180.0).sin() / (ipp_lat * PI).cos();
        let geomag = ipp_lat + 0.064 * ((ipp_lon - 1.617) * PI).cos();
        let mut local = 43_200.0 * ipp_lon + tow;
        while local >= 86_400.0 {
            local -= 86_400.0;
        }
        while local < 0.0 {
            local += 86_400.0;
        }
        let mut amp = 0.0;
        let mut per = 0.0;
        for n in 0..4 {
            amp += alpha[n] * geomag.powi(n as i32);
            per += beta[n] * geomag.powi(n as i32);
        }
        if amp < 0.0 {
            amp = 0.0;
        }
        if per < 72_000.0 {
            per = 72_000.0;
        }
        let phase = 2.0 * PI * (local - 50_400.0) / per;
        let slant = 1.0 + 16.0 * (0.53 - el_sc).powi(3);
        let t = if phase.abs() >= 1.57 {
            slant * 5e-9
        } else {
            slant * (5e-9 + amp * (1.0 - phase.powi(2) / 2.0 + phase.powi(4) / 24.0))
        };
        t * 299_792_458.0
    }

    const ALPHA: [f64; 4] = [1.1176e-8, -7.4506e-9, -5.9605e-8, 1.1921e-7];
    const BETA: [f64; 4] = [1.1674e5, -2.2938e5, -1.3107e5, 1.0486e6];

    #[test]
    fn zenith_dc_term() {
        let rx = GeodeticPosition::new(0.0, 0.0, 0.0);
        let d = klobuchar_delay(&IonoParams::default(), &rx, 90.0, 0.0, GpsTime::from_millis(0.0));
        let expected = 5e-9 * SPEED_OF_LIGHT * (1.0 + 16.0 * 0.03f64.powi(3));
        assert!((d - expected).abs() < 1e-12);
        assert!((d - 1.4990 * 1.000432).abs() < 1e-3);
    }

    #[test]
    fn night_floor() {
        let rx = GeodeticPosition::new(37.0, -122.0, 0.0);
        let iono = IonoParams { alpha: ALPHA, beta: BETA };
        // Local time near 03:00 at the pierce point.
        let tow = 3.0 * 3600.0 + 122.0 / 180.0 * 43_200.0;
        let d = klobuchar_delay(&iono, &rx, 45.0, 0.0, GpsTime::from_week_tow(2138, tow));
        assert!((d - 5e-9 * SPEED_OF_LIGHT * obliquity(45.0)).abs() < 1e-12);
    }

    #[test]
    fn daytime_matches_oracle() {
        let rx = GeodeticPosition::new(40.0, -100.0, 300.0);
        let iono = IonoParams { alpha: ALPHA, beta: BETA };
        for &(el, az, tow) in &[(20.0, 210.0, 593_100.0), (60.0, 45.0, 432_000.0 + 20.0 * 3600.0), (5.0, 300.0, 72_000.0)] {
            let t = GpsTime::from_week_tow(2138, tow);
            let got = klobuchar_delay(&iono, &rx, el, az, t);
            let want = oracle(ALPHA, BETA, 40.0, -100.0, el, az, tow);
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
            assert!(got > 5e-9 * SPEED_OF_LIGHT);
        }
    }

    #[test]
    fn obliquity_monotone() {
        let mut prev = f64::INFINITY;
        for k in 0..=90 {
            let f = obliquity(k as f64);
            assert!(f < prev);
            prev = f;
        }
    }

    #[test]
    fn tropo_examples() {
        let sea = GeodeticPosition::new(45.0, 0.0, 0.0);
        let zenith = tropo_delay(&sea, 90.0);
        assert!((zenith - 2.4).abs() < 0.2, "{zenith}");
        assert!((tropo_delay(&sea, 30.0) / zenith - 2.0).abs() < 1e-12);
        let high = GeodeticPosition::new(45.0, 0.0, 10_000.0);
        assert!(tropo_delay(&high, 90.0) < zenith);
        assert_eq!(tropo_delay(&sea, 2.0), tropo_delay(&sea, 5.0));
    }
}
