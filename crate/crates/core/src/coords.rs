//! WGS-84 frame conversions: geodetic, ECEF and local east-north-up.

use thiserror::Error;

/// Semi-major axis (m).
pub const WGS84_A: f64 = 6_378_137.0;
/// Flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// Semi-minor axis (m).
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

#[derive(Debug, Error, PartialEq)]
pub enum CoordError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("position within {0:.1} m of Earth center")]
    NearCenter(f64),
    #[error("geodetic latitude did not converge")]
    NoConvergence,
    #[error("satellite and receiver positions coincide")]
    Coincident,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcefPosition {
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

impl EcefPosition {
    pub fn new(x_m: f64, y_m: f64, z_m: f64) -> Self {
        Self { x_m, y_m, z_m }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x_m, self.y_m, self.z_m]
    }

    pub fn norm(&self) -> f64 {
        (self.x_m * self.x_m + self.y_m * self.y_m + self.z_m * self.z_m).sqrt()
    }

    pub fn distance(&self, other: &EcefPosition) -> f64 {
        let d = [self.x_m - other.x_m, self.y_m - other.y_m, self.z_m - other.z_m];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }
}

impl From<[f64; 3]> for EcefPosition {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodeticPosition {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

impl GeodeticPosition {
    pub fn new(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Self {
        Self {
            lat_deg,
            lon_deg,
            alt_m,
        }
    }
}

/// Local east, north, up offsets in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enu {
    pub e_m: f64,
    pub n_m: f64,
    pub u_m: f64,
}

impl Enu {
    pub fn norm(&self) -> f64 {
        (self.e_m * self.e_m + self.n_m * self.n_m + self.u_m * self.u_m).sqrt()
    }
}

fn wrap_lon(lon_deg: f64) -> f64 {
    let mut l = lon_deg % 360.0;
    if l > 180.0 {
        l -= 360.0;
    } else if l <= -180.0 {
        l += 360.0;
    }
    l
}

pub fn geodetic_to_ecef(p: &GeodeticPosition) -> Result<EcefPosition, CoordError> {
    if !(p.lat_deg.is_finite() && p.lon_deg.is_finite() && p.alt_m.is_finite()) {
        return Err(CoordError::NonFinite);
    }
    if !(-90.0..=90.0).contains(&p.lat_deg) {
        return Err(CoordError::LatitudeOutOfRange(p.lat_deg));
    }
    let (slat, clat) = p.lat_deg.to_radians().sin_cos();
    let (slon, clon) = p.lon_deg.to_radians().sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * slat * slat).sqrt();
    Ok(EcefPosition {
        x_m: (n + p.alt_m) * clat * clon,
        y_m: (n + p.alt_m) * clat * slon,
        z_m: (n * (1.0 - WGS84_E2) + p.alt_m) * slat,
    })
}

/// Fixed-point iteration on geodetic latitude, started from Bowring's
/// parametric guess; stops when successive iterates differ by < 1e-12 rad.
pub fn ecef_to_geodetic(p: &EcefPosition) -> Result<GeodeticPosition, CoordError> {
    if !(p.x_m.is_finite() && p.y_m.is_finite() && p.z_m.is_finite()) {
        return Err(CoordError::NonFinite);
    }
    let r = p.norm();
    if r <= 1000.0 {
        return Err(CoordError::NearCenter(r));
    }
    let rho = p.x_m.hypot(p.y_m);
    let lon = if rho == 0.0 {
        0.0
    } else {
        wrap_lon(p.y_m.atan2(p.x_m).to_degrees())
    };

    let ep2 = WGS84_E2 / (1.0 - WGS84_E2);
    let beta = (WGS84_A * p.z_m).atan2(WGS84_B * rho);
    let (sb, cb) = beta.sin_cos();
    let mut lat = (p.z_m + ep2 * WGS84_B * sb.powi(3)).atan2(rho - WGS84_E2 * WGS84_A * cb.powi(3));

    let mut converged = false;
    for _ in 0..20 {
        let s = lat.sin();
        let n = WGS84_A / (1.0 - WGS84_E2 * s * s).sqrt();
        let h = altitude(rho, p.z_m, lat, n);
        let next = p.z_m.atan2(rho * (1.0 - WGS84_E2 * n / (n + h)));
        if (next - lat).abs() < 1e-12 {
            lat = next;
            converged = true;
            break;
        }
        lat = next;
    }
    if !converged {
        return Err(CoordError::NoConvergence);
    }
    let n = WGS84_A / (1.0 - WGS84_E2 * lat.sin().powi(2)).sqrt();
    Ok(GeodeticPosition {
        lat_deg: lat.to_degrees().clamp(-90.0, 90.0),
        lon_deg: lon,
        alt_m: altitude(rho, p.z_m, lat, n),
    })
}

fn altitude(rho: f64, z: f64, lat: f64, n: f64) -> f64 {
    let (s, c) = lat.sin_cos();
    if c.abs() > s.abs() {
        rho / c - n
    } else {
        z / s - n * (1.0 - WGS84_E2)
    }
}

/// Rows of the ECEF→ENU rotation at a geodetic origin.
pub fn enu_rotation(origin: &GeodeticPosition) -> [[f64; 3]; 3] {
    let (sl, cl) = origin.lat_deg.to_radians().sin_cos();
    let (so, co) = origin.lon_deg.to_radians().sin_cos();
    [
        [-so, co, 0.0],
        [-sl * co, -sl * so, cl],
        [cl * co, cl * so, sl],
    ]
}

pub fn ecef_to_enu(point: &EcefPosition, origin: &GeodeticPosition) -> Result<Enu, CoordError> {
    let o = geodetic_to_ecef(origin)?;
    let d = [point.x_m - o.x_m, point.y_m - o.y_m, point.z_m - o.z_m];
    let r = enu_rotation(origin);
    let dot = |row: &[f64; 3]| row[0] * d[0] + row[1] * d[1] + row[2] * d[2];
    Ok(Enu {
        e_m: dot(&r[0]),
        n_m: dot(&r[1]),
        u_m: dot(&r[2]),
    })
}

pub fn enu_to_ecef(enu: &Enu, origin: &GeodeticPosition) -> Result<EcefPosition, CoordError> {
    let o = geodetic_to_ecef(origin)?;
    let r = enu_rotation(origin);
    let v = [enu.e_m, enu.n_m, enu.u_m];
    let col = |j: usize| r[0][j] * v[0] + r[1][j] * v[1] + r[2][j] * v[2];
    Ok(EcefPosition::new(o.x_m + col(0), o.y_m + col(1), o.z_m + col(2)))
}

/// Elevation and azimuth (degrees) of `sv` seen from `rx`. Azimuth is
/// clockwise from north in [0, 360) and is 0 at the zenith.
pub fn elevation_azimuth(sv: &EcefPosition, rx: &EcefPosition) -> Result<(f64, f64), CoordError> {
    let origin = ecef_to_geodetic(rx)?;
    let enu = ecef_to_enu(sv, &origin)?;
    let range = enu.norm();
    if range == 0.0 {
        return Err(CoordError::Coincident);
    }
    let el = (enu.u_m / range).clamp(-1.0, 1.0).asin().to_degrees();
    // Horizontal components at rounding level count as the zenith.
    let az = if enu.e_m.hypot(enu.n_m) <= 1e-12 * range {
        0.0
    } else {
        let a = enu.e_m.atan2(enu.n_m).to_degrees();
        let a = if a < 0.0 { a + 360.0 } else { a };
        if a >= 360.0 {
            0.0
        } else {
            a
        }
    };
    Ok((el, az))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook closed form written against scalars, kept apart from the
    /// production path.
    fn oracle_geodetic_to_ecef(lat_deg: f64, lon_deg: f64, h: f64) -> [f64; 3] {
        let a = 6_378_137.0_f64;
        let f = 1.0 / 298.257_223_563;
        let b = a * (1.0 - f);
        let phi = lat_deg * std::f64::consts::PI / 180.0;
        let lam = lon_deg * std::f64::consts::PI / 180.0;
        // N = a^2 / sqrt(a^2 cos^2 + b^2 sin^2)
        let n = a * a / (a * a * phi.cos().powi(2) + b * b * phi.sin().powi(2)).sqrt();
        [
            (n + h) * phi.cos() * lam.cos(),
            (n + h) * phi.cos() * lam.sin(),
            (b * b / (a * a) * n + h) * phi.sin(),
        ]
    }

    #[test]
    fn equator_and_pole() {
        let e = geodetic_to_ecef(&GeodeticPosition::new(0.0, 0.0, 0.0)).unwrap();
        assert!((e.x_m - 6_378_137.0).abs() < 1e-6 && e.y_m.abs() < 1e-6 && e.z_m.abs() < 1e-6);
        let p = geodetic_to_ecef(&GeodeticPosition::new(90.0, 0.0, 0.0)).unwrap();
        assert!(p.x_m.abs() < 1e-6 && p.y_m.abs() < 1e-6);
        assert!((p.z_m - 6_356_752.314245).abs() < 1e-6);
    }

    #[test]
    fn closed_form_oracle() {
        let got = geodetic_to_ecef(&GeodeticPosition::new(37.427, -122.17, 30.0)).unwrap();
        let want = oracle_geodetic_to_ecef(37.427, -122.17, 30.0);
        for (g, w) in got.as_array().iter().zip(want) {
            assert!((g - w).abs() < 1e-6, "{g} vs {w}");
        }
    }

    #[test]
    fn rejects_bad_latitude() {
        assert_eq!(
            geodetic_to_ecef(&GeodeticPosition::new(91.0, 0.0, 0.0)),
            Err(CoordError::LatitudeOutOfRange(91.0))
        );
        assert!(matches!(
            ecef_to_geodetic(&EcefPosition::new(10.0, 0.0, 0.0)),
            Err(CoordError::NearCenter(_))
        ));
    }

    #[test]
    fn inverse_at_equator_and_pole() {
        let g = ecef_to_geodetic(&EcefPosition::new(6_378_137.0, 0.0, 0.0)).unwrap();
        assert!(g.lat_deg.abs() < 1e-12 && g.lon_deg.abs() < 1e-12 && g.alt_m.abs() < 1e-6);
        let p = ecef_to_geodetic(&EcefPosition::new(0.0, 0.0, 6_356_752.314245)).unwrap();
        assert_eq!(p.lat_deg, 90.0);
        assert_eq!(p.lon_deg, 0.0);
        assert!(p.alt_m.abs() < 1e-6);
        let s = ecef_to_geodetic(&EcefPosition::new(0.0, 0.0, -6_356_752.314245)).unwrap();
        assert_eq!(s.lat_deg, -90.0);
    }

    #[test]
    fn enu_basics() {
        let origin = GeodeticPosition::new(37.427, -122.17, 30.0);
        let o = geodetic_to_ecef(&origin).unwrap();
        let z = ecef_to_enu(&o, &origin).unwrap();
        assert!(z.norm() < 1e-9);
        let up = geodetic_to_ecef(&GeodeticPosition::new(37.427, -122.17, 130.0)).unwrap();
        let e = ecef_to_enu(&up, &origin).unwrap();
        assert!(e.e_m.abs() < 1e-6 && e.n_m.abs() < 1e-6 && (e.u_m - 100.0).abs() < 1e-6);
    }

    #[test]
    fn enu_matches_explicit_rotation() {
        let origin = GeodeticPosition::new(-33.9, 151.2, 58.0);
        let point = EcefPosition::new(-4_600_000.0, 2_600_000.0, -3_500_000.0);
        let o = oracle_geodetic_to_ecef(-33.9, 151.2, 58.0);
        let (phi, lam) = ((-33.9f64).to_radians(), 151.2f64.to_radians());
        // R = Rx(pi/2 - phi) * Rz(pi/2 + lam), composed by hand.
        let rz = [
            [(std::f64::consts::FRAC_PI_2 + lam).cos(), (std::f64::consts::FRAC_PI_2 + lam).sin(), 0.0],
            [-(std::f64::consts::FRAC_PI_2 + lam).sin(), (std::f64::consts::FRAC_PI_2 + lam).cos(), 0.0],
            [0.0, 0.0, 1.0],
        ];
        let t = std::f64::consts::FRAC_PI_2 - phi;
        let rx = [[1.0, 0.0, 0.0], [0.0, t.cos(), t.sin()], [0.0, -t.sin(), t.cos()]];
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| rx[i][k] * rz[k][j]).sum();
            }
        }
        let d = [point.x_m - o[0], point.y_m - o[1], point.z_m - o[2]];
        let want: Vec<f64> = (0..3).map(|i| (0..3).map(|k| r[i][k] * d[k]).sum()).collect();
        let got = ecef_to_enu(&point, &origin).unwrap();
        assert!((got.e_m - want[0]).abs() < 1e-6);
        assert!((got.n_m - want[1]).abs() < 1e-6);
        assert!((got.u_m - want[2]).abs() < 1e-6);
    }

    #[test]
    fn zenith_and_north_horizon() {
        let origin = GeodeticPosition::new(48.1, 11.5, 500.0);
        let rx = geodetic_to_ecef(&origin).unwrap();
        let sv = enu_to_ecef(&Enu { e_m: 0.0, n_m: 0.0, u_m: 2.0e7 }, &origin).unwrap();
        let (el, az) = elevation_azimuth(&sv, &rx).unwrap();
        assert!((el - 90.0).abs() < 1e-6);
        assert_eq!(az, 0.0);
        let north = enu_to_ecef(&Enu { e_m: 0.0, n_m: 1.0e6, u_m: 0.0 }, &origin).unwrap();
        let (el, az) = elevation_azimuth(&north, &rx).unwrap();
        assert!(el.abs() < 1e-9);
        assert!(az.abs() < 1e-9 || (az - 360.0).abs() < 1e-9);
        assert_eq!(elevation_azimuth(&rx, &rx), Err(CoordError::Coincident));
    }

    #[test]
    fn gps_altitude_angles_match_enu_oracle() {
        let origin = GeodeticPosition::new(37.427, -122.17, 30.0);
        let rx = geodetic_to_ecef(&origin).unwrap();
        let sv = EcefPosition::new(-10_000_000.0, -15_000_000.0, 19_000_000.0);
        let enu = ecef_to_enu(&sv, &ecef_to_geodetic(&rx).unwrap()).unwrap();
        let el = (enu.u_m / enu.norm()).asin().to_degrees();
        let az = enu.e_m.atan2(enu.n_m).to_degrees().rem_euclid(360.0);
        let (gel, gaz) = elevation_azimuth(&sv, &rx).unwrap();
        assert!((gel - el).abs() < 1e-9 && (gaz - az).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn round_trip(lat in -90.0f64..=90.0, lon in -179.999f64..180.0, alt in -5_000.0f64..25_000_000.0) {
            let g = GeodeticPosition::new(lat, lon, alt);
            let e = geodetic_to_ecef(&g).unwrap();
            let back = ecef_to_geodetic(&e).unwrap();
            let e2 = geodetic_to_ecef(&back).unwrap();
            prop_assert!(e.distance(&e2) < 1e-6);
            prop_assert!((back.lat_deg - lat).abs() < 1e-9);
            prop_assert!((back.alt_m - alt).abs() < 1e-6);
        }

        #[test]
        fn enu_is_isometry(lat in -89.0f64..89.0, lon in -180.0f64..180.0,
                           dx in -3e7f64..3e7, dy in -3e7f64..3e7, dz in -3e7f64..3e7) {
            let origin = GeodeticPosition::new(lat, lon, 0.0);
            let o = geodetic_to_ecef(&origin).unwrap();
            let p = EcefPosition::new(o.x_m + dx, o.y_m + dy, o.z_m + dz);
            let enu = ecef_to_enu(&p, &origin).unwrap();
            prop_assert!((enu.norm() - p.distance(&o)).abs() < 1e-6);
        }

        #[test]
        fn azimuth_flips_under_half_turn(lat in -80.0f64..80.0, lon in -180.0f64..180.0,
                                         e in -1e7f64..1e7, n in -1e7f64..1e7, u in 1e5f64..2e7) {
            prop_assume!(e.abs() > 1.0 || n.abs() > 1.0);
            let origin = GeodeticPosition::new(lat, lon, 0.0);
            let rx = geodetic_to_ecef(&origin).unwrap();
            let a = enu_to_ecef(&Enu { e_m: e, n_m: n, u_m: u }, &origin).unwrap();
            let b = enu_to_ecef(&Enu { e_m: -e, n_m: -n, u_m: u }, &origin).unwrap();
            let (_, az_a) = elevation_azimuth(&a, &rx).unwrap();
            let (_, az_b) = elevation_azimuth(&b, &rx).unwrap();
            let diff = (az_a - az_b).rem_euclid(360.0);
            prop_assert!((diff - 180.0).abs() < 1e-6);
        }
    }
}
