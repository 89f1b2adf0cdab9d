//! File-format parsers. Observation-style inputs become [`NavData`] with
//! standard row names; product files become typed record lists that convert
//! to NavData on demand.

mod android;
mod clk;
mod nmea;
mod rinex_nav;
mod rinex_obs;
mod sp3;

pub use android::parse_android_raw;
pub use clk::parse_clk;
pub use nmea::{parse_nmea, parse_nmea_str, NmeaOutput};
pub use rinex_nav::{parse_rinex_nav, parse_rinex_nav_str, NavFile};
pub use rinex_obs::{parse_rinex_obs, parse_rinex_obs_str, ObsFile};
pub use sp3::{parse_sp3, parse_sp3_str};
pub use clk::parse_clk_str;
pub use android::parse_android_raw_str;

use crate::constellation::Constellation;
use crate::navdata::{names, NavData, NavDataError, Row};
use crate::time::{GpsTime, TimeError};
use std::io::Read;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing END OF HEADER")]
    MissingEndOfHeader,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("unsupported version '{0}'")]
    UnsupportedVersion(String),
    #[error("count mismatch: {0}")]
    CountMismatch(String),
    #[error("missing mandatory field '{0}'")]
    MissingField(String),
    #[error(transparent)]
    NavData(#[from] NavDataError),
    #[error(transparent)]
    Time(#[from] TimeError),
}

pub(crate) fn malformed(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        line,
        msg: msg.into(),
    }
}

/// Reads a text file, inflating gzip transparently. Invalid UTF-8 is
/// replaced so byte-level damage surfaces as a parse error, not a panic.
pub fn read_text(path: impl AsRef<Path>) -> Result<String, ParseError> {
    let bytes = std::fs::read(path)?;
    Ok(decode_bytes(&bytes)?)
}

pub(crate) fn decode_bytes(bytes: &[u8]) -> Result<String, std::io::Error> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::MultiGzDecoder::new(bytes).read_to_end(&mut out)?;
        Ok(String::from_utf8_lossy(&out).into_owned())
    } else {
        Ok(String::from_utf8_lossy(bytes).into_owned())
    }
}

/// Fixed-width column slice; out-of-range or non-boundary spans read as "".
pub(crate) fn field(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    if start >= end {
        return "";
    }
    line.get(start..end).unwrap_or("")
}

/// Parses Fortran-style floats (`D` exponents, missing leading zero).
pub(crate) fn fortran_f64(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    let v = if t.contains(['D', 'd']) {
        t.replace(['D', 'd'], "E").parse::<f64>().ok()?
    } else {
        t.parse::<f64>().ok()?
    };
    v.is_finite().then_some(v)
}

/// Header label in columns 61-80 of RINEX-style lines.
pub(crate) fn header_label(line: &str) -> &str {
    line.get(60..).map(str::trim).unwrap_or("")
}

/// One satellite's broadcast Keplerian parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct EphemerisRecord {
    pub gnss_id: Constellation,
    pub sv_id: u32,
    /// Time of ephemeris, seconds of GPS week.
    pub toe_s: f64,
    pub toc_gps_millis: f64,
    pub sqrt_a: f64,
    pub ecc: f64,
    pub i0_rad: f64,
    pub omega0_rad: f64,
    /// Argument of perigee.
    pub omega_rad: f64,
    pub m0_rad: f64,
    pub delta_n_rad_s: f64,
    pub idot_rad_s: f64,
    pub omegadot_rad_s: f64,
    pub cuc: f64,
    pub cus: f64,
    pub crc_m: f64,
    pub crs_m: f64,
    pub cic: f64,
    pub cis: f64,
    pub af0_s: f64,
    pub af1_s_s: f64,
    pub af2_s_s2: f64,
    pub tgd_s: f64,
    pub health: i64,
    pub iode: i64,
}

impl EphemerisRecord {
    pub fn toc(&self) -> GpsTime {
        GpsTime::from_millis(self.toc_gps_millis)
    }

    /// Absolute toe, resolving the week from toc.
    pub fn toe(&self) -> GpsTime {
        let toc = self.toc();
        let mut week = toc.week();
        let dt = self.toe_s - toc.tow_s();
        if dt > 302_400.0 {
            week -= 1;
        } else if dt < -302_400.0 {
            week += 1;
        }
        GpsTime::from_week_tow(week, self.toe_s)
    }

    /// Record invariants for MEO broadcast ephemerides.
    pub fn check(&self) -> Result<(), String> {
        if !(self.ecc > 0.0 && self.ecc < 0.1) {
            return Err(format!("eccentricity {} outside (0, 0.1)", self.ecc));
        }
        let a = self.sqrt_a * self.sqrt_a;
        if !(2.0e7..=3.0e7).contains(&a) {
            return Err(format!("semi-major axis {a} m outside MEO range"));
        }
        if !(0.0..604_800.0).contains(&self.toe_s) {
            return Err(format!("toe {} outside [0, 604800)", self.toe_s));
        }
        Ok(())
    }
}

/// One precise-orbit position node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sp3Node {
    pub gps_millis: f64,
    pub gnss_id: Constellation,
    pub sv_id: u32,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
    /// Satellite clock offset (s); NaN when the file flags it missing.
    pub clk_s: f64,
}

/// One precise clock node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClkNode {
    pub gps_millis: f64,
    pub gnss_id: Constellation,
    pub sv_id: u32,
    pub clk_s: f64,
    pub clk_sigma_s: Option<f64>,
}

/// Splits `G05` style identifiers.
pub(crate) fn parse_sv(token: &str) -> Option<(Constellation, u32)> {
    let mut chars = token.trim().chars();
    let sys = Constellation::from_rinex_char(chars.next()?)?;
    let prn: u32 = chars.as_str().trim().parse().ok()?;
    Some((sys, prn))
}

/// Sorts per-satellite node lists by time and drops duplicate epochs.
pub(crate) fn sort_nodes<T>(
    nodes: &mut Vec<T>,
    key: impl Fn(&T) -> (Constellation, u32, f64),
    warnings: &mut Vec<String>,
) {
    nodes.sort_by(|a, b| {
        let (ca, sa, ta) = key(a);
        let (cb, sb, tb) = key(b);
        (ca, sa).cmp(&(cb, sb)).then(ta.total_cmp(&tb))
    });
    let before = nodes.len();
    nodes.dedup_by(|a, b| key(a) == key(b));
    if nodes.len() != before {
        warnings.push(format!("dropped {} duplicate epochs", before - nodes.len()));
    }
}

fn ids_rows(gnss: &[Constellation], sv: &[u32]) -> [(&'static str, Row); 2] {
    [
        (
            names::GNSS_ID,
            Row::Categorical(gnss.iter().map(|c| c.as_str().to_string()).collect()),
        ),
        (
            names::SV_ID,
            Row::Numeric(sv.iter().map(|&s| f64::from(s)).collect()),
        ),
    ]
}

pub fn sp3_to_navdata(nodes: &[Sp3Node]) -> Result<NavData, NavDataError> {
    let col = |f: fn(&Sp3Node) -> f64| Row::Numeric(nodes.iter().map(f).collect());
    let gnss: Vec<_> = nodes.iter().map(|n| n.gnss_id).collect();
    let sv: Vec<_> = nodes.iter().map(|n| n.sv_id).collect();
    let mut rows = vec![(names::GPS_MILLIS, col(|n| n.gps_millis))];
    rows.extend(ids_rows(&gnss, &sv));
    rows.extend([
        (names::X_SV_M, col(|n| n.x_m)),
        (names::Y_SV_M, col(|n| n.y_m)),
        (names::Z_SV_M, col(|n| n.z_m)),
        (names::B_SV_M, col(|n| n.clk_s * crate::SPEED_OF_LIGHT)),
    ]);
    NavData::from_rows(rows)
}

pub fn clk_to_navdata(nodes: &[ClkNode]) -> Result<NavData, NavDataError> {
    let gnss: Vec<_> = nodes.iter().map(|n| n.gnss_id).collect();
    let sv: Vec<_> = nodes.iter().map(|n| n.sv_id).collect();
    let mut rows = vec![(
        names::GPS_MILLIS,
        Row::Numeric(nodes.iter().map(|n| n.gps_millis).collect()),
    )];
    rows.extend(ids_rows(&gnss, &sv));
    rows.push((
        names::B_SV_M,
        Row::Numeric(nodes.iter().map(|n| n.clk_s * crate::SPEED_OF_LIGHT).collect()),
    ));
    rows.push((
        "b_sv_sigma_m",
        Row::Numeric(
            nodes
                .iter()
                .map(|n| n.clk_sigma_s.map_or(f64::NAN, |s| s * crate::SPEED_OF_LIGHT))
                .collect(),
        ),
    ));
    NavData::from_rows(rows)
}

pub fn ephemerides_to_navdata(records: &[EphemerisRecord]) -> Result<NavData, NavDataError> {
    let col = |f: fn(&EphemerisRecord) -> f64| Row::Numeric(records.iter().map(f).collect());
    let gnss: Vec<_> = records.iter().map(|r| r.gnss_id).collect();
    let sv: Vec<_> = records.iter().map(|r| r.sv_id).collect();
    let mut rows = vec![(names::GPS_MILLIS, col(|r| r.toc_gps_millis))];
    rows.extend(ids_rows(&gnss, &sv));
    rows.extend([
        ("toe_s", col(|r| r.toe_s)),
        ("sqrt_a", col(|r| r.sqrt_a)),
        ("ecc", col(|r| r.ecc)),
        ("i0_rad", col(|r| r.i0_rad)),
        ("omega0_rad", col(|r| r.omega0_rad)),
        ("omega_rad", col(|r| r.omega_rad)),
        ("m0_rad", col(|r| r.m0_rad)),
        ("delta_n_rad_s", col(|r| r.delta_n_rad_s)),
        ("idot_rad_s", col(|r| r.idot_rad_s)),
        ("omegadot_rad_s", col(|r| r.omegadot_rad_s)),
        ("cuc", col(|r| r.cuc)),
        ("cus", col(|r| r.cus)),
        ("crc_m", col(|r| r.crc_m)),
        ("crs_m", col(|r| r.crs_m)),
        ("cic", col(|r| r.cic)),
        ("cis", col(|r| r.cis)),
        ("af0_s", col(|r| r.af0_s)),
        ("af1_s_s", col(|r| r.af1_s_s)),
        ("af2_s_s2", col(|r| r.af2_s_s2)),
        ("tgd_s", col(|r| r.tgd_s)),
        ("health", col(|r| r.health as f64)),
        ("iode", col(|r| r.iode as f64)),
    ]);
    NavData::from_rows(rows)
}
