//! RINEX 2.x / 3.x navigation messages (GPS and Galileo Keplerian sets).

use super::{field, fortran_f64, header_label, malformed, read_text, EphemerisRecord, ParseError};
use crate::constellation::Constellation;
use crate::sv_models::IonoParams;
use crate::time::{calendar_to_gps_millis, TimeScale};
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct NavFile {
    pub version: f64,
    pub records: Vec<EphemerisRecord>,
    /// GPS Klobuchar coefficients, when the header carries them.
    pub iono: Option<IonoParams>,
    pub warnings: Vec<String>,
}

pub fn parse_rinex_nav(path: impl AsRef<Path>) -> Result<NavFile, ParseError> {
    parse_rinex_nav_str(&read_text(path)?)
}

struct Layout {
    /// Column where the three epoch-line floats start.
    epoch_fields: usize,
    /// Column where the four orbit-line floats start.
    orbit_fields: usize,
}

const V2: Layout = Layout {
    epoch_fields: 22,
    orbit_fields: 3,
};
const V3: Layout = Layout {
    epoch_fields: 23,
    orbit_fields: 4,
};

pub fn parse_rinex_nav_str(text: &str) -> Result<NavFile, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut out = NavFile::default();
    let mut alpha = None;
    let mut beta = None;
    let mut v2_system = Constellation::Gps;
    let mut body_start = None;

    for (i, line) in lines.iter().enumerate() {
        let label = header_label(line);
        if label.starts_with("RINEX VERSION / TYPE") {
            out.version = fortran_f64(field(line, 0, 9))
                .ok_or_else(|| malformed(i + 1, "bad RINEX version"))?;
            let kind = field(line, 20, 21);
            if kind != "N" && kind != "G" && !field(line, 20, 40).contains("NAV") {
                return Err(malformed(i + 1, "not a navigation file"));
            }
            if kind == "G" || field(line, 20, 40).contains("GLONASS") {
                v2_system = Constellation::Glonass;
            }
        } else if label.starts_with("ION ALPHA") {
            alpha = four_coeffs(field(line, 2, 60));
        } else if label.starts_with("ION BETA") {
            beta = four_coeffs(field(line, 2, 60));
        } else if label.starts_with("IONOSPHERIC CORR") {
            match field(line, 0, 4) {
                "GPSA" => alpha = four_coeffs(field(line, 5, 60)),
                "GPSB" => beta = four_coeffs(field(line, 5, 60)),
                _ => {}
            }
        } else if label.starts_with("END OF HEADER") {
            body_start = Some(i + 1);
            break;
        }
    }
    let body_start = body_start.ok_or(ParseError::MissingEndOfHeader)?;
    if let (Some(alpha), Some(beta)) = (alpha, beta) {
        out.iono = Some(IonoParams { alpha, beta });
    }
    let major = out.version.floor() as i64;
    if !(2..=3).contains(&major) {
        return Err(ParseError::UnsupportedVersion(format!("{}", out.version)));
    }

    let mut i = body_start;
    while i < lines.len() {
        let line = lines[i];
        if line.trim().is_empty() {
            i += 1;
            continue;
        }
        let (sys, layout) = if major == 3 {
            let c = line.chars().next().unwrap_or(' ');
            let sys = Constellation::from_rinex_char(c)
                .filter(|_| c != ' ')
                .ok_or_else(|| malformed(i + 1, format!("unknown system '{c}'")))?;
            (sys, &V3)
        } else {
            (v2_system, &V2)
        };
        let orbit_lines = match sys {
            Constellation::Glonass | Constellation::Sbas => 3,
            _ => 7,
        };
        if i + orbit_lines >= lines.len() {
            return Err(malformed(lines.len(), "truncated orbit block"));
        }
        if !matches!(sys, Constellation::Gps | Constellation::Galileo) {
            out.warnings
                .push(format!("line {}: skipped unsupported {sys} record", i + 1));
            i += orbit_lines + 1;
            continue;
        }
        let block = &lines[i..=i + orbit_lines];
        match parse_record(block, i, sys, major, layout)? {
            Ok(rec) => out.records.push(rec),
            Err(msg) => out.warnings.push(format!("line {}: {msg}", i + 1)),
        }
        i += orbit_lines + 1;
    }
    Ok(out)
}

fn four_coeffs(s: &str) -> Option<[f64; 4]> {
    let v: Vec<f64> = s.split_whitespace().filter_map(fortran_f64).collect();
    (v.len() == 4).then(|| [v[0], v[1], v[2], v[3]])
}

/// Outer error: malformed text. Inner error: record parsed but violates the
/// ephemeris invariants (reported as a warning).
fn parse_record(
    block: &[&str],
    first: usize,
    sys: Constellation,
    major: i64,
    layout: &Layout,
) -> Result<Result<EphemerisRecord, String>, ParseError> {
    let head = block[0];
    let bad = |off: usize, what: &str| malformed(first + off + 1, what.to_string());
    let int = |s: &str, off: usize, what: &str| -> Result<i64, ParseError> {
        s.trim().parse::<i64>().map_err(|_| bad(off, what))
    };

    let (prn, year, rest) = if major == 3 {
        (
            int(field(head, 1, 3), 0, "bad PRN")?,
            int(field(head, 4, 8), 0, "bad year")?,
            4 + 4,
        )
    } else {
        let yy = int(field(head, 2, 5), 0, "bad year")?;
        (
            int(field(head, 0, 2), 0, "bad PRN")?,
            if yy < 80 { 2000 + yy } else { 1900 + yy },
            5,
        )
    };
    let two = |k: usize| -> Result<i64, ParseError> {
        let s = rest + k * 3;
        int(field(head, s, s + 3), 0, "bad epoch field")
    };
    let (month, day, hour, minute) = (two(0)?, two(1)?, two(2)?, two(3)?);
    let sec_str = if major == 3 {
        field(head, 20, 23)
    } else {
        field(head, 17, 22)
    };
    let second = fortran_f64(sec_str).ok_or_else(|| bad(0, "bad seconds"))?;

    let to_u32 = |v: i64| u32::try_from(v).unwrap_or(u32::MAX);
    let scale = match sys {
        Constellation::Galileo => TimeScale::Gst,
        _ => TimeScale::Gps,
    };
    let year = i32::try_from(year).map_err(|_| bad(0, "bad year"))?;
    let toc = calendar_to_gps_millis(
        scale,
        year,
        to_u32(month),
        to_u32(day),
        to_u32(hour),
        to_u32(minute),
        second,
    )
    .map_err(|_| bad(0, "invalid epoch"))?;

    let value = |line: &str, start: usize, off: usize| -> Result<f64, ParseError> {
        let s = field(line, start, start + 19);
        if s.trim().is_empty() {
            Ok(0.0)
        } else {
            fortran_f64(s).ok_or_else(|| bad(off, "malformed orbit line"))
        }
    };
    let clock: Vec<f64> = (0..3)
        .map(|k| value(head, layout.epoch_fields + 19 * k, 0))
        .collect::<Result<_, _>>()?;
    let mut orbit = [[0.0; 4]; 7];
    for (k, row) in orbit.iter_mut().enumerate() {
        let line = block[k + 1];
        if line.trim().is_empty() {
            return Err(bad(k + 1, "empty orbit line"));
        }
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = value(line, layout.orbit_fields + 19 * j, k + 1)?;
        }
    }

    let rec = EphemerisRecord {
        gnss_id: sys,
        sv_id: u32::try_from(prn).map_err(|_| bad(0, "bad PRN"))?,
        af0_s: clock[0],
        af1_s_s: clock[1],
        af2_s_s2: clock[2],
        iode: orbit[0][0] as i64,
        crs_m: orbit[0][1],
        delta_n_rad_s: orbit[0][2],
        m0_rad: orbit[0][3],
        cuc: orbit[1][0],
        ecc: orbit[1][1],
        cus: orbit[1][2],
        sqrt_a: orbit[1][3],
        toe_s: orbit[2][0],
        cic: orbit[2][1],
        omega0_rad: orbit[2][2],
        cis: orbit[2][3],
        i0_rad: orbit[3][0],
        crc_m: orbit[3][1],
        omega_rad: orbit[3][2],
        omegadot_rad_s: orbit[3][3],
        idot_rad_s: orbit[4][0],
        health: orbit[5][1] as i64,
        // Galileo carries BGD E5a/E1 in the same slot.
        tgd_s: orbit[5][2],
        toc_gps_millis: toc.0,
    };
    Ok(rec.check().map(|_| rec))
}
