//! SP3-c / SP3-d precise orbit files.

use super::{field, fortran_f64, malformed, parse_sv, read_text, sort_nodes, ParseError, Sp3Node};
use crate::time::{calendar_to_gps_millis, TimeScale};
use std::path::Path;

/// Clock values at or above this magnitude (µs) flag a missing clock.
const BAD_CLOCK_US: f64 = 999_999.0;

pub fn parse_sp3(path: impl AsRef<Path>) -> Result<Vec<Sp3Node>, ParseError> {
    parse_sp3_str(&read_text(path)?)
}

fn epoch(line: &str, lineno: usize, scale: TimeScale) -> Result<f64, ParseError> {
    let int = |a: usize, b: usize| -> Result<u32, ParseError> {
        field(line, a, b)
            .trim()
            .parse::<u32>()
            .map_err(|_| malformed(lineno, "bad epoch field"))
    };
    let year = i32::try_from(int(3, 7)?).map_err(|_| malformed(lineno, "bad year"))?;
    let second = fortran_f64(field(line, 20, 31)).ok_or_else(|| malformed(lineno, "bad seconds"))?;
    calendar_to_gps_millis(scale, year, int(8, 10)?, int(11, 13)?, int(14, 16)?, int(17, 19)?, second)
        .map(|t| t.0)
        .map_err(|_| malformed(lineno, "invalid epoch"))
}

/// Kilometres to metres by shifting the decimal point in the text, so that
/// `21263.158586` becomes exactly `21263158.586`.
fn km_to_m(s: &str) -> Option<f64> {
    let t = s.trim();
    let plain = !t.is_empty()
        && t.bytes().all(|b| b.is_ascii_digit() || b == b'.' || b == b'-' || b == b'+');
    if !plain {
        return fortran_f64(t).map(|v| v * 1000.0);
    }
    let (sign, digits) = match t.as_bytes()[0] {
        b'-' => ("-", &t[1..]),
        b'+' => ("", &t[1..]),
        _ => ("", t),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let mut frac = frac.to_string();
    while frac.len() < 3 {
        frac.push('0');
    }
    let shifted = format!("{sign}{int}{}.{}", &frac[..3], &frac[3..]);
    fortran_f64(&shifted)
}

pub fn parse_sp3_str(text: &str) -> Result<Vec<Sp3Node>, ParseError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| ParseError::MissingField("SP3 header".into()))?;
    if !first.starts_with('#') {
        return Err(malformed(1, "not an SP3 file"));
    }
    let version = field(first, 1, 2);
    if version != "c" && version != "d" {
        return Err(ParseError::UnsupportedVersion(format!("SP3-{version}")));
    }
    let declared: usize = field(first, 32, 39)
        .trim()
        .parse()
        .map_err(|_| malformed(1, "bad epoch count"))?;

    let mut scale = TimeScale::Gps;
    let mut seen_time_system = false;
    let mut nodes = Vec::new();
    let mut warnings = Vec::new();
    let mut epochs = 0usize;
    let mut t = None;
    for (i, line) in lines {
        let lineno = i + 1;
        if line.starts_with("%c") && !seen_time_system {
            seen_time_system = true;
            if let Some(s) = TimeScale::from_label(field(line, 9, 12)) {
                scale = s;
            }
        } else if line.starts_with('*') {
            t = Some(epoch(line, lineno, scale)?);
            epochs += 1;
        } else if line.starts_with('P') {
            let t = t.ok_or_else(|| malformed(lineno, "position record before first epoch"))?;
            let (gnss_id, sv_id) =
                parse_sv(field(line, 1, 4)).ok_or_else(|| malformed(lineno, "bad satellite id"))?;
            let num = |a: usize, b: usize| {
                km_to_m(field(line, a, b)).ok_or_else(|| malformed(lineno, "bad position field"))
            };
            let (x, y, z) = (num(4, 18)?, num(18, 32)?, num(32, 46)?);
            if x == 0.0 && y == 0.0 && z == 0.0 {
                warnings.push(format!("line {lineno}: missing position"));
                continue;
            }
            let clk_s = match fortran_f64(field(line, 46, 60)) {
                Some(c) if c.abs() < BAD_CLOCK_US => c * 1e-6,
                _ => f64::NAN,
            };
            nodes.push(Sp3Node {
                gps_millis: t,
                gnss_id,
                sv_id,
                x_m: x,
                y_m: y,
                z_m: z,
                clk_s,
            });
        } else if line.starts_with("EOF") {
            break;
        }
    }
    if epochs != declared {
        return Err(ParseError::CountMismatch(format!(
            "header declares {declared} epochs, body has {epochs}"
        )));
    }
    sort_nodes(&mut nodes, |n| (n.gnss_id, n.sv_id, n.gps_millis), &mut warnings);
    for w in &warnings {
        log::warn!("sp3: {w}");
    }
    Ok(nodes)
}
