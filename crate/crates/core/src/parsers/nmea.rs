//! NMEA 0183 GGA/RMC logs.

use super::{read_text, ParseError};
use crate::navdata::{names, NavData, Row};
use crate::time::utc_to_gps_millis;
use chrono::{Duration, NaiveDate};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct NmeaOutput {
    pub data: NavData,
    pub bad_checksum: usize,
    pub unknown: usize,
    /// GGA fixes dropped because no RMC sentence supplied a date.
    pub undated: usize,
}

pub fn parse_nmea(path: impl AsRef<Path>) -> Result<NmeaOutput, ParseError> {
    parse_nmea_str(&read_text(path)?)
}

/// Returns the payload between `$` and `*` when the checksum matches.
pub(crate) fn verify_checksum(sentence: &str) -> Option<&str> {
    let s = sentence.trim();
    let body = s.strip_prefix('$')?;
    let (payload, sum) = body.rsplit_once('*')?;
    let expected = u8::from_str_radix(sum.get(..2)?, 16).ok()?;
    let actual = payload.bytes().fold(0u8, |acc, b| acc ^ b);
    (actual == expected).then_some(payload)
}

/// `ddmm.mmmm` (or `dddmm.mmmm`) plus hemisphere → signed decimal degrees.
pub(crate) fn dm_to_degrees(value: &str, hemi: &str) -> Option<f64> {
    let v: f64 = value.trim().parse().ok()?;
    if !v.is_finite() || v < 0.0 {
        return None;
    }
    let deg = (v / 100.0).trunc();
    let minutes = v - deg * 100.0;
    if minutes >= 60.0 {
        return None;
    }
    let d = deg + minutes / 60.0;
    match hemi.trim() {
        "N" | "E" => Some(d),
        "S" | "W" => Some(-d),
        _ => None,
    }
}

/// `hhmmss.ss` → seconds of day.
fn time_of_day(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.len() < 6 || !s.is_char_boundary(2) || !s.is_char_boundary(4) {
        return None;
    }
    let h: u32 = s[..2].parse().ok()?;
    let m: u32 = s[2..4].parse().ok()?;
    let sec: f64 = s[4..].parse().ok()?;
    if h > 23 || m > 59 || !(0.0..61.0).contains(&sec) {
        return None;
    }
    Some(f64::from(h * 3600 + m * 60) + sec)
}

fn date_ddmmyy(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if s.len() != 6 || !s.is_ascii() {
        return None;
    }
    let d: u32 = s[..2].parse().ok()?;
    let m: u32 = s[2..4].parse().ok()?;
    let y: i32 = s[4..].parse().ok()?;
    let year = if y < 80 { 2000 + y } else { 1900 + y };
    NaiveDate::from_ymd_opt(year, m, d)
}

struct Fix {
    sod: f64,
    lat: f64,
    lon: f64,
    alt: f64,
    geoid: f64,
    quality: f64,
    sats: f64,
    hdop: f64,
}

enum Sentence {
    Gga(Fix),
    Rmc(NaiveDate, f64),
}

fn num(s: Option<&&str>) -> f64 {
    s.and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .unwrap_or(f64::NAN)
}

fn parse_payload(payload: &str) -> Option<Option<Sentence>> {
    let f: Vec<&str> = payload.split(',').collect();
    let kind = f.first()?.get(2..)?;
    match kind {
        "GGA" => {
            let sod = time_of_day(f.get(1)?)?;
            let lat = dm_to_degrees(f.get(2)?, f.get(3)?)?;
            let lon = dm_to_degrees(f.get(4)?, f.get(5)?)?;
            Some(Some(Sentence::Gga(Fix {
                sod,
                lat,
                lon,
                quality: num(f.get(6)),
                sats: num(f.get(7)),
                hdop: num(f.get(8)),
                alt: num(f.get(9)),
                geoid: num(f.get(11)),
            })))
        }
        "RMC" => {
            let sod = time_of_day(f.get(1)?)?;
            let date = date_ddmmyy(f.get(9)?)?;
            Some(Some(Sentence::Rmc(date, sod)))
        }
        _ => Some(None),
    }
}

pub fn parse_nmea_str(text: &str) -> Result<NmeaOutput, ParseError> {
    let mut bad_checksum = 0;
    let mut unknown = 0;
    let mut sentences = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let Some(payload) = verify_checksum(line) else {
            bad_checksum += 1;
            continue;
        };
        match parse_payload(payload) {
            Some(Some(s)) => sentences.push(s),
            Some(None) => unknown += 1,
            None => {
                log::warn!("nmea: unparseable sentence '{}'", line.trim());
                unknown += 1;
            }
        }
    }

    // Each GGA takes the date of the nearest preceding RMC, or the first RMC
    // when none precedes it; a backwards jump in time of day rolls the date.
    let first_date = sentences.iter().find_map(|s| match s {
        Sentence::Rmc(d, sod) => Some((*d, *sod)),
        Sentence::Gga(_) => None,
    });
    let mut current = first_date;
    let mut last_sod: Option<f64> = None;
    let mut undated = 0;
    let mut rows: [Vec<f64>; 8] = Default::default();
    for s in &sentences {
        match s {
            Sentence::Rmc(d, sod) => {
                current = Some((*d, *sod));
                last_sod = Some(*sod);
            }
            Sentence::Gga(fix) => {
                let Some((mut date, _)) = current else {
                    undated += 1;
                    continue;
                };
                if let Some(prev) = last_sod {
                    if fix.sod + 43_200.0 < prev {
                        date = date.succ_opt().unwrap_or(date);
                        current = Some((date, fix.sod));
                    }
                }
                last_sod = Some(fix.sod);
                let Some(midnight) = date.and_hms_opt(0, 0, 0) else {
                    undated += 1;
                    continue;
                };
                let utc = (midnight + Duration::milliseconds((fix.sod * 1000.0).round() as i64)).and_utc();
                let Ok(t) = utc_to_gps_millis(&utc) else {
                    undated += 1;
                    continue;
                };
                let vals = [t.0, fix.lat, fix.lon, fix.alt, fix.geoid, fix.quality, fix.sats, fix.hdop];
                for (r, v) in rows.iter_mut().zip(vals) {
                    r.push(v);
                }
            }
        }
    }
    let [t, lat, lon, alt, geoid, quality, sats, hdop] = rows;
    let data = NavData::from_rows([
        (names::GPS_MILLIS, Row::Numeric(t)),
        (names::LAT_RX_DEG, Row::Numeric(lat)),
        (names::LON_RX_DEG, Row::Numeric(lon)),
        (names::ALT_RX_M, Row::Numeric(alt)),
        ("geoid_sep_m", Row::Numeric(geoid)),
        ("fix_quality", Row::Numeric(quality)),
        ("num_sats", Row::Numeric(sats)),
        ("hdop", Row::Numeric(hdop)),
    ])?;
    Ok(NmeaOutput {
        data,
        bad_checksum,
        unknown,
        undated,
    })
}
