//! Android GnssLogger `Raw` records.

use super::{read_text, ParseError};
use crate::constellation::Constellation;
use crate::navdata::{names, NavData, Row};
use crate::SPEED_OF_LIGHT;
use std::path::Path;

const NS_PER_WEEK: i128 = 604_800_000_000_000;
const NS_PER_DAY: i128 = 86_400_000_000_000;
/// GLONASS time runs UTC + 3 h; GPS leads UTC by the leap count.
const GLO_TO_GPS_NS: i128 = -3 * 3_600_000_000_000;
const BDT_TO_GPS_NS: i128 = 14_000_000_000;

const STATE_TOW_DECODED: i64 = 0x8;
const STATE_TOW_KNOWN: i64 = 0x4000;
const STATE_GLO_TOD_DECODED: i64 = 0x80;
const STATE_GLO_TOD_KNOWN: i64 = 0x8000;

const MANDATORY: [&str; 6] = [
    "TimeNanos",
    "FullBiasNanos",
    "Svid",
    "ConstellationType",
    "ReceivedSvTimeNanos",
    "State",
];

pub fn parse_android_raw(path: impl AsRef<Path>) -> Result<NavData, ParseError> {
    parse_android_raw_str(&read_text(path)?)
}

/// Android `GnssStatus` constellation enumeration.
pub fn android_constellation(code: i64) -> Option<Constellation> {
    match code {
        1 => Some(Constellation::Gps),
        2 => Some(Constellation::Sbas),
        3 => Some(Constellation::Glonass),
        4 => Some(Constellation::Qzss),
        5 => Some(Constellation::Beidou),
        6 => Some(Constellation::Galileo),
        7 => Some(Constellation::Irnss),
        _ => None,
    }
}

/// Splits a float-valued nanosecond count into integer and fractional parts.
fn split_ns(s: &str) -> Option<(i128, f64)> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i128>() {
        return Some((v, 0.0));
    }
    let v: f64 = s.parse().ok()?;
    if !v.is_finite() || v.abs() > 1e30 {
        return None;
    }
    let whole = v.trunc();
    Some((whole as i128, v - whole))
}

#[derive(Default)]
struct Columns {
    t: Vec<f64>,
    gnss: Vec<String>,
    sv: Vec<f64>,
    pr: Vec<f64>,
    sigma: Vec<f64>,
    cn0: Vec<f64>,
    rate: Vec<f64>,
}

pub fn parse_android_raw_str(text: &str) -> Result<NavData, ParseError> {
    let mut header: Option<Vec<String>> = None;
    let mut cols = Columns::default();
    let mut dropped = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(h) = line.strip_prefix('#') {
            let h = h.trim();
            if h.starts_with("Raw,") {
                let names: Vec<String> = h.split(',').map(|s| s.trim().to_string()).collect();
                for m in MANDATORY {
                    if !names.iter().any(|n| n == m) {
                        return Err(ParseError::MissingField(m.to_string()));
                    }
                }
                header = Some(names);
            }
            continue;
        }
        if !line.starts_with("Raw,") {
            continue;
        }
        let names = header
            .as_ref()
            .ok_or_else(|| ParseError::MissingField("# Raw header".into()))?;
        let values: Vec<&str> = line.split(',').collect();
        let get = |name: &str| -> Option<&str> {
            let idx = names.iter().position(|n| n == name)?;
            values.get(idx).copied().filter(|v| !v.trim().is_empty())
        };
        match record(&get) {
            Some(rec) => {
                cols.t.push(rec.0);
                cols.gnss.push(rec.1.as_str().to_string());
                cols.sv.push(rec.2);
                cols.pr.push(rec.3);
                let f = |n: &str| get(n).and_then(|v| v.trim().parse::<f64>().ok()).unwrap_or(f64::NAN);
                cols.sigma
                    .push(f("ReceivedSvTimeUncertaintyNanos") * 1e-9 * SPEED_OF_LIGHT);
                cols.cn0.push(f("Cn0DbHz"));
                cols.rate.push(f("PseudorangeRateMetersPerSecond"));
            }
            None => {
                log::debug!("android: dropped record at line {}", i + 1);
                dropped += 1;
            }
        }
    }
    if dropped > 0 {
        log::warn!("android: dropped {dropped} records without a usable time of week");
    }
    Ok(NavData::from_rows([
        (names::GPS_MILLIS, Row::Numeric(cols.t)),
        (names::GNSS_ID, Row::Categorical(cols.gnss)),
        (names::SV_ID, Row::Numeric(cols.sv)),
        (names::RAW_PR_M, Row::Numeric(cols.pr)),
        (names::RAW_PR_SIGMA_M, Row::Numeric(cols.sigma)),
        ("cn0_dbhz", Row::Numeric(cols.cn0)),
        ("pr_rate_mps", Row::Numeric(cols.rate)),
    ])?)
}

/// (gps_millis, constellation, svid, pseudorange) or None if the record is unusable.
fn record<'a>(get: &dyn Fn(&str) -> Option<&'a str>) -> Option<(f64, Constellation, f64, f64)> {
    let int = |n: &str| get(n).and_then(split_ns).map(|(w, _)| w);
    let (time_ns, _) = split_ns(get("TimeNanos")?)?;
    let (full_bias, _) = split_ns(get("FullBiasNanos")?)?;
    let (bias_w, bias_f) = get("BiasNanos").and_then(split_ns).unwrap_or((0, 0.0));
    let (off_w, off_f) = get("TimeOffsetNanos").and_then(split_ns).unwrap_or((0, 0.0));
    let svid = int("Svid")?;
    let sys = android_constellation(i64::try_from(int("ConstellationType")?).ok()?)?;
    let state = i64::try_from(int("State")?).ok()?;
    let (rx_sv_w, rx_sv_f) = split_ns(get("ReceivedSvTimeNanos")?)?;

    let gate = if sys == Constellation::Glonass {
        STATE_GLO_TOD_DECODED | STATE_GLO_TOD_KNOWN
    } else {
        STATE_TOW_DECODED | STATE_TOW_KNOWN
    };
    if state & gate == 0 {
        return None;
    }

    // Receive time in GPS time, nanoseconds since the GPS epoch.
    let rx_w = time_ns.checked_add(off_w)?.checked_sub(full_bias)?.checked_sub(bias_w)?;
    let rx_f = off_f - bias_f;
    if rx_w < 0 {
        return None;
    }
    let (period, tx_w) = match sys {
        Constellation::Glonass => (NS_PER_DAY, rx_sv_w + GLO_TO_GPS_NS + leap_ns(rx_w)),
        Constellation::Beidou => (NS_PER_WEEK, rx_sv_w + BDT_TO_GPS_NS),
        _ => (NS_PER_WEEK, rx_sv_w),
    };
    let rx_in_period = rx_w.rem_euclid(period);
    let mut diff_w = rx_in_period - tx_w.rem_euclid(period);
    let half = period * 2 / 5;
    if diff_w > half {
        diff_w -= period;
    } else if diff_w < -half {
        diff_w += period;
    }
    let diff_ns = diff_w as f64 + (rx_f - rx_sv_f);
    let pr = diff_ns * 1e-9 * SPEED_OF_LIGHT;
    let gps_millis = (rx_w / 1_000_000) as f64 + ((rx_w % 1_000_000) as f64 + rx_f) * 1e-6;
    Some((gps_millis, sys, svid as f64, pr))
}

fn leap_ns(gps_ns: i128) -> i128 {
    let ms = (gps_ns / 1_000_000) as f64;
    let utc = crate::time::gps_millis_to_utc(crate::time::GpsMillis(ms)).naive_utc();
    i128::from(crate::time::leap_seconds_at(&utc)) * 1_000_000_000
}
