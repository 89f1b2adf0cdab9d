//! Timing conventions. Everything internal runs on `gps_millis`, the
//! milliseconds elapsed since 1980-01-06T00:00:00 GPS time.

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, Utc};
use std::path::Path;
use std::sync::LazyLock;
use thiserror::Error;

pub const MILLIS_PER_WEEK: i64 = 604_800_000;
pub const SECONDS_PER_WEEK: f64 = 604_800.0;
pub const MILLIS_PER_DAY: i64 = 86_400_000;
/// BDT lags GPS time by this many seconds.
pub const BDT_OFFSET_S: f64 = 14.0;

#[derive(Debug, Error)]
pub enum TimeError {
    #[error("instant {0} precedes the GPS epoch")]
    PreEpoch(String),
    #[error("negative gps_millis {0}")]
    Negative(f64),
    #[error("non-finite time value")]
    NonFinite,
    #[error("invalid calendar date/time")]
    InvalidCalendar,
    #[error("leap-second table: {0}")]
    Table(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Milliseconds since the GPS epoch.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct GpsMillis(pub f64);

impl GpsMillis {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for GpsMillis {
    fn from(v: f64) -> Self {
        GpsMillis(v)
    }
}

/// A GPS instant split into an integer millisecond and a sub-millisecond
/// remainder in seconds, so that transmit times keep nanosecond precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsTime {
    millis: f64,
    offset_s: f64,
}

impl GpsTime {
    pub fn from_millis(ms: f64) -> Self {
        let whole = ms.floor();
        Self {
            millis: whole,
            offset_s: (ms - whole) * 1e-3,
        }
    }

    pub fn from_week_tow(week: i64, tow_s: f64) -> Self {
        GpsTime::from_millis((week * MILLIS_PER_WEEK) as f64).add_seconds(tow_s)
    }

    /// Shifts by `s` seconds, renormalizing so the offset stays below one
    /// millisecond.
    pub fn add_seconds(self, s: f64) -> Self {
        let offset = self.offset_s + s;
        let k = (offset * 1e3).floor();
        Self {
            millis: self.millis + k,
            offset_s: offset - k * 1e-3,
        }
    }

    /// `self - other` in seconds.
    pub fn seconds_since(&self, other: &GpsTime) -> f64 {
        (self.millis - other.millis) * 1e-3 + (self.offset_s - other.offset_s)
    }

    pub fn to_millis(&self) -> f64 {
        self.millis + self.offset_s * 1e3
    }

    /// GPS week number (may be negative before the epoch).
    pub fn week(&self) -> i64 {
        (self.millis as i64).div_euclid(MILLIS_PER_WEEK)
    }

    /// Seconds into the GPS week.
    pub fn tow_s(&self) -> f64 {
        (self.millis as i64).rem_euclid(MILLIS_PER_WEEK) as f64 * 1e-3 + self.offset_s
    }
}

impl From<GpsMillis> for GpsTime {
    fn from(t: GpsMillis) -> Self {
        GpsTime::from_millis(t.0)
    }
}

impl From<f64> for GpsTime {
    fn from(t: f64) -> Self {
        GpsTime::from_millis(t)
    }
}

pub fn gps_epoch() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(1980, 1, 6)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid epoch")
}

/// Cumulative GPS−UTC offsets keyed by the UTC date they took effect.
#[derive(Debug, Clone, PartialEq)]
pub struct LeapSecondTable {
    entries: Vec<(NaiveDate, i64)>,
}

const BUILTIN_LEAPS: [(i32, u32, u32); 18] = [
    (1981, 7, 1),
    (1982, 7, 1),
    (1983, 7, 1),
    (1985, 7, 1),
    (1988, 1, 1),
    (1990, 1, 1),
    (1991, 1, 1),
    (1992, 7, 1),
    (1993, 7, 1),
    (1994, 7, 1),
    (1996, 1, 1),
    (1997, 7, 1),
    (1999, 1, 1),
    (2006, 1, 1),
    (2009, 1, 1),
    (2012, 7, 1),
    (2015, 7, 1),
    (2017, 1, 1),
];

static BUILTIN: LazyLock<LeapSecondTable> = LazyLock::new(LeapSecondTable::builtin);

impl LeapSecondTable {
    /// Leap seconds from 1981-07-01 (GPS−UTC 1 s) to 2017-01-01 (18 s).
    pub fn builtin() -> Self {
        let entries = BUILTIN_LEAPS
            .iter()
            .zip(1..)
            .map(|(&(y, m, d), off)| (NaiveDate::from_ymd_opt(y, m, d).expect("table date"), off))
            .collect();
        Self { entries }
    }

    pub fn new(entries: Vec<(NaiveDate, i64)>) -> Result<Self, TimeError> {
        for w in entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(TimeError::Table(format!("dates not increasing at {}", w[1].0)));
            }
            if w[1].1 != w[0].1 + 1 {
                return Err(TimeError::Table(format!("offset must grow by 1 at {}", w[1].0)));
            }
        }
        if let Some(first) = entries.first() {
            if first.1 != 1 {
                return Err(TimeError::Table("first cumulative offset must be 1".into()));
            }
        }
        Ok(Self { entries })
    }

    /// Built-in table extended with `YYYY-MM-DD <gps_minus_utc>` lines.
    /// Lines repeating a built-in date must agree with it.
    pub fn with_overrides(text: &str) -> Result<Self, TimeError> {
        let mut entries = Self::builtin().entries;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let bad = || TimeError::Table(format!("line {}: expected 'YYYY-MM-DD <offset>'", lineno + 1));
            let date = parts
                .next()
                .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
                .ok_or_else(bad)?;
            let off: i64 = parts.next().and_then(|o| o.parse().ok()).ok_or_else(bad)?;
            match entries.iter().find(|(d, _)| *d == date) {
                Some(&(_, existing)) if existing != off => {
                    return Err(TimeError::Table(format!(
                        "line {}: {date} conflicts with built-in offset {existing}",
                        lineno + 1
                    )))
                }
                Some(_) => {}
                None => entries.push((date, off)),
            }
        }
        entries.sort();
        Self::new(entries)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TimeError> {
        Self::with_overrides(&std::fs::read_to_string(path)?)
    }

    pub fn entries(&self) -> &[(NaiveDate, i64)] {
        &self.entries
    }

    /// GPS−UTC in seconds in effect at a UTC instant.
    pub fn offset_at_utc(&self, utc: &NaiveDateTime) -> i64 {
        self.entries
            .iter()
            .take_while(|(d, _)| d.and_hms_opt(0, 0, 0).is_some_and(|start| start <= *utc))
            .last()
            .map_or(0, |&(_, off)| off)
    }

    pub fn utc_to_gps_millis(&self, utc: &DateTime<Utc>) -> Result<GpsMillis, TimeError> {
        let naive = utc.naive_utc();
        let since = naive - gps_epoch();
        if since < Duration::zero() {
            return Err(TimeError::PreEpoch(naive.to_string()));
        }
        let ns = since.num_nanoseconds().ok_or(TimeError::InvalidCalendar)?;
        let whole_ms = ns.div_euclid(1_000_000);
        let frac_ms = ns.rem_euclid(1_000_000) as f64 * 1e-6;
        let leap_ms = self.offset_at_utc(&naive) * 1000;
        Ok(GpsMillis((whole_ms + leap_ms) as f64 + frac_ms))
    }

    /// Inverse of [`Self::utc_to_gps_millis`]. Instants inside an inserted
    /// leap second land in the first second of the following UTC minute.
    pub fn gps_millis_to_utc(&self, t: GpsMillis) -> DateTime<Utc> {
        let whole = t.0.floor();
        let frac_ns = ((t.0 - whole) * 1e6).round() as i64;
        let g = whole as i64;
        let epoch = gps_epoch();
        let date_ms = |d: &NaiveDate| {
            (d.and_hms_opt(0, 0, 0).expect("midnight") - epoch).num_milliseconds()
        };
        let mut utc_ms = g;
        let mut prev_off = 0;
        for (date, off) in &self.entries {
            let start = date_ms(date);
            if g >= start + off * 1000 {
                utc_ms = g - off * 1000;
            } else if g >= start + prev_off * 1000 {
                utc_ms = g - prev_off * 1000;
                break;
            } else {
                break;
            }
            prev_off = *off;
        }
        let naive = epoch + Duration::milliseconds(utc_ms) + Duration::nanoseconds(frac_ns);
        DateTime::from_naive_utc_and_offset(naive, Utc)
    }
}

pub fn utc_to_gps_millis(utc: &DateTime<Utc>) -> Result<GpsMillis, TimeError> {
    BUILTIN.utc_to_gps_millis(utc)
}

pub fn gps_millis_to_utc(t: GpsMillis) -> DateTime<Utc> {
    BUILTIN.gps_millis_to_utc(t)
}

/// Leap offset (GPS−UTC seconds) from the built-in table.
pub fn leap_seconds_at(utc: &NaiveDateTime) -> i64 {
    BUILTIN.offset_at_utc(utc)
}

pub fn gps_millis_to_week_tow(t: GpsMillis) -> Result<(i64, f64), TimeError> {
    if !t.0.is_finite() {
        return Err(TimeError::NonFinite);
    }
    if t.0 < 0.0 {
        return Err(TimeError::Negative(t.0));
    }
    let week = (t.0 / MILLIS_PER_WEEK as f64).floor();
    let rem = t.0 - week * MILLIS_PER_WEEK as f64;
    Ok((week as i64, rem / 1000.0))
}

pub fn week_tow_to_gps_millis(week: i64, tow_s: f64) -> GpsMillis {
    GpsMillis((week * MILLIS_PER_WEEK) as f64 + tow_s * 1000.0)
}

/// Time scale a calendar timestamp is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScale {
    Gps,
    /// Galileo system time, steered to GPS.
    Gst,
    /// BeiDou time, GPS − 14 s.
    Bdt,
    /// GLONASS time, UTC + 3 h.
    Glo,
    Utc,
}

impl TimeScale {
    /// Parses a RINEX/SP3 time-system label.
    pub fn from_label(label: &str) -> Option<Self> {
        match label.trim() {
            "GPS" | "QZS" | "IRN" => Some(TimeScale::Gps),
            "GAL" | "GST" => Some(TimeScale::Gst),
            "BDT" | "BDS" => Some(TimeScale::Bdt),
            "GLO" => Some(TimeScale::Glo),
            "UTC" => Some(TimeScale::Utc),
            _ => None,
        }
    }
}

/// Converts a calendar timestamp in `scale` to gps_millis.
pub fn calendar_to_gps_millis(
    scale: TimeScale,
    year: i32,
    month: u32,
    day: u32,
    hour: u32,
    minute: u32,
    second: f64,
) -> Result<GpsMillis, TimeError> {
    if !(0.0..61.0).contains(&second) || hour > 23 || minute > 59 {
        return Err(TimeError::InvalidCalendar);
    }
    let date = NaiveDate::from_ymd_opt(year, month, day).ok_or(TimeError::InvalidCalendar)?;
    let midnight = date.and_hms_opt(0, 0, 0).ok_or(TimeError::InvalidCalendar)?;
    let day_ms = (midnight - gps_epoch()).num_milliseconds();
    let sod_ms = (hour as i64 * 3600 + minute as i64 * 60) * 1000;
    let whole_s = second.floor();
    let sec_ms = whole_s as i64 * 1000;
    let frac_ms = (second - whole_s) * 1000.0;
    let base = (day_ms + sod_ms + sec_ms) as f64 + frac_ms;
    match scale {
        TimeScale::Gps | TimeScale::Gst => Ok(GpsMillis(base)),
        TimeScale::Bdt => Ok(GpsMillis(base + BDT_OFFSET_S * 1000.0)),
        TimeScale::Utc | TimeScale::Glo => {
            let shift = if scale == TimeScale::Glo { 3 * 3600 * 1000 } else { 0 };
            let utc_ms = base - shift as f64;
            let naive = gps_epoch()
                + Duration::milliseconds(utc_ms.floor() as i64);
            Ok(GpsMillis(utc_ms + (leap_seconds_at(&naive) * 1000) as f64))
        }
    }
}

/// Calendar date (year, month, day) and day of year of a gps_millis value,
/// read on the GPS time scale.
pub fn gps_calendar_date(t: GpsMillis) -> (i32, u32, u32, u32) {
    use chrono::Datelike;
    let days = (t.0 / MILLIS_PER_DAY as f64).floor() as i64;
    let date = gps_epoch().date() + Duration::days(days);
    (date.year(), date.month(), date.day(), date.ordinal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn utc(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, mo, d, h, mi, s).unwrap()
    }

    #[test]
    fn epoch_is_zero() {
        assert_eq!(utc_to_gps_millis(&utc(1980, 1, 6, 0, 0, 0)).unwrap(), GpsMillis(0.0));
        assert_eq!(utc_to_gps_millis(&utc(1980, 1, 6, 0, 0, 1)).unwrap(), GpsMillis(1000.0));
        assert_eq!(gps_millis_to_utc(GpsMillis(0.0)), utc(1980, 1, 6, 0, 0, 0));
    }

    #[test]
    fn new_year_2021() {
        // 14971 days from the epoch plus 18 leap seconds.
        let expected = 14_971.0 * 86_400_000.0 + 18_000.0;
        assert_eq!(expected, 1_293_494_418_000.0);
        let t = utc_to_gps_millis(&utc(2021, 1, 1, 0, 0, 0)).unwrap();
        assert_eq!(t.0, expected);
        assert_eq!(gps_millis_to_utc(t), utc(2021, 1, 1, 0, 0, 0));
    }

    #[test]
    fn pre_epoch_rejected() {
        assert!(matches!(
            utc_to_gps_millis(&utc(1980, 1, 5, 23, 59, 59)),
            Err(TimeError::PreEpoch(_))
        ));
    }

    #[test]
    fn week_tow_examples() {
        assert_eq!(gps_millis_to_week_tow(GpsMillis(0.0)).unwrap(), (0, 0.0));
        assert_eq!(gps_millis_to_week_tow(GpsMillis(604_800_000.0)).unwrap(), (1, 0.0));
        // 2021-01-01 is a Friday: 5 days plus 18 leap seconds into week 2138.
        assert_eq!(
            gps_millis_to_week_tow(GpsMillis(1_293_494_418_000.0)).unwrap(),
            (2138, 432_018.0)
        );
        assert!(gps_millis_to_week_tow(GpsMillis(-1.0)).is_err());
        assert_eq!(week_tow_to_gps_millis(2138, 432_018.0).0, 1_293_494_418_000.0);
    }

    #[test]
    fn leap_boundary_maps_into_following_minute() {
        // 2017-01-01T00:00:00 UTC is GPS-UTC=18; the inserted second is the
        // GPS second just before it.
        let after = utc_to_gps_millis(&utc(2017, 1, 1, 0, 0, 0)).unwrap();
        let before = utc_to_gps_millis(&utc(2016, 12, 31, 23, 59, 59)).unwrap();
        assert_eq!(after.0 - before.0, 2000.0);
        let inside = GpsMillis(before.0 + 1500.0);
        let mapped = gps_millis_to_utc(inside);
        assert_eq!(mapped.naive_utc().date(), NaiveDate::from_ymd_opt(2017, 1, 1).unwrap());
        assert!(mapped >= utc(2017, 1, 1, 0, 0, 0) && mapped < utc(2017, 1, 1, 0, 0, 1));
    }

    #[test]
    fn table_validation() {
        let t = LeapSecondTable::builtin();
        assert_eq!(t.entries().len(), 18);
        assert_eq!(t.entries().last().unwrap().1, 18);
        let bad = vec![
            (NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(), 1),
            (NaiveDate::from_ymd_opt(1999, 1, 1).unwrap(), 2),
        ];
        assert!(LeapSecondTable::new(bad).is_err());
        let ext = LeapSecondTable::with_overrides("# future\n2030-01-01 19\n").unwrap();
        assert_eq!(ext.entries().len(), 19);
        assert!(LeapSecondTable::with_overrides("2017-01-01 17\n").is_err());
        assert!(LeapSecondTable::with_overrides("2030-01-01 20\n").is_err());
        let late = utc(2031, 1, 1, 0, 0, 0);
        assert_eq!(
            ext.utc_to_gps_millis(&late).unwrap().0 - utc_to_gps_millis(&late).unwrap().0,
            1000.0
        );
    }

    #[test]
    fn scales() {
        let gps = calendar_to_gps_millis(TimeScale::Gps, 2021, 1, 1, 0, 0, 0.0).unwrap();
        assert_eq!(gps.0, 14_971.0 * 86_400_000.0);
        let bdt = calendar_to_gps_millis(TimeScale::Bdt, 2021, 1, 1, 0, 0, 0.0).unwrap();
        assert_eq!(bdt.0 - gps.0, 14_000.0);
        let u = calendar_to_gps_millis(TimeScale::Utc, 2021, 1, 1, 0, 0, 0.0).unwrap();
        assert_eq!(u.0 - gps.0, 18_000.0);
        let glo = calendar_to_gps_millis(TimeScale::Glo, 2021, 1, 1, 3, 0, 0.0).unwrap();
        assert_eq!(glo.0, u.0);
        assert!(calendar_to_gps_millis(TimeScale::Gps, 2021, 2, 30, 0, 0, 0.0).is_err());
        assert_eq!(gps_calendar_date(gps), (2021, 1, 1, 1));
    }

    #[test]
    fn split_time_keeps_nanoseconds() {
        let t = GpsTime::from_millis(1_293_494_418_000.0);
        let tx = t.add_seconds(-0.070_123_456_789);
        assert!((t.seconds_since(&tx) - 0.070_123_456_789).abs() < 1e-15);
        assert_eq!(t.week(), 2138);
        assert_eq!(t.tow_s(), 432_018.0);
        let w = GpsTime::from_week_tow(2138, 432_018.5);
        assert!((w.seconds_since(&t) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn week_tow_inverse(ms in 0i64..3_000_000_000_000) {
            let t = GpsMillis(ms as f64);
            let (w, tow) = gps_millis_to_week_tow(t).unwrap();
            prop_assert!((0.0..604_800.0).contains(&tow));
            prop_assert_eq!(week_tow_to_gps_millis(w, tow), t);
        }

        #[test]
        fn utc_round_trip(ms in 347_155_200_000i64..2_082_758_400_000) {
            // 1981-01-01 .. 2036-01-01 in Unix milliseconds.
            let u = DateTime::<Utc>::from_timestamp_millis(ms).unwrap();
            let g = utc_to_gps_millis(&u).unwrap();
            prop_assert_eq!(gps_millis_to_utc(g), u);
        }

        #[test]
        fn monotone(a in 400_000_000_000i64..1_766_000_000_000, d in 0i64..10_000_000) {
            let ua = DateTime::<Utc>::from_timestamp_millis(a).unwrap();
            let ub = DateTime::<Utc>::from_timestamp_millis(a + d).unwrap();
            prop_assert!(utc_to_gps_millis(&ua).unwrap() <= utc_to_gps_millis(&ub).unwrap());
        }
    }
}
