//! RINEX 3.x observation files.

use super::{field, fortran_f64, header_label, malformed, parse_sv, read_text, ParseError};
use crate::constellation::Constellation;
use crate::navdata::{names, NavData, Row};
use crate::time::{calendar_to_gps_millis, TimeScale};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct ObsFile {
    pub version: f64,
    pub data: NavData,
    pub approx_position: Option<[f64; 3]>,
    pub warnings: Vec<String>,
}

pub fn parse_rinex_obs(path: impl AsRef<Path>) -> Result<ObsFile, ParseError> {
    parse_rinex_obs_str(&read_text(path)?)
}

/// Indices into one system's observation list for the signal we keep.
#[derive(Debug, Clone, Default)]
struct Picks {
    code: Option<usize>,
    phase: Option<usize>,
    doppler: Option<usize>,
    snr: Option<usize>,
    obs_code: String,
    count: usize,
}

fn pick(types: &[String]) -> Picks {
    let code = types
        .iter()
        .position(|t| t == "C1C")
        .or_else(|| types.iter().position(|t| t.starts_with('C')));
    let mut p = Picks {
        code,
        count: types.len(),
        ..Picks::default()
    };
    if let Some(c) = code {
        let signal = &types[c][1..];
        let find = |k: char| types.iter().position(|t| t.len() == 3 && t.starts_with(k) && &t[1..] == signal);
        p.phase = find('L');
        p.doppler = find('D');
        p.snr = find('S');
        p.obs_code = types[c].clone();
    }
    p
}

#[derive(Default)]
struct Columns {
    t: Vec<f64>,
    gnss: Vec<String>,
    sv: Vec<f64>,
    pr: Vec<f64>,
    phase: Vec<f64>,
    doppler: Vec<f64>,
    snr: Vec<f64>,
    code: Vec<String>,
}

pub fn parse_rinex_obs_str(text: &str) -> Result<ObsFile, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut version = None;
    let mut approx = None;
    let mut scale = TimeScale::Gps;
    let mut types: HashMap<Constellation, Vec<String>> = HashMap::new();
    let mut declared: HashMap<Constellation, usize> = HashMap::new();
    let mut current: Option<Constellation> = None;
    let mut body_start = None;

    for (i, line) in lines.iter().enumerate() {
        let label = header_label(line);
        if label.starts_with("RINEX VERSION / TYPE") {
            let v = fortran_f64(field(line, 0, 9))
                .ok_or_else(|| malformed(i + 1, "bad RINEX version"))?;
            if field(line, 20, 21) != "O" {
                return Err(malformed(i + 1, "not an observation file"));
            }
            version = Some(v);
        } else if label.starts_with("APPROX POSITION XYZ") {
            let v: Vec<f64> = field(line, 0, 60)
                .split_whitespace()
                .filter_map(fortran_f64)
                .collect();
            if v.len() == 3 {
                approx = Some([v[0], v[1], v[2]]);
            }
        } else if label.starts_with("SYS / # / OBS TYPES") {
            let sys_char = field(line, 0, 1);
            if !sys_char.trim().is_empty() {
                let sys = sys_char
                    .chars()
                    .next()
                    .and_then(Constellation::from_rinex_char)
                    .ok_or_else(|| malformed(i + 1, "unknown system in OBS TYPES"))?;
                let n: usize = field(line, 3, 6)
                    .trim()
                    .parse()
                    .map_err(|_| malformed(i + 1, "bad observation count"))?;
                declared.insert(sys, n);
                types.insert(sys, Vec::new());
                current = Some(sys);
            }
            let sys = current.ok_or_else(|| malformed(i + 1, "continuation without system"))?;
            let list = types.entry(sys).or_default();
            list.extend(field(line, 7, 60).split_whitespace().map(str::to_string));
        } else if label.starts_with("TIME OF FIRST OBS") {
            if let Some(s) = TimeScale::from_label(field(line, 48, 51)) {
                scale = s;
            }
        } else if label.starts_with("END OF HEADER") {
            body_start = Some(i + 1);
            break;
        }
    }
    let body_start = body_start.ok_or(ParseError::MissingEndOfHeader)?;
    let version = version.ok_or_else(|| ParseError::MissingField("RINEX VERSION / TYPE".into()))?;
    if version.floor() as i64 != 3 {
        return Err(ParseError::UnsupportedVersion(format!("{version}")));
    }
    for (sys, list) in &types {
        let n = declared.get(sys).copied().unwrap_or(0);
        if list.len() != n {
            return Err(ParseError::CountMismatch(format!(
                "{sys}: header declares {n} observation types, lists {}",
                list.len()
            )));
        }
    }
    let picks: HashMap<Constellation, Picks> = types.iter().map(|(k, v)| (*k, pick(v))).collect();

    let mut cols = Columns::default();
    let mut warnings = Vec::new();
    let mut i = body_start;
    while i < lines.len() {
        let line = lines[i];
        if line.trim().is_empty() {
            i += 1;
            continue;
        }
        if !line.starts_with('>') {
            return Err(malformed(i + 1, "expected epoch record"));
        }
        let int = |a: usize, b: usize, what: &str| -> Result<i64, ParseError> {
            field(line, a, b)
                .trim()
                .parse::<i64>()
                .map_err(|_| malformed(i + 1, what.to_string()))
        };
        let flag = int(31, 32, "bad epoch flag")?;
        let nsat = usize::try_from(int(32, 35, "bad satellite count")?)
            .map_err(|_| malformed(i + 1, "bad satellite count"))?;
        if flag > 1 {
            i += 1 + nsat;
            continue;
        }
        let to_u32 = |v: i64| u32::try_from(v).unwrap_or(u32::MAX);
        let year = i32::try_from(int(2, 6, "bad year")?).map_err(|_| malformed(i + 1, "bad year"))?;
        let second =
            fortran_f64(field(line, 18, 29)).ok_or_else(|| malformed(i + 1, "bad seconds"))?;
        let t = calendar_to_gps_millis(
            scale,
            year,
            to_u32(int(7, 9, "bad month")?),
            to_u32(int(10, 12, "bad day")?),
            to_u32(int(13, 15, "bad hour")?),
            to_u32(int(16, 18, "bad minute")?),
            second,
        )
        .map_err(|_| malformed(i + 1, "invalid epoch"))?;
        if i + nsat >= lines.len() {
            return Err(ParseError::CountMismatch(format!(
                "epoch at line {} declares {nsat} satellites, file ends early",
                i + 1
            )));
        }
        for k in 1..=nsat {
            let sat = lines[i + k];
            let (sys, prn) = parse_sv(field(sat, 0, 3))
                .ok_or_else(|| malformed(i + k + 1, "bad satellite identifier"))?;
            let Some(p) = picks.get(&sys) else {
                warnings.push(format!("line {}: no OBS TYPES for {sys}", i + k + 1));
                continue;
            };
            let Some(code) = p.code else { continue };
            let obs = |idx: Option<usize>| -> Result<f64, ParseError> {
                let Some(idx) = idx else { return Ok(f64::NAN) };
                let s = field(sat, 3 + 16 * idx, 3 + 16 * idx + 14);
                if s.trim().is_empty() {
                    Ok(f64::NAN)
                } else {
                    fortran_f64(s).ok_or_else(|| malformed(i + k + 1, "malformed observation"))
                }
            };
            if sat.len() > 3 + 16 * p.count {
                return Err(ParseError::CountMismatch(format!(
                    "line {}: more observations than the {} declared",
                    i + k + 1,
                    p.count
                )));
            }
            let pr = obs(Some(code))?;
            if pr.is_nan() {
                continue;
            }
            cols.t.push(t.0);
            cols.gnss.push(sys.as_str().to_string());
            cols.sv.push(f64::from(prn));
            cols.pr.push(pr);
            cols.phase.push(obs(p.phase)?);
            cols.doppler.push(obs(p.doppler)?);
            cols.snr.push(obs(p.snr)?);
            cols.code.push(p.obs_code.clone());
        }
        i += 1 + nsat;
    }

    let data = NavData::from_rows([
        (names::GPS_MILLIS, Row::Numeric(cols.t)),
        (names::GNSS_ID, Row::Categorical(cols.gnss)),
        (names::SV_ID, Row::Numeric(cols.sv)),
        (names::RAW_PR_M, Row::Numeric(cols.pr)),
        ("carrier_phase_cycles", Row::Numeric(cols.phase)),
        ("doppler_hz", Row::Numeric(cols.doppler)),
        ("cn0_dbhz", Row::Numeric(cols.snr)),
        ("obs_code", Row::Categorical(cols.code)),
    ])?;
    Ok(ObsFile {
        version,
        data,
        approx_position: approx,
        warnings,
    })
}
