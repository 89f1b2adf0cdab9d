#![allow(dead_code)]

use gnsskit::cli::Format;
use gnsskit::parsers;
use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    fixture("golden").join(name)
}

/// Bundled fixture, the format it should be detected as, and its golden CSV.
pub const PARSED_FIXTURES: [(&str, Format, &str); 9] = [
    ("gps_nav_2021001.rnx", Format::RinexNav, "gps_nav_2021001.csv"),
    ("gps_nav_two_sats.21n", Format::RinexNav, "gps_nav_two_sats.csv"),
    ("mixed_nav_2021001.rnx", Format::RinexNav, "mixed_nav_2021001.csv"),
    ("gps_15min_2021001.sp3", Format::Sp3, "gps_15min_2021001.csv"),
    ("gps_30s_2021001.clk", Format::Clk, "gps_30s_2021001.csv"),
    ("synthetic_obs_2021001.rnx", Format::RinexObs, "synthetic_obs_2021001.csv"),
    ("drive_2021001.nmea", Format::Nmea, "drive_2021001.csv"),
    ("android_raw_2021001.txt", Format::Android, "android_raw_2021001.csv"),
    ("synthetic_meas.csv", Format::Csv, "../synthetic_meas.csv"),
];

pub const NAV: &str = "gps_nav_2021001.rnx";
pub const SP3: &str = "gps_15min_2021001.sp3";
pub const CLK: &str = "gps_30s_2021001.clk";
pub const MEAS: &str = "synthetic_meas.csv";
pub const TRUTH: &str = "synthetic_truth.csv";

use gnsskit::coords::{enu_to_ecef, geodetic_to_ecef, Enu, GeodeticPosition};
use gnsskit::navdata::{names, NavData, Row};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

pub const T_MS: f64 = 1_293_494_418_000.0;

pub fn origin() -> GeodeticPosition {
    GeodeticPosition::new(37.427, -122.17, 30.0)
}

pub fn truth() -> [f64; 3] {
    geodetic_to_ecef(&origin()).unwrap().as_array()
}

/// `n` satellites 22 000 km away, spread in azimuth and elevation and
/// rotated by `spin` degrees.
pub fn sky(n: usize, spin: f64) -> Vec<[f64; 3]> {
    let o = origin();
    (0..n)
        .map(|k| {
            let az = (k as f64 * 137.5 + spin).to_radians();
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

pub fn range(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// One epoch of corrected pseudoranges: range + clock + noise[k].
pub fn epoch(t_ms: f64, svs: &[[f64; 3]], clock_m: f64, noise: &[f64], sigma_m: f64) -> NavData {
    let rx = truth();
    let n = svs.len();
    let pr: Vec<f64> = svs
        .iter()
        .enumerate()
        .map(|(k, s)| range(s, &rx) + clock_m + noise.get(k).copied().unwrap_or(0.0))
        .collect();
    NavData::from_rows([
        (names::GPS_MILLIS, Row::Numeric(vec![t_ms; n])),
        (names::GNSS_ID, Row::Categorical(vec!["gps".into(); n])),
        (names::SV_ID, Row::Numeric((1..=n).map(|k| k as f64).collect())),
        (names::X_SV_M, Row::Numeric(svs.iter().map(|s| s[0]).collect())),
        (names::Y_SV_M, Row::Numeric(svs.iter().map(|s| s[1]).collect())),
        (names::Z_SV_M, Row::Numeric(svs.iter().map(|s| s[2]).collect())),
        (names::CORR_PR_M, Row::Numeric(pr)),
        (names::RAW_PR_SIGMA_M, Row::Numeric(vec![sigma_m; n])),
    ])
    .unwrap()
}

/// Minimal HTTP/1.1 file server on a loopback port. Unknown paths get 404.
pub struct MockServer {
    pub base: String,
    hits: Arc<Mutex<Vec<String>>>,
}

impl MockServer {
    pub fn start(routes: HashMap<String, Vec<u8>>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&hits);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request = String::new();
                if reader.read_line(&mut request).is_err() {
                    continue;
                }
                loop {
                    let mut line = String::new();
                    match reader.read_line(&mut line) {
                        Ok(0) | Err(_) => break,
                        Ok(_) if line == "\r\n" || line == "\n" => break,
                        Ok(_) => {}
                    }
                }
                let path = request.split_whitespace().nth(1).unwrap_or("/").to_string();
                log.lock().unwrap().push(path.clone());
                let response = match routes.get(&path) {
                    Some(body) => {
                        let mut r = format!(
                            "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nContent-Type: application/octet-stream\r\nConnection: close\r\n\r\n",
                            body.len()
                        )
                        .into_bytes();
                        r.extend_from_slice(body);
                        r
                    }
                    None => b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n".to_vec(),
                };
                let _ = stream.write_all(&response);
                let _ = stream.flush();
            }
        });
        Self { base, hits }
    }

    pub fn hits(&self) -> Vec<String> {
        self.hits.lock().unwrap().clone()
    }
}

pub fn gzip(bytes: &[u8]) -> Vec<u8> {
    let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
    enc.write_all(bytes).unwrap();
    enc.finish().unwrap()
}

/// Runs the parser for `format` over `text`; errors are fine, only a
/// panic counts as a failure.
pub fn parse_as(format: Format, text: &str) {
    match format {
        Format::RinexNav => {
            if let Ok(f) = parsers::parse_rinex_nav_str(text) {
                let _ = parsers::ephemerides_to_navdata(&f.records);
            }
        }
        Format::Sp3 => {
            if let Ok(n) = parsers::parse_sp3_str(text) {
                let _ = parsers::sp3_to_navdata(&n);
            }
        }
        Format::Clk => {
            if let Ok(n) = parsers::parse_clk_str(text) {
                let _ = parsers::clk_to_navdata(&n);
            }
        }
        Format::RinexObs => {
            let _ = parsers::parse_rinex_obs_str(text);
        }
        Format::Nmea => {
            let _ = parsers::parse_nmea_str(text);
        }
        Format::Android => {
            let _ = parsers::parse_android_raw_str(text);
        }
        Format::Csv | Format::Auto => {
            let _ = gnsskit::navdata::NavData::from_csv_reader(text.as_bytes(), true);
        }
    }
}

