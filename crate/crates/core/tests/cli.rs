mod common;

use common::{fixture, golden, gzip, MockServer, MEAS, NAV, SP3};
use std::collections::HashMap;
use std::process::{Command, Output};

fn gnsskit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnsskit"))
        .args(args)
        .env("GNSSKIT_CACHE", std::env::temp_dir().join("gnsskit-cli-test-unused"))
        .output()
        .unwrap()
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(gnsskit(&["--help"]).status.code(), Some(0));
    assert_eq!(gnsskit(&["solve"]).status.code(), Some(1));
    assert_eq!(gnsskit(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let missing = gnsskit(&["parse", "/nonexistent/file.rnx", "-o", path(&out)]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
}

#[test]
fn parse_writes_golden_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (name, gold) in [(NAV, "gps_nav_2021001.csv"), ("drive_2021001.nmea", "drive_2021001.csv")] {
        let out = dir.path().join(gold);
        let run = gnsskit(&["parse", path(&fixture(name)), "-o", path(&out)]);
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
        assert_eq!(std::fs::read_to_string(&out).unwrap(), std::fs::read_to_string(golden(gold)).unwrap());
    }
}

#[test]
fn explicit_format_overrides_detection() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sp3.csv");
    let run = gnsskit(&["parse", path(&fixture(SP3)), "--format", "sp3", "-o", path(&out)]);
    assert_eq!(run.status.code(), Some(0));
    let wrong = gnsskit(&["parse", path(&fixture(SP3)), "--format", "clk", "-o", path(&out)]);
    assert_ne!(wrong.status.code(), Some(0));
}

#[test]
fn dop_prints_one_line_per_epoch() {
    let run = gnsskit(&["dop", path(&fixture(MEAS)), "--nav", path(&fixture(NAV)), "--offline"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let text = String::from_utf8(run.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gps_millis,gdop,pdop,hdop,vdop,tdop"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 30);
    for r in &rows {
        let (gdop, pdop, hdop, vdop, tdop) = (r[1], r[2], r[3], r[4], r[5]);
        assert!((gdop * gdop - (pdop * pdop + tdop * tdop)).abs() < 1e-4);
        assert!((pdop * pdop - (hdop * hdop + vdop * vdop)).abs() < 1e-4);
        assert!(gdop > 1.0 && gdop < 10.0);
    }
}

#[test]
fn offline_without_products_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.csv");
    let run = gnsskit(&["solve", path(&fixture(MEAS)), "--offline", "-o", path(&out)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn ekf_solution_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.csv");
    let run = gnsskit(&["solve", path(&fixture(MEAS)), "--method", "ekf", "--nav", path(&fixture(NAV)), "--offline", "-o", path(&sol)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&sol).unwrap();
    assert!(text.lines().next().unwrap().starts_with("gps_millis,"));
    let svg = dir.path().join("b.svg");
    let run = gnsskit(&["plot", path(&sol), "--y", "b_rx_m", "-o", path(&svg)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    roxmltree::Document::parse(&std::fs::read_to_string(&svg).unwrap()).unwrap();
}

#[test]
fn fetch_ephemeris_from_configured_source() {
    let sp3 = std::fs::read(fixture(SP3)).unwrap();
    let server = MockServer::start(HashMap::from([("/p/2021/001/orbit.sp3.gz".to_string(), gzip(&sp3))]));
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sources.txt");
    std::fs::write(&config, format!("# test mirror\nsp3 gps 1 1 {}/p/{{year}}/{{doy}}/orbit.sp3.gz\n", server.base)).unwrap();
    let cache = dir.path().join("cache");
    let args = ["fetch-ephemeris", "--time", "2021-01-01T01:00:00Z", "--config", path(&config), "--cache-dir", path(&cache)];
    let run = gnsskit(&args);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let printed = String::from_utf8(run.stdout).unwrap();
    let cached = std::path::PathBuf::from(printed.trim());
    assert!(cached.starts_with(&cache));
    assert!(cached.exists());
    assert_eq!(server.hits().len(), 1);

    assert_eq!(gnsskit(&args).status.code(), Some(0));
    assert_eq!(server.hits().len(), 1);

    let miss = gnsskit(&["fetch-ephemeris", "--time", "2021-01-05T01:00:00Z", "--config", path(&config), "--cache-dir", path(&cache)]);
    assert_eq!(miss.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&miss.stderr).contains("404"));
}
