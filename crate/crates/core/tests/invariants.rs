mod common;

use common::{epoch, fixture, range, sky, truth, NAV, T_MS};
use gnsskit::coords::{ecef_to_enu, enu_to_ecef, EcefPosition, Enu, GeodeticPosition};
use gnsskit::navdata::{names, NavData, Row};
use gnsskit::parsers::parse_rinex_nav;
use gnsskit::solvers::{solve_fde, solve_wls, FdeStrategy, Weighting};
use gnsskit::sv_models::{broadcast_sv_state, dop_from_geometry};
use gnsskit::time::{gps_millis_to_week_tow, week_tow_to_gps_millis, GpsMillis, GpsTime};
use gnsskit::visualize::{skyplot_xy, SKY_CENTER, SKY_RADIUS};
use proptest::prelude::*;
use std::sync::OnceLock;

fn nav_records() -> &'static [gnsskit::parsers::EphemerisRecord] {
    static RECORDS: OnceLock<Vec<gnsskit::parsers::EphemerisRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| parse_rinex_nav(fixture(NAV)).unwrap().records)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn week_tow_round_trip(week in 0i64..4000, tow_ms in 0i64..604_800_000) {
        let t = week_tow_to_gps_millis(week, tow_ms as f64 / 1000.0);
        let (w, tow) = gps_millis_to_week_tow(t).unwrap();
        prop_assert_eq!(w, week);
        prop_assert!((tow * 1000.0 - tow_ms as f64).abs() < 1e-3);
    }

    #[test]
    fn gps_time_offsets_add(ms in 0.0f64..3e12, a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let t = GpsTime::from_millis(ms);
        let ab = t.add_seconds(a).add_seconds(b);
        prop_assert!((ab.seconds_since(&t) - (a + b)).abs() < 1e-6);
    }

    #[test]
    fn enu_round_trip(lat in -89.0f64..89.0, lon in -180.0f64..180.0, e in -1e7f64..1e7, n in -1e7f64..1e7, u in -1e7f64..1e7) {
        let o = GeodeticPosition::new(lat, lon, 100.0);
        let p = enu_to_ecef(&Enu { e_m: e, n_m: n, u_m: u }, &o).unwrap();
        let back = ecef_to_enu(&p, &o).unwrap();
        prop_assert!((back.e_m - e).abs() < 1e-6 && (back.n_m - n).abs() < 1e-6 && (back.u_m - u).abs() < 1e-6);
    }

    #[test]
    fn dop_identity(n in 4usize..14, spin in 0.0f64..360.0) {
        let rx = truth();
        let d = dop_from_geometry(&sky(n, spin), &EcefPosition::new(rx[0], rx[1], rx[2])).unwrap();
        prop_assert!((d.gdop.powi(2) - d.pdop.powi(2) - d.tdop.powi(2)).abs() < 1e-9 * d.gdop.powi(2));
        prop_assert!((d.pdop.powi(2) - d.hdop.powi(2) - d.vdop.powi(2)).abs() < 1e-9 * d.pdop.powi(2));
        prop_assert!(d.gdop >= d.pdop && d.pdop >= d.hdop.max(d.vdop));
    }

    #[test]
    fn wls_recovers_noiseless_position(n in 4usize..12, spin in 0.0f64..360.0, clock in -3e5f64..3e5) {
        let sol = solve_wls(&epoch(T_MS, &sky(n, spin), clock, &[], 5.0), Weighting::Uniform, None).unwrap();
        prop_assert!(range(&sol.position().as_array(), &truth()) < 1e-4);
        prop_assert!((sol.b_rx_m - clock).abs() < 1e-4);
    }

    #[test]
    fn fde_keeps_a_solvable_set(
        n in 5usize..12,
        spin in 0.0f64..360.0,
        faults in proptest::collection::vec((0usize..12, 50.0f64..5000.0), 0..4),
        max_exclusions in 0usize..6,
    ) {
        let mut noise = vec![0.0; n];
        for (k, f) in faults {
            noise[k % n] += f;
        }
        let data = epoch(T_MS, &sky(n, spin), 10.0, &noise, 5.0);
        let out = solve_fde(&data, 20.0, max_exclusions, FdeStrategy::default()).unwrap();
        prop_assert!(out.excluded.len() <= max_exclusions);
        prop_assert!(n - out.excluded.len() >= 4);
        let flags = out.data.numeric(names::FAULT_FLAG).unwrap();
        prop_assert_eq!(flags.iter().filter(|&&f| f == 1.0).count(), out.excluded.len());
    }

    #[test]
    fn broadcast_orbit_is_continuous(idx in 0usize..84, dt_s in -7000.0f64..7000.0) {
        let eph = &nav_records()[idx];
        let t = GpsTime::from_millis(eph.toc_gps_millis + dt_s * 1000.0);
        let a = broadcast_sv_state(eph, t).unwrap().position();
        let b = broadcast_sv_state(eph, t.add_seconds(1e-3)).unwrap().position();
        prop_assert!(range(&a, &b) < 5.0);
    }

    #[test]
    fn skyplot_stays_in_disc(el in 0.0f64..=90.0, az in 0.0f64..360.0) {
        let (x, y) = skyplot_xy(el, az);
        let r = ((x - SKY_CENTER.0).powi(2) + (y - SKY_CENTER.1).powi(2)).sqrt();
        prop_assert!(r <= SKY_RADIUS + 1e-9);
        prop_assert!((r - (90.0 - el) / 90.0 * SKY_RADIUS).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip(values in proptest::collection::vec(prop_oneof![Just(f64::NAN), -1e15f64..1e15, -1e-8f64..1e-8], 1..40)) {
        let n = values.len();
        let data = NavData::from_rows([
            ("gps_millis", Row::Numeric((0..n).map(|k| T_MS + k as f64).collect())),
            ("gnss_id", Row::Categorical((0..n).map(|k| if k % 3 == 0 { String::new() } else { "gps".into() }).collect())),
            ("value", Row::Numeric(values)),
        ])
        .unwrap();
        let text = data.to_csv_string();
        let back = NavData::from_csv_reader(text.as_bytes(), true).unwrap();
        prop_assert!(back.value_eq(&data));
        prop_assert_eq!(back.to_csv_string(), text);
    }
}

#[test]
fn week_boundary_is_exact() {
    let t = week_tow_to_gps_millis(2138, 604_800.0);
    assert_eq!(gps_millis_to_week_tow(t).unwrap(), (2139, 0.0));
    assert_eq!(gps_millis_to_week_tow(GpsMillis(T_MS)).unwrap(), (2138, 432_018.0));
}
