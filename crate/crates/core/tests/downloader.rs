mod common;

use common::{fixture, gzip, MockServer, NAV, SP3, T_MS};
use gnsskit::constellation::Constellation;
use gnsskit::ephemeris_dl::{
    cache_entry, fetch_with_cache, parse_spec_config, DownloadError, Downloader, HttpTransport, Offline, ProductKind, ProductSpec,
    Products,
};
use gnsskit::time::GpsMillis;
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

fn sp3_spec(base: &str, dir: &str, priority: u32) -> ProductSpec {
    ProductSpec::new(ProductKind::Sp3, [Constellation::Gps], 1.0, priority, format!("{base}/{dir}/{{year}}/{{doy}}/orbit.sp3.gz"))
}

fn downloader(specs: Vec<ProductSpec>, cache: &std::path::Path) -> Downloader {
    Downloader {
        specs,
        cache_dir: cache.to_path_buf(),
        transport: Box::new(HttpTransport::default()),
        now: Some(GpsMillis(T_MS + 60.0 * 86_400_000.0)),
    }
}

#[test]
fn gzip_product_is_inflated_and_parsed() {
    let sp3 = std::fs::read(fixture(SP3)).unwrap();
    let server = MockServer::start(HashMap::from([("/a/2021/001/orbit.sp3.gz".to_string(), gzip(&sp3))]));
    let cache = tempfile::tempdir().unwrap();
    let dl = downloader(vec![sp3_spec(&server.base, "a", 1)], cache.path());
    let got = dl.load_or_download(GpsMillis(T_MS), &BTreeSet::from([Constellation::Gps]), ProductKind::Sp3).unwrap();
    assert_eq!(std::fs::read(&got.path).unwrap(), sp3);
    match got.products {
        Products::Sp3(nodes) => assert_eq!(nodes.len(), 97 * 12),
        other => panic!("unexpected {other:?}"),
    }
    assert!(got.failures.is_empty());
}

#[test]
fn cached_copy_needs_no_network() {
    let sp3 = std::fs::read(fixture(SP3)).unwrap();
    let server = MockServer::start(HashMap::from([("/a/2021/001/orbit.sp3.gz".to_string(), gzip(&sp3))]));
    let cache = tempfile::tempdir().unwrap();
    let spec = sp3_spec(&server.base, "a", 1);
    let t = GpsMillis(T_MS);
    assert!(!cache_entry(&spec, t, cache.path()).unwrap().verified);
    let p = fetch_with_cache(&spec, t, cache.path(), &HttpTransport::default()).unwrap();
    assert!(cache_entry(&spec, t, cache.path()).unwrap().verified);
    let again = fetch_with_cache(&spec, GpsMillis(T_MS + 3_600_000.0), cache.path(), &Offline).unwrap();
    assert_eq!(p, again);
    assert_eq!(server.hits().len(), 1);
}

#[test]
fn corrupt_cache_is_replaced() {
    let sp3 = std::fs::read(fixture(SP3)).unwrap();
    let server = MockServer::start(HashMap::from([("/a/2021/001/orbit.sp3.gz".to_string(), gzip(&sp3))]));
    let cache = tempfile::tempdir().unwrap();
    let spec = sp3_spec(&server.base, "a", 1);
    let t = GpsMillis(T_MS);
    let entry = cache_entry(&spec, t, cache.path()).unwrap();
    std::fs::create_dir_all(entry.path.parent().unwrap()).unwrap();
    std::fs::write(&entry.path, b"<html>502 bad gateway</html>").unwrap();
    fetch_with_cache(&spec, t, cache.path(), &HttpTransport::default()).unwrap();
    assert_eq!(server.hits().len(), 1);
    assert_eq!(std::fs::read(&entry.path).unwrap(), sp3);
}

#[test]
fn unverified_body_is_not_cached() {
    let server = MockServer::start(HashMap::from([("/a/2021/001/orbit.sp3.gz".to_string(), b"not an orbit".to_vec())]));
    let cache = tempfile::tempdir().unwrap();
    let spec = sp3_spec(&server.base, "a", 1);
    let err = fetch_with_cache(&spec, GpsMillis(T_MS), cache.path(), &HttpTransport::default()).unwrap_err();
    assert!(matches!(err, DownloadError::Unverified { .. }), "{err}");
    assert!(!cache_entry(&spec, GpsMillis(T_MS), cache.path()).unwrap().path.exists());
}

#[test]
fn missing_primary_falls_back() {
    let sp3 = std::fs::read(fixture(SP3)).unwrap();
    let server = MockServer::start(HashMap::from([("/b/2021/001/orbit.sp3.gz".to_string(), gzip(&sp3))]));
    let cache = tempfile::tempdir().unwrap();
    let dl = downloader(vec![sp3_spec(&server.base, "a", 1), sp3_spec(&server.base, "b", 2)], cache.path());
    let got = dl.load_or_download(GpsMillis(T_MS), &BTreeSet::from([Constellation::Gps]), ProductKind::Sp3).unwrap();
    assert_eq!(got.spec_id, "sp3_G_2");
    assert_eq!(got.failures.len(), 1);
    assert!(got.failures[0].message.contains("404"));
}

#[test]
fn every_source_failing_lists_attempts() {
    let server = MockServer::start(HashMap::new());
    let cache = tempfile::tempdir().unwrap();
    let dl = downloader(vec![sp3_spec(&server.base, "a", 1), sp3_spec(&server.base, "b", 2)], cache.path());
    match dl.load_or_download(GpsMillis(T_MS), &BTreeSet::from([Constellation::Gps]), ProductKind::Sp3) {
        Err(DownloadError::AllFailed(a)) => assert_eq!(a.len(), 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn concurrent_requests_download_once() {
    let sp3 = std::fs::read(fixture(SP3)).unwrap();
    let server = MockServer::start(HashMap::from([("/a/2021/001/orbit.sp3.gz".to_string(), gzip(&sp3))]));
    let cache = Arc::new(tempfile::tempdir().unwrap());
    let spec = sp3_spec(&server.base, "a", 1);
    let handles: Vec<_> = (0..6)
        .map(|_| {
            let (spec, cache) = (spec.clone(), cache.clone());
            std::thread::spawn(move || fetch_with_cache(&spec, GpsMillis(T_MS), cache.path(), &HttpTransport::default()).unwrap())
        })
        .collect();
    let paths: BTreeSet<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(paths.len(), 1);
    assert_eq!(server.hits().len(), 1);
}

#[test]
fn navigation_product_from_config() {
    let nav = std::fs::read(fixture(NAV)).unwrap();
    let server = MockServer::start(HashMap::from([("/nav/2021/brdc0010.21n.gz".to_string(), gzip(&nav))]));
    let specs = parse_spec_config(&format!("rinex_nav gps 0.1 1 {}/nav/{{year}}/brdc{{doy}}0.{{yy}}n.gz\n", server.base)).unwrap();
    let cache = tempfile::tempdir().unwrap();
    let got = downloader(specs, cache.path())
        .load_or_download(GpsMillis(T_MS), &BTreeSet::from([Constellation::Gps]), ProductKind::RinexNav)
        .unwrap();
    match got.products {
        Products::Nav(f) => {
            assert_eq!(f.records.len(), 12 * 7);
            assert!(f.iono.is_some());
        }
        other => panic!("unexpected {other:?}"),
    }
}
