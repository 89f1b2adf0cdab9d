//! Picks an ephemeris source from the request time and constellations,
//! downloads it once into a local cache and parses it.

mod spec;
mod transport;

pub use spec::{default_specs, expand_template, parse_spec_config, select_products, ProductKind, ProductSpec};
pub use transport::{HttpTransport, Offline, Recording, Transport};

use crate::constellation::Constellation;
use crate::parsers::{self, ClkNode, NavFile, ParseError, Sp3Node};
use crate::time::{gps_calendar_date, utc_to_gps_millis, GpsMillis};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

pub const CACHE_ENV: &str = "GNSSKIT_CACHE";

#[derive(Debug, Error)]
pub enum DownloadError {
    #[error("no {kind} source covers {constellations}")]
    NoCoverage { kind: ProductKind, constellations: String },
    #[error("template: {0}")]
    Template(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("GET {url} returned HTTP {status}")]
    Http { url: String, status: u16 },
    #[error("GET {url} failed: {msg}")]
    Network { url: String, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{url}: downloaded file failed verification")]
    Unverified { url: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("all sources failed: {}", join_attempts(.0))]
    AllFailed(Vec<Attempt>),
}

/// One failed source during `load_or_download`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub spec_id: String,
    pub message: String,
}

impl fmt::Display for Attempt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.spec_id, self.message)
    }
}

fn join_attempts(a: &[Attempt]) -> String {
    a.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub path: PathBuf,
    pub verified: bool,
}

#[derive(Debug)]
pub enum Products {
    Nav(NavFile),
    Sp3(Vec<Sp3Node>),
    Clk(Vec<ClkNode>),
}

#[derive(Debug)]
pub struct Download {
    pub products: Products,
    pub path: PathBuf,
    pub spec_id: String,
    /// Sources tried and failed before this one.
    pub failures: Vec<Attempt>,
}

/// `--cache-dir` if given, else `$GNSSKIT_CACHE`, else `~/.cache/gnsskit`.
pub fn resolve_cache_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(CACHE_ENV).filter(|p| !p.is_empty()) {
        return PathBuf::from(p);
    }
    match std::env::var_os("HOME") {
        Some(home) => PathBuf::from(home).join(".cache").join("gnsskit"),
        None => PathBuf::from(".gnsskit-cache"),
    }
}

fn file_name(url: &str) -> String {
    let last = url.rsplit('/').next().unwrap_or("product");
    let last = last.split(['?', '#']).next().unwrap_or(last);
    let stem = last.strip_suffix(".gz").unwrap_or(last);
    if stem.is_empty() {
        "product".into()
    } else {
        stem.to_string()
    }
}

/// Cache location for (kind, source, date).
pub fn cache_entry_path(spec: &ProductSpec, t: GpsMillis, cache_dir: &Path) -> Result<PathBuf, DownloadError> {
    let url = spec.expand(t)?;
    let (year, _, _, doy) = gps_calendar_date(t);
    Ok(cache_dir
        .join(spec.kind.as_str())
        .join(&spec.id)
        .join(format!("{year:04}_{doy:03}"))
        .join(file_name(&url)))
}

/// Non-empty and starts with the header the kind requires.
pub fn verify_product(kind: ProductKind, bytes: &[u8]) -> bool {
    if bytes.is_empty() {
        return false;
    }
    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(8192)]);
    match kind {
        ProductKind::Sp3 => head.starts_with("#c") || head.starts_with("#d"),
        ProductKind::RinexNav | ProductKind::Clk => head
            .lines()
            .next()
            .is_some_and(|l| l.get(60..).is_some_and(|lbl| lbl.starts_with("RINEX VERSION"))),
    }
}

pub fn cache_entry(spec: &ProductSpec, t: GpsMillis, cache_dir: &Path) -> Result<CacheEntry, DownloadError> {
    let path = cache_entry_path(spec, t, cache_dir)?;
    let verified = read_head(&path).is_some_and(|b| verify_product(spec.kind, &b));
    Ok(CacheEntry { path, verified })
}

fn read_head(path: &Path) -> Option<Vec<u8>> {
    let mut buf = Vec::new();
    std::fs::File::open(path).ok()?.take(8192).read_to_end(&mut buf).ok()?;
    Some(buf)
}

fn key_lock(path: &Path) -> Arc<Mutex<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>> = OnceLock::new();
    let mut map = LOCKS.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    map.entry(path.to_path_buf()).or_default().clone()
}

fn inflate(bytes: Vec<u8>, url: &str) -> Result<Vec<u8>, DownloadError> {
    if !bytes.starts_with(&[0x1f, 0x8b]) {
        return Ok(bytes);
    }
    let mut out = Vec::new();
    flate2::read::MultiGzDecoder::new(bytes.as_slice())
        .read_to_end(&mut out)
        .map_err(|e| DownloadError::Network { url: url.to_string(), msg: format!("gzip: {e}") })?;
    Ok(out)
}

/// Local path of the product for `t`, downloading it when no verified copy
/// is cached. Concurrent callers for the same key download at most once.
pub fn fetch_with_cache(
    spec: &ProductSpec,
    t: GpsMillis,
    cache_dir: &Path,
    transport: &dyn Transport,
) -> Result<PathBuf, DownloadError> {
    let path = cache_entry_path(spec, t, cache_dir)?;
    let lock = key_lock(&path);
    let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    if cache_entry(spec, t, cache_dir)?.verified {
        log::debug!("cache hit {}", path.display());
        return Ok(path);
    }
    let url = spec.expand(t)?;
    log::info!("downloading {url}");
    let headers: Vec<(String, String)> = spec.header.iter().cloned().collect();
    let body = inflate(transport.get(&url, &headers)?, &url)?;
    if !verify_product(spec.kind, &body) {
        return Err(DownloadError::Unverified { url });
    }
    let io = |source| DownloadError::Io { path: path.clone(), source };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let part = path.with_extension("part");
    let mut f = std::fs::File::create(&part).map_err(io)?;
    f.write_all(&body).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    std::fs::rename(&part, &path).map_err(io)?;
    Ok(path)
}

fn parse_product(kind: ProductKind, path: &Path) -> Result<Products, ParseError> {
    Ok(match kind {
        ProductKind::RinexNav => Products::Nav(parsers::parse_rinex_nav(path)?),
        ProductKind::Sp3 => Products::Sp3(parsers::parse_sp3(path)?),
        ProductKind::Clk => Products::Clk(parsers::parse_clk(path)?),
    })
}

/// Source table, cache and transport bundled for repeated requests.
pub struct Downloader {
    pub specs: Vec<ProductSpec>,
    pub cache_dir: PathBuf,
    pub transport: Box<dyn Transport>,
    /// Wall clock override for availability decisions.
    pub now: Option<GpsMillis>,
}

impl Downloader {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            specs: default_specs(),
            cache_dir: cache_dir.into(),
            transport: Box::new(HttpTransport::default()),
            now: None,
        }
    }

    fn now(&self) -> GpsMillis {
        self.now.unwrap_or_else(|| utc_to_gps_millis(&chrono::Utc::now()).unwrap_or(GpsMillis(f64::MAX)))
    }

    pub fn select(
        &self,
        t: GpsMillis,
        constellations: &BTreeSet<Constellation>,
        kind: ProductKind,
    ) -> Result<Vec<ProductSpec>, DownloadError> {
        select_products(&self.specs, t, constellations, kind, self.now())
    }

    /// Tries each selected source in order and returns the first that
    /// downloads and parses.
    pub fn load_or_download(
        &self,
        t: GpsMillis,
        constellations: &BTreeSet<Constellation>,
        kind: ProductKind,
    ) -> Result<Download, DownloadError> {
        let mut failures = Vec::new();
        for spec in self.select(t, constellations, kind)? {
            let attempt = fetch_with_cache(&spec, t, &self.cache_dir, self.transport.as_ref())
                .and_then(|p| Ok((parse_product(kind, &p)?, p)));
            match attempt {
                Ok((products, path)) => {
                    return Ok(Download { products, path, spec_id: spec.id, failures });
                }
                Err(e) => {
                    log::warn!("{}: {e}", spec.id);
                    failures.push(Attempt { spec_id: spec.id.clone(), message: e.to_string() });
                }
            }
        }
        Err(DownloadError::AllFailed(failures))
    }
}
