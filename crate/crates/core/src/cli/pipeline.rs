//! Measurements to receiver solutions: satellite states, corrections,
//! solver.

use super::CliError;
use crate::constellation::Constellation;
use crate::coords::EcefPosition;
use crate::ephemeris_dl::{Downloader, ProductKind, Products};
use crate::navdata::{names, Axis, NavData, Predicate};
use crate::parsers::{parse_clk, parse_rinex_nav, parse_sp3, ClkNode, Sp3Node};
use crate::solvers::{solve_fde, solve_gnss_ekf, solve_wls, EkfConfig, FdeStrategy, Solution, Weighting};
use crate::sv_models::{add_corrections, add_sv_states, BroadcastStore, Corrections, IonoParams, PreciseStore, SvSource};
use crate::time::GpsMillis;
use std::collections::BTreeSet;
use std::path::PathBuf;

/// Measurements sharing a timestamp within this many ms form one epoch.
pub const EPOCH_TOLERANCE_MS: f64 = 1.0;
const CORRECTION_PASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Wls,
    Ekf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductSource {
    #[default]
    Broadcast,
    Precise,
}

#[derive(Debug, Clone, Default)]
pub struct ProductFiles {
    pub nav: Vec<PathBuf>,
    pub sp3: Vec<PathBuf>,
    pub clk: Vec<PathBuf>,
    /// Download what is missing into this cache; `None` means offline.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub method: Method,
    pub products: ProductSource,
    pub weighting: Weighting,
    pub iono: bool,
    pub tropo: bool,
    pub elevation_mask_deg: f64,
    /// Run residual exclusion with this threshold (m) before solving.
    pub fde_threshold_m: Option<f64>,
    pub fde_max_exclusions: usize,
    pub ekf: EkfConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Wls,
            products: ProductSource::Broadcast,
            weighting: Weighting::Uniform,
            iono: true,
            tropo: true,
            elevation_mask_deg: 0.0,
            fde_threshold_m: None,
            fde_max_exclusions: 3,
            ekf: EkfConfig::default(),
        }
    }
}

/// Parsed products ready for `add_sv_states`.
pub enum LoadedProducts {
    Broadcast(BroadcastStore, Option<IonoParams>),
    Precise(PreciseStore, Option<IonoParams>),
}

impl LoadedProducts {
    pub fn iono(&self) -> Option<&IonoParams> {
        match self {
            LoadedProducts::Broadcast(_, i) | LoadedProducts::Precise(_, i) => i.as_ref(),
        }
    }

    pub fn source(&self) -> SvSource<'_> {
        match self {
            LoadedProducts::Broadcast(b, _) => SvSource::Broadcast(b),
            LoadedProducts::Precise(p, _) => SvSource::Precise(p),
        }
    }
}

fn request(meas: &NavData) -> Result<(GpsMillis, BTreeSet<Constellation>), CliError> {
    let t = meas
        .numeric(names::GPS_MILLIS)?
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !t.is_finite() {
        return Err(CliError::Data("no finite gps_millis".into()));
    }
    let cons = meas
        .categorical(names::GNSS_ID)?
        .iter()
        .filter_map(|g| g.parse::<Constellation>().ok())
        .filter(|c| matches!(c, Constellation::Gps | Constellation::Galileo))
        .collect();
    Ok((GpsMillis(t), cons))
}

fn download(meas: &NavData, files: &ProductFiles, kind: ProductKind) -> Result<Products, CliError> {
    let dir = files
        .cache_dir
        .clone()
        .ok_or_else(|| CliError::Data(format!("no local {kind} file given and no cache directory")))?;
    let (t, cons) = request(meas)?;
    Ok(Downloader::new(dir).load_or_download(t, &cons, kind)?.products)
}

/// Local files first; the downloader fills in what is missing.
pub fn load_products(meas: &NavData, source: ProductSource, files: &ProductFiles) -> Result<LoadedProducts, CliError> {
    let mut iono = None;
    let mut records = Vec::new();
    for p in &files.nav {
        let f = parse_rinex_nav(p)?;
        iono = iono.or(f.iono);
        records.extend(f.records);
    }
    match source {
        ProductSource::Broadcast => {
            if records.is_empty() {
                if let Products::Nav(f) = download(meas, files, ProductKind::RinexNav)? {
                    iono = f.iono;
                    records = f.records;
                }
            }
            Ok(LoadedProducts::Broadcast(BroadcastStore::new(&records), iono))
        }
        ProductSource::Precise => {
            let mut sp3: Vec<Sp3Node> = Vec::new();
            for p in &files.sp3 {
                sp3.extend(parse_sp3(p)?);
            }
            let mut clk: Vec<ClkNode> = Vec::new();
            for p in &files.clk {
                clk.extend(parse_clk(p)?);
            }
            if sp3.is_empty() {
                if let Products::Sp3(n) = download(meas, files, ProductKind::Sp3)? {
                    sp3 = n;
                }
                if clk.is_empty() {
                    match download(meas, files, ProductKind::Clk) {
                        Ok(Products::Clk(n)) => clk = n,
                        Ok(_) => {}
                        Err(e) => log::warn!("no clock product, using SP3 clocks: {e}"),
                    }
                }
            }
            Ok(LoadedProducts::Precise(PreciseStore::new(&sp3, &clk), iono))
        }
    }
}

fn has_sv_states(d: &NavData) -> bool {
    [names::X_SV_M, names::Y_SV_M, names::Z_SV_M].iter().all(|n| d.contains(n))
}

/// Solutions plus the per-epoch tables (with corrections) they came from.
pub struct PipelineOutput {
    pub solutions: Vec<Solution>,
    pub epochs: Vec<NavData>,
    pub warnings: Vec<String>,
}

impl PipelineOutput {
    pub fn corrected(&self) -> Result<NavData, CliError> {
        let mut out = NavData::new();
        for e in &self.epochs {
            out = out.concat(e, Axis::Columns)?;
        }
        Ok(out)
    }
}

fn correct(epoch: &NavData, rx: &EcefPosition, opts: &SolveOptions, iono: Option<&IonoParams>) -> Result<NavData, CliError> {
    let c = Corrections { iono: iono.filter(|_| opts.iono), skip_tropo: !opts.tropo };
    let mut e = add_corrections(epoch, rx, c)?;
    if opts.elevation_mask_deg > 0.0 {
        e = e.filter(names::EL_SV_DEG, Predicate::Geq, opts.elevation_mask_deg)?;
    }
    Ok(e)
}

/// Runs one epoch through WLS with corrections re-evaluated at each new
/// position estimate.
fn solve_epoch(
    epoch: &NavData,
    opts: &SolveOptions,
    iono: Option<&IonoParams>,
    prev: Option<&Solution>,
) -> Result<(Solution, NavData), CliError> {
    let raw_available = epoch.contains(names::RAW_PR_M);
    let mut base = epoch.clone();
    if raw_available {
        base.remove(names::CORR_PR_M);
    }
    let mut sol = solve_wls(&base, opts.weighting, prev)?;
    let mut current = base.clone();
    if raw_available {
        for _ in 0..CORRECTION_PASSES {
            current = correct(&base, &sol.position(), opts, iono)?;
            sol = solve_wls(&current, opts.weighting, Some(&sol))?;
        }
    }
    if let Some(thr) = opts.fde_threshold_m {
        let out = solve_fde(&current, thr, opts.fde_max_exclusions, FdeStrategy::default())?;
        current = out.data;
        if let Some(s) = out.solution {
            sol = s;
        }
    }
    Ok((sol, current))
}

/// Measurements (raw or with satellite states) to solutions.
pub fn run_pipeline(meas: &NavData, opts: &SolveOptions, products: Option<&LoadedProducts>) -> Result<PipelineOutput, CliError> {
    let mut warnings = Vec::new();
    let data = match products {
        Some(p) => {
            let (d, w) = add_sv_states(meas, p.source())?;
            warnings.extend(w);
            d
        }
        None if has_sv_states(meas) => meas.clone(),
        None => return Err(CliError::Data("measurements carry no satellite states and no products were given".into())),
    };
    let iono = products.and_then(|p| p.iono());
    let mut solutions = Vec::new();
    let mut epochs = Vec::new();
    let mut prev: Option<Solution> = None;
    for (t, epoch) in data.loop_time(EPOCH_TOLERANCE_MS)? {
        match solve_epoch(&epoch, opts, iono, prev.as_ref()) {
            Ok((s, e)) => {
                prev = Some(s.clone());
                solutions.push(s);
                epochs.push(e);
            }
            Err(e) => {
                log::warn!("epoch {t} ms skipped: {e}");
                warnings.push(format!("epoch {t} ms skipped: {e}"));
            }
        }
    }
    if epochs.is_empty() {
        return Err(CliError::Data("no epoch could be solved".into()));
    }
    if opts.method == Method::Ekf {
        solutions = solve_gnss_ekf(&epochs, &opts.ekf)?;
    }
    Ok(PipelineOutput { solutions, epochs, warnings })
}
