//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
//! processing error.

mod pipeline;

pub use pipeline::{
    load_products, run_pipeline, LoadedProducts, Method, PipelineOutput, ProductFiles, ProductSource, SolveOptions,
    EPOCH_TOLERANCE_MS,
};

use crate::constellation::Constellation;
use crate::coords::{geodetic_to_ecef, GeodeticPosition};
use crate::ephemeris_dl::{
    default_specs, fetch_with_cache, parse_spec_config, resolve_cache_dir, select_products, DownloadError, HttpTransport,
    ProductKind,
};
use crate::navdata::{names, NavData, NavDataError};
use crate::parsers::{self, ParseError};
use crate::solvers::{solutions_to_navdata, Solution, SolverError, Weighting};
use crate::sv_models::{compute_dop, SvModelError};
use crate::time::{utc_to_gps_millis, TimeError};
use crate::visualize::{self, VisualizeError};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    NavData(#[from] NavDataError),
    #[error(transparent)]
    SvModel(#[from] SvModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Download(#[from] DownloadError),
    #[error(transparent)]
    Visualize(#[from] VisualizeError),
    #[error(transparent)]
    Time(#[from] TimeError),
}

#[derive(Debug, Parser)]
#[command(name = "gnsskit", version, about = "Parse, correct, solve and plot GNSS data")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Auto,
    RinexNav,
    RinexObs,
    Sp3,
    Clk,
    Nmea,
    Android,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Wls,
    Ekf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProductsArg {
    Broadcast,
    Precise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightArg {
    Uniform,
    Elevation,
    Sigma,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    RinexNav,
    Sp3,
    Clk,
}

#[derive(Debug, clap::Args)]
struct ProductArgs {
    /// Broadcast or precise satellite products.
    #[arg(long, value_enum, default_value = "broadcast")]
    products: ProductsArg,
    /// Local RINEX navigation file (repeatable).
    #[arg(long)]
    nav: Vec<PathBuf>,
    /// Local SP3 file (repeatable).
    #[arg(long)]
    sp3: Vec<PathBuf>,
    /// Local RINEX clock file (repeatable).
    #[arg(long)]
    clk: Vec<PathBuf>,
    /// Download cache; defaults to $GNSSKIT_CACHE or ~/.cache/gnsskit.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Never download; use local files or existing satellite rows only.
    #[arg(long)]
    offline: bool,
}

#[derive(Debug, clap::Args)]
struct CorrectionArgs {
    #[arg(long)]
    no_iono: bool,
    #[arg(long)]
    no_tropo: bool,
    /// Drop satellites below this elevation (degrees).
    #[arg(long, default_value_t = 0.0)]
    elevation_mask: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a GNSS file to CSV.
    Parse {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        format: Format,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve receiver positions from a measurement CSV.
    Solve {
        meas: PathBuf,
        #[arg(long, value_enum, default_value = "wls")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "uniform")]
        weights: WeightArg,
        #[command(flatten)]
        products: ProductArgs,
        #[command(flatten)]
        corrections: CorrectionArgs,
        /// Exclude satellites whose residual exceeds this many meters.
        #[arg(long)]
        fde_threshold: Option<f64>,
        #[arg(long, default_value_t = 3)]
        fde_max_exclusions: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sky plot of satellites seen in a measurement CSV.
    Skyplot {
        meas: PathBuf,
        #[command(flatten)]
        products: ProductArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Line plot of one row against another.
    Plot {
        data: PathBuf,
        #[arg(long, default_value = "gps_millis")]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        group_by: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// GeoJSON track from a solution CSV.
    Map {
        solution: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Download an ephemeris product into the cache and print its path.
    FetchEphemeris {
        /// ISO 8601 UTC time, e.g. 2021-01-01T00:00:00Z.
        #[arg(long)]
        time: String,
        #[arg(long, value_delimiter = ',', default_value = "gps")]
        constellations: Vec<String>,
        #[arg(long, value_enum, default_value = "sp3")]
        kind: KindArg,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Product table replacing the built-in sources.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print GDOP, PDOP, HDOP, VDOP and TDOP per epoch.
    Dop {
        meas: PathBuf,
        #[command(flatten)]
        products: ProductArgs,
    },
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{}", e.render());
                    1
                }
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("GNSSKIT_LOG").try_init();
    let mut stdout = std::io::stdout().lock();
    match run(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Guesses the file format from its first bytes.
pub fn detect_format(text: &str) -> Format {
    if text.starts_with("#c") || text.starts_with("#d") {
        return Format::Sp3;
    }
    let first = text.lines().next().unwrap_or("");
    if first.get(60..).is_some_and(|l| l.starts_with("RINEX VERSION / TYPE")) {
        return match first.get(20..21) {
            Some("O") => Format::RinexObs,
            Some("C") => Format::Clk,
            _ => Format::RinexNav,
        };
    }
    if text.lines().find(|l| !l.trim().is_empty()).is_some_and(|l| l.trim_start().starts_with("$G")) {
        return Format::Nmea;
    }
    if text.lines().take_while(|l| l.starts_with('#') || l.trim().is_empty()).any(|l| l.starts_with("# Raw")) {
        return Format::Android;
    }
    Format::Csv
}

/// Parses `path` into a table, as `parse` would write it.
pub fn parse_any(path: &Path, format: Format) -> Result<(NavData, Vec<String>), CliError> {
    let text = parsers::read_text(path)?;
    let format = if format == Format::Auto { detect_format(&text) } else { format };
    log::info!("{}: reading as {format:?}", path.display());
    Ok(match format {
        Format::Sp3 => (parsers::sp3_to_navdata(&parsers::parse_sp3_str(&text)?)?, Vec::new()),
        Format::Clk => (parsers::clk_to_navdata(&parsers::parse_clk_str(&text)?)?, Vec::new()),
        Format::RinexNav => {
            let f = parsers::parse_rinex_nav_str(&text)?;
            (parsers::ephemerides_to_navdata(&f.records)?, f.warnings)
        }
        Format::RinexObs => {
            let f = parsers::parse_rinex_obs_str(&text)?;
            (f.data, f.warnings)
        }
        Format::Nmea => {
            let o = parsers::parse_nmea_str(&text)?;
            let mut w = Vec::new();
            if o.bad_checksum > 0 {
                w.push(format!("{} sentences failed the checksum", o.bad_checksum));
            }
            if o.undated > 0 {
                w.push(format!("{} fixes had no date", o.undated));
            }
            (o.data, w)
        }
        Format::Android => (parsers::parse_android_raw_str(&text)?, Vec::new()),
        Format::Csv | Format::Auto => (NavData::from_csv_reader(text.as_bytes(), true)?, Vec::new()),
    })
}

fn read_csv(path: &Path) -> Result<NavData, CliError> {
    Ok(NavData::from_csv(path, true)?)
}

fn product_files(args: &ProductArgs) -> ProductFiles {
    ProductFiles {
        nav: args.nav.clone(),
        sp3: args.sp3.clone(),
        clk: args.clk.clone(),
        cache_dir: (!args.offline).then(|| resolve_cache_dir(args.cache_dir.as_deref())),
    }
}

fn source(args: &ProductArgs) -> ProductSource {
    match args.products {
        ProductsArg::Broadcast => ProductSource::Broadcast,
        ProductsArg::Precise => ProductSource::Precise,
    }
}

/// Products unless the measurements already carry satellite states and no
/// product file was named.
fn products_for(meas: &NavData, args: &ProductArgs) -> Result<Option<LoadedProducts>, CliError> {
    let has_states = [names::X_SV_M, names::Y_SV_M, names::Z_SV_M].iter().all(|n| meas.contains(n));
    if has_states && args.nav.is_empty() && args.sp3.is_empty() && args.clk.is_empty() {
        log::info!("using satellite states already in the measurement file");
        return Ok(None);
    }
    Ok(Some(load_products(meas, source(args), &product_files(args))?))
}

fn solution_from_row(data: &NavData, i: usize) -> Result<Solution, CliError> {
    let get = |n: &str| -> Result<f64, CliError> { Ok(data.numeric(n)?[i]) };
    let (x, y, z) = if data.contains(names::X_RX_M) {
        (get(names::X_RX_M)?, get(names::Y_RX_M)?, get(names::Z_RX_M)?)
    } else {
        let g = GeodeticPosition::new(get(names::LAT_RX_DEG)?, get(names::LON_RX_DEG)?, get(names::ALT_RX_M)?);
        let p = geodetic_to_ecef(&g).map_err(|e| CliError::Data(format!("column {i}: {e}")))?;
        (p.x_m, p.y_m, p.z_m)
    };
    Ok(Solution {
        gps_millis: if data.contains(names::GPS_MILLIS) { get(names::GPS_MILLIS)? } else { i as f64 },
        x_rx_m: x,
        y_rx_m: y,
        z_rx_m: z,
        b_rx_m: if data.contains(names::B_RX_M) { get(names::B_RX_M)? } else { 0.0 },
        velocity_mps: None,
        b_dot_rx_mps: None,
        covariance: DMatrix::zeros(4, 4),
        num_used: 0,
        converged: true,
        iterations: 0,
    })
}

/// Reads solutions written by `solve` (ECEF rows) or any table with
/// lat/lon/alt rows.
pub fn read_solutions(data: &NavData) -> Result<Vec<Solution>, CliError> {
    (0..data.len()).map(|i| solution_from_row(data, i)).collect()
}

fn parse_time(s: &str) -> Result<crate::time::GpsMillis, CliError> {
    let utc = chrono::DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&chrono::Utc))
        .or_else(|_| {
            chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").map(|n| n.and_utc())
        })
        .or_else(|_| {
            chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map(|d| d.and_hms_opt(0, 0, 0).unwrap_or_default().and_utc())
        })
        .map_err(|_| CliError::Data(format!("bad time '{s}', expected ISO 8601")))?;
    Ok(utc_to_gps_millis(&utc)?)
}

fn run(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let print = |out: &mut dyn Write, s: String| -> Result<(), CliError> {
        writeln!(out, "{s}").map_err(io_err(Path::new("<stdout>")))
    };
    match cmd {
        Command::Parse { file, format, output } => {
            let (data, warnings) = parse_any(&file, format)?;
            for w in warnings {
                log::warn!("{w}");
            }
            data.to_csv(&output)?;
        }
        Command::Solve {
            meas,
            method,
            weights,
            products,
            corrections,
            fde_threshold,
            fde_max_exclusions,
            output,
        } => {
            let data = read_csv(&meas)?;
            let opts = SolveOptions {
                method: match method {
                    MethodArg::Wls => Method::Wls,
                    MethodArg::Ekf => Method::Ekf,
                },
                products: source(&products),
                weighting: match weights {
                    WeightArg::Uniform => Weighting::Uniform,
                    WeightArg::Elevation => Weighting::Elevation,
                    WeightArg::Sigma => Weighting::SigmaRow,
                },
                iono: !corrections.no_iono,
                tropo: !corrections.no_tropo,
                elevation_mask_deg: corrections.elevation_mask,
                fde_threshold_m: fde_threshold,
                fde_max_exclusions,
                ..SolveOptions::default()
            };
            let loaded = products_for(&data, &products)?;
            let result = run_pipeline(&data, &opts, loaded.as_ref())?;
            solutions_to_navdata(&result.solutions)?.to_csv(&output)?;
        }
        Command::Skyplot { meas, products, output } => {
            let data = read_csv(&meas)?;
            let table = if data.contains(names::EL_SV_DEG) && data.contains(names::AZ_SV_DEG) {
                data
            } else {
                let loaded = products_for(&data, &products)?;
                run_pipeline(&data, &SolveOptions::default(), loaded.as_ref())?.corrected()?
            };
            visualize::plot_skyplot_svg(&table, &output)?;
        }
        Command::Plot { data, x, y, group_by, output } => {
            let table = read_csv(&data)?;
            visualize::plot_metric_svg(&table, &x, &y, group_by.as_deref(), &output)?;
        }
        Command::Map { solution, output } => {
            let sols = read_solutions(&read_csv(&solution)?)?;
            visualize::trajectory_geojson(&sols, &output)?;
        }
        Command::FetchEphemeris { time, constellations, kind, cache_dir, config } => {
            let t = parse_time(&time)?;
            let cons = constellations
                .iter()
                .map(|c| c.trim().to_ascii_lowercase().parse::<Constellation>())
                .collect::<Result<BTreeSet<_>, _>>()
                .map_err(CliError::Data)?;
            let kind = match kind {
                KindArg::RinexNav => ProductKind::RinexNav,
                KindArg::Sp3 => ProductKind::Sp3,
                KindArg::Clk => ProductKind::Clk,
            };
            let specs = match config {
                Some(p) => parse_spec_config(&std::fs::read_to_string(&p).map_err(io_err(&p))?)?,
                None => default_specs(),
            };
            let now = utc_to_gps_millis(&chrono::Utc::now())?;
            let dir = resolve_cache_dir(cache_dir.as_deref());
            let transport = HttpTransport::default();
            let mut failures = Vec::new();
            let mut fetched = None;
            for spec in select_products(&specs, t, &cons, kind, now)? {
                match fetch_with_cache(&spec, t, &dir, &transport) {
                    Ok(p) => {
                        fetched = Some(p);
                        break;
                    }
                    Err(e) => failures.push(crate::ephemeris_dl::Attempt {
                        spec_id: spec.id.clone(),
                        message: e.to_string(),
                    }),
                }
            }
            match fetched {
                Some(p) => print(out, p.display().to_string())?,
                None => return Err(DownloadError::AllFailed(failures).into()),
            }
        }
        Command::Dop { meas, products } => {
            let data = read_csv(&meas)?;
            let loaded = products_for(&data, &products)?;
            let result = run_pipeline(&data, &SolveOptions::default(), loaded.as_ref())?;
            print(out, "gps_millis,gdop,pdop,hdop,vdop,tdop".into())?;
            for (s, e) in result.solutions.iter().zip(&result.epochs) {
                let used = if e.contains(names::FAULT_FLAG) {
                    e.filter(names::FAULT_FLAG, crate::navdata::Predicate::Neq, 1.0)?
                } else {
                    e.clone()
                };
                match compute_dop(&used, &s.position()) {
                    Ok(d) => print(
                        out,
                        format!("{},{:.6},{:.6},{:.6},{:.6},{:.6}", s.gps_millis, d.gdop, d.pdop, d.hdop, d.vdop, d.tdop),
                    )?,
                    Err(e) => log::warn!("epoch {} ms: {e}", s.gps_millis),
                }
            }
        }
    }
    Ok(())
}
