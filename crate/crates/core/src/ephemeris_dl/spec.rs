//! Product descriptions, the default source table and template expansion.

use super::DownloadError;
use crate::constellation::Constellation;
use crate::time::{gps_calendar_date, gps_millis_to_week_tow, GpsMillis, MILLIS_PER_DAY};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProductKind {
    RinexNav,
    Sp3,
    Clk,
}

impl ProductKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProductKind::RinexNav => "rinex_nav",
            ProductKind::Sp3 => "sp3",
            ProductKind::Clk => "clk",
        }
    }
}

impl fmt::Display for ProductKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProductKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "rinex_nav" | "nav" => Ok(ProductKind::RinexNav),
            "sp3" => Ok(ProductKind::Sp3),
            "clk" => Ok(ProductKind::Clk),
            other => Err(format!("unknown product kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpec {
    /// Source id, part of the cache key.
    pub id: String,
    pub kind: ProductKind,
    pub constellations: BTreeSet<Constellation>,
    /// `{year}`, `{yy}`, `{doy}`, `{week}`, `{dow}`, `{month}`, `{day}` are substituted.
    pub url_template: String,
    /// Days after the observation date before the product is published.
    pub latency_days: f64,
    pub priority: u32,
    /// Extra request header, e.g. an authorization token.
    pub header: Option<(String, String)>,
}

impl ProductSpec {
    pub fn new(
        kind: ProductKind,
        constellations: impl IntoIterator<Item = Constellation>,
        latency_days: f64,
        priority: u32,
        url_template: impl Into<String>,
    ) -> Self {
        let constellations: BTreeSet<_> = constellations.into_iter().collect();
        let letters: String = constellations.iter().map(|c| c.rinex_char()).collect();
        Self {
            id: format!("{kind}_{letters}_{priority}"),
            kind,
            constellations,
            url_template: url_template.into(),
            latency_days,
            priority,
            header: None,
        }
    }

    pub fn covers(&self, wanted: &BTreeSet<Constellation>) -> bool {
        wanted.is_subset(&self.constellations)
    }

    pub fn expand(&self, t: GpsMillis) -> Result<String, DownloadError> {
        expand_template(&self.url_template, t)
    }
}

/// Substitutes date fields derived from `t` (GPS time scale).
pub fn expand_template(template: &str, t: GpsMillis) -> Result<String, DownloadError> {
    let (year, month, day, doy) = gps_calendar_date(t);
    let (week, tow) = gps_millis_to_week_tow(t).map_err(|e| DownloadError::Template(e.to_string()))?;
    let dow = (tow * 1000.0 / MILLIS_PER_DAY as f64).floor() as i64;
    let mut out = String::with_capacity(template.len() + 16);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| DownloadError::Template(format!("unclosed '{{' in {template}")))?
            + open;
        let value = match &rest[open + 1..close] {
            "year" => format!("{year:04}"),
            "yy" => format!("{:02}", year.rem_euclid(100)),
            "doy" => format!("{doy:03}"),
            "week" => format!("{week:04}"),
            "dow" => dow.to_string(),
            "month" => format!("{month:02}"),
            "day" => format!("{day:02}"),
            other => return Err(DownloadError::Template(format!("unknown field '{{{other}}}'"))),
        };
        out.push_str(&value);
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

const BKG: &str = "https://igs.bkg.bund.de/root_ftp/IGS";

/// Built-in source table: IGS final and rapid orbits/clocks, merged
/// multi-GNSS broadcast and the legacy GPS-only broadcast file.
pub fn default_specs() -> Vec<ProductSpec> {
    use Constellation::*;
    let igs = [Gps, Galileo, Glonass, Beidou, Qzss];
    vec![
        ProductSpec::new(
            ProductKind::Sp3,
            igs,
            14.0,
            1,
            format!("{BKG}/products/{{week}}/IGS0OPSFIN_{{year}}{{doy}}0000_01D_15M_ORB.SP3.gz"),
        ),
        ProductSpec::new(
            ProductKind::Sp3,
            igs,
            1.0,
            2,
            format!("{BKG}/products/{{week}}/IGS0OPSRAP_{{year}}{{doy}}0000_01D_15M_ORB.SP3.gz"),
        ),
        ProductSpec::new(
            ProductKind::Clk,
            igs,
            14.0,
            1,
            format!("{BKG}/products/{{week}}/IGS0OPSFIN_{{year}}{{doy}}0000_01D_05M_CLK.CLK.gz"),
        ),
        ProductSpec::new(
            ProductKind::Clk,
            igs,
            1.0,
            2,
            format!("{BKG}/products/{{week}}/IGS0OPSRAP_{{year}}{{doy}}0000_01D_05M_CLK.CLK.gz"),
        ),
        ProductSpec::new(
            ProductKind::RinexNav,
            igs,
            0.0,
            1,
            format!("{BKG}/BRDC/{{year}}/{{doy}}/BRDC00WRD_R_{{year}}{{doy}}0000_01D_MN.rnx.gz"),
        ),
        ProductSpec::new(
            ProductKind::RinexNav,
            [Gps],
            0.0,
            1,
            format!("{BKG}/BRDC/{{year}}/{{doy}}/brdc{{doy}}0.{{yy}}n.gz"),
        ),
    ]
}

/// Reads a product table. One spec per line:
///
/// `kind constellations latency_days priority template [header:Name=Value]`
///
/// with constellations comma-separated. Blank lines and `#` comments are
/// skipped.
pub fn parse_spec_config(text: &str) -> Result<Vec<ProductSpec>, DownloadError> {
    let mut specs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| DownloadError::Config { line: i + 1, msg: msg.to_string() };
        let tok: Vec<&str> = line.split_whitespace().collect();
        if !(5..=6).contains(&tok.len()) {
            return Err(bad("expected 5 or 6 fields"));
        }
        let kind: ProductKind = tok[0].parse().map_err(|e: String| bad(&e))?;
        let cons = tok[1]
            .split(',')
            .map(str::parse::<Constellation>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(&e))?;
        let latency: f64 = tok[2].parse().map_err(|_| bad("bad latency"))?;
        if !(latency >= 0.0) {
            return Err(bad("latency must be non-negative"));
        }
        let priority: u32 = tok[3].parse().map_err(|_| bad("bad priority"))?;
        let mut spec = ProductSpec::new(kind, cons, latency, priority, tok[4]);
        if let Some(h) = tok.get(5) {
            let (name, value) = h
                .strip_prefix("header:")
                .and_then(|h| h.split_once('='))
                .ok_or_else(|| bad("expected header:Name=Value"))?;
            spec.header = Some((name.to_string(), value.to_string()));
        }
        if specs
            .iter()
            .any(|s: &ProductSpec| s.kind == spec.kind && s.constellations == spec.constellations && s.priority == priority)
        {
            return Err(bad("duplicate priority for this kind and constellation set"));
        }
        specs.push(spec);
    }
    Ok(specs)
}

/// Covering specs whose latency has elapsed at `now`, by priority. When
/// none has elapsed yet the lowest-latency covering specs are returned, so a
/// very recent request still tries the quickest product.
pub fn select_products(
    specs: &[ProductSpec],
    t: GpsMillis,
    constellations: &BTreeSet<Constellation>,
    kind: ProductKind,
    now: GpsMillis,
) -> Result<Vec<ProductSpec>, DownloadError> {
    let covering: Vec<&ProductSpec> = specs.iter().filter(|s| s.kind == kind && s.covers(constellations)).collect();
    if covering.is_empty() {
        return Err(DownloadError::NoCoverage {
            kind,
            constellations: constellations.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
        });
    }
    let elapsed_days = (now.0 - t.0) / MILLIS_PER_DAY as f64;
    let mut chosen: Vec<&ProductSpec> = covering
        .iter()
        .copied()
        .filter(|s| s.latency_days == 0.0 || elapsed_days > s.latency_days)
        .collect();
    if chosen.is_empty() {
        let min = covering.iter().map(|s| s.latency_days).fold(f64::INFINITY, f64::min);
        log::info!("no {kind} product published yet for {elapsed_days:.2} days elapsed, trying the quickest");
        chosen = covering.into_iter().filter(|s| s.latency_days == min).collect();
    }
    chosen.sort_by(|a, b| {
        a.priority
            .cmp(&b.priority)
            .then(a.latency_days.total_cmp(&b.latency_days))
            .then(a.constellations.len().cmp(&b.constellations.len()))
            .then(a.id.cmp(&b.id))
    });
    Ok(chosen.into_iter().cloned().collect())
}
