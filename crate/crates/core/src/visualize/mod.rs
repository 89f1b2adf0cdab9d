//! Static plot output: SVG line plots and skyplots, GeoJSON trajectories.
//! Output depends only on the input, byte for byte.

mod geojson;
mod skyplot;
mod svg;

pub use self::geojson::{trajectory_geojson, trajectory_geojson_string};
pub use self::skyplot::{plot_skyplot_svg, skyplot_radius, skyplot_svg, skyplot_xy, SKY_CENTER, SKY_RADIUS};
pub use self::svg::{metric_svg, plot_metric_svg};

use crate::constellation::Constellation;
use crate::navdata::{NavData, NavDataError, Row};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VisualizeError {
    #[error("nothing to plot")]
    Empty,
    #[error("missing row '{0}'")]
    MissingRow(String),
    #[error("row '{0}' is not numeric")]
    NonNumeric(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    NavData(#[from] NavDataError),
}

/// One color per constellation, in canonical order.
pub const PALETTE: [&str; 7] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"];

/// Color for a group label; constellation names get their own slot.
pub(crate) fn color_for(label: &str, ordinal: usize) -> &'static str {
    match label.parse::<Constellation>() {
        Ok(c) => PALETTE[c.index()],
        Err(_) => PALETTE[ordinal % PALETTE.len()],
    }
}

/// Fixed decimals, with negative zero printed as zero.
pub(crate) fn num(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' && c != '\n' => {}
            c => out.push(c),
        }
    }
    out
}

/// Row values as group labels; integral numbers lose their ".0".
pub(crate) fn labels(data: &NavData, name: &str) -> Result<Vec<String>, VisualizeError> {
    if !data.contains(name) {
        return Err(VisualizeError::MissingRow(name.into()));
    }
    Ok(match data.row(name)? {
        Row::Categorical(v) => v.clone(),
        Row::Numeric(v) => v
            .iter()
            .map(|x| {
                if x.fract() == 0.0 && x.abs() < 1e15 {
                    format!("{}", *x as i64)
                } else {
                    x.to_string()
                }
            })
            .collect(),
    })
}

/// Sort key putting constellation names first in canonical order.
pub(crate) fn group_key(label: &str) -> (usize, String) {
    match label.parse::<Constellation>() {
        Ok(c) => (c.index(), String::new()),
        Err(_) => (Constellation::ALL.len(), label.to_string()),
    }
}

pub(crate) fn numeric<'a>(data: &'a NavData, name: &str) -> Result<&'a [f64], VisualizeError> {
    if !data.contains(name) {
        return Err(VisualizeError::MissingRow(name.into()));
    }
    data.numeric(name).map_err(|_| VisualizeError::NonNumeric(name.into()))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<(), VisualizeError> {
    std::fs::write(path, text).map_err(|source| VisualizeError::Io { path: path.to_path_buf(), source })
}
