//! Line plots of one NavData row against another.

use super::{color_for, escape, group_key, labels, num, numeric, write, VisualizeError};
use crate::navdata::NavData;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn nice_step(range: f64, target: f64) -> f64 {
    let raw = range / target;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
    decimals: usize,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            lo -= 1.0;
            hi += 1.0;
        }
        let step = nice_step(hi - lo, 5.0);
        let decimals = (-step.log10().floor()).max(0.0) as usize;
        Some(Axis { lo, hi, step, decimals })
    }

    fn ticks(&self) -> Vec<f64> {
        let first = (self.lo / self.step).ceil() as i64;
        let last = (self.hi / self.step).floor() as i64;
        (first..=last).map(|k| k as f64 * self.step).collect()
    }

    fn map(&self, v: f64, a: f64, b: f64) -> f64 {
        a + (v - self.lo) / (self.hi - self.lo) * (b - a)
    }
}

/// SVG text with one polyline per `group_by` value (or a single one).
pub fn metric_svg(data: &NavData, x_row: &str, y_row: &str, group_by: Option<&str>) -> Result<String, VisualizeError> {
    if data.is_empty() {
        return Err(VisualizeError::Empty);
    }
    let x = numeric(data, x_row)?;
    let y = numeric(data, y_row)?;
    let groups = match group_by {
        Some(g) => labels(data, g)?,
        None => vec![y_row.to_string(); data.len()],
    };
    let mut series: BTreeMap<(usize, String), (String, Vec<(f64, f64)>)> = BTreeMap::new();
    for i in 0..data.len() {
        if x[i].is_finite() && y[i].is_finite() {
            series
                .entry(group_key(&groups[i]))
                .or_insert_with(|| (groups[i].clone(), Vec::new()))
                .1
                .push((x[i], y[i]));
        }
    }
    let pts = || series.values().flat_map(|(_, p)| p.iter());
    let ax = Axis::new(pts().map(|p| p.0)).ok_or(VisualizeError::Empty)?;
    let ay = Axis::new(pts().map(|p| p.1)).ok_or(VisualizeError::Empty)?;
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{} vs {}</text>"#,
        num((x0 + x1) / 2.0, 2),
        escape(y_row),
        escape(x_row)
    );
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1" fill="none">"#);
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
        num(x0, 2),
        num(y1, 2),
        num(x1 - x0, 2),
        num(y0 - y1, 2)
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11" stroke="none" fill="black">"#);
    for t in ax.ticks() {
        let px = num(ax.map(t, x0, x1), 2);
        let _ = writeln!(s, r#"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="black"/>"#, num(y0, 2), num(y0 + 5.0, 2));
        let _ = writeln!(s, r#"<text x="{px}" y="{}" text-anchor="middle">{}</text>"#, num(y0 + 18.0, 2), num(t, ax.decimals));
    }
    for t in ay.ticks() {
        let py = num(ay.map(t, y0, y1), 2);
        let _ = writeln!(s, r#"<line x1="{}" y1="{py}" x2="{}" y2="{py}" stroke="black"/>"#, num(x0 - 5.0, 2), num(x0, 2));
        let _ = writeln!(s, r#"<text x="{}" y="{py}" text-anchor="end" dominant-baseline="middle">{}</text>"#, num(x0 - 8.0, 2), num(t, ay.decimals));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num((x0 + x1) / 2.0, 2), num(HEIGHT - 15.0, 2), escape(x_row));
    let _ = writeln!(
        s,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">{}</text>"#,
        escape(y_row),
        y = num((y0 + y1) / 2.0, 2)
    );
    let _ = writeln!(s, "</g>");
    for (k, (label, p)) in series.values().enumerate() {
        let color = color_for(label, k);
        let coords: Vec<String> = p
            .iter()
            .map(|(a, b)| format!("{},{}", num(ax.map(*a, x0, x1), 2), num(ay.map(*b, y0, y1), 2)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-group="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(label),
            coords.join(" ")
        );
    }
    let _ = writeln!(s, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    for (k, (label, _)) in series.values().enumerate() {
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="3"/><text x="{}" y="{y}" dominant-baseline="middle">{}</text></g>"#,
            num(lx, 2),
            num(lx + 20.0, 2),
            color_for(label, k),
            num(lx + 26.0, 2),
            escape(label),
            y = num(ly, 2)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn plot_metric_svg(
    data: &NavData,
    x_row: &str,
    y_row: &str,
    group_by: Option<&str>,
    out_path: impl AsRef<Path>,
) -> Result<(), VisualizeError> {
    write(out_path.as_ref(), &metric_svg(data, x_row, y_row, group_by)?)
}
