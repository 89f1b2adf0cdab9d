//! Polar sky plot: zenith at the center, north up, azimuth clockwise.

use super::{color_for, escape, group_key, labels, num, numeric, write, VisualizeError};
use crate::navdata::{names, NavData};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const SKY_SIZE: f64 = 600.0;
pub const SKY_CENTER: (f64, f64) = (300.0, 300.0);
pub const SKY_RADIUS: f64 = 250.0;

/// Radial distance from the center for an elevation in degrees.
pub fn skyplot_radius(el_deg: f64) -> f64 {
    (90.0 - el_deg) / 90.0 * SKY_RADIUS
}

/// SVG user coordinates for (elevation, azimuth) in degrees.
pub fn skyplot_xy(el_deg: f64, az_deg: f64) -> (f64, f64) {
    let r = skyplot_radius(el_deg);
    let (s, c) = az_deg.to_radians().sin_cos();
    (SKY_CENTER.0 + r * s, SKY_CENTER.1 - r * c)
}

fn sv_tag(gnss: &str, sv: &str) -> String {
    match gnss.parse::<crate::constellation::Constellation>() {
        Ok(c) => format!("{}{:0>2}", c.rinex_char(), sv),
        Err(_) => format!("{gnss}{sv}"),
    }
}

/// One trace per satellite, colored by constellation. Points below the
/// horizon are left out.
pub fn skyplot_svg(data: &NavData) -> Result<String, VisualizeError> {
    if data.is_empty() {
        return Err(VisualizeError::Empty);
    }
    let el = numeric(data, names::EL_SV_DEG)?;
    let az = numeric(data, names::AZ_SV_DEG)?;
    let gnss = if data.contains(names::GNSS_ID) {
        labels(data, names::GNSS_ID)?
    } else {
        vec![String::new(); data.len()]
    };
    let sv = if data.contains(names::SV_ID) {
        labels(data, names::SV_ID)?
    } else {
        vec![String::new(); data.len()]
    };
    let t = if data.contains(names::GPS_MILLIS) {
        numeric(data, names::GPS_MILLIS)?.to_vec()
    } else {
        (0..data.len()).map(|i| i as f64).collect()
    };
    type Key = ((usize, String), u64, String);
    let mut traces: BTreeMap<Key, (String, String, Vec<(f64, f64, f64)>)> = BTreeMap::new();
    for i in 0..data.len() {
        if !(el[i].is_finite() && az[i].is_finite()) || el[i] < 0.0 || el[i] > 90.0 {
            continue;
        }
        let sv_num = sv[i].parse::<u64>().unwrap_or(u64::MAX);
        traces
            .entry((group_key(&gnss[i]), sv_num, sv[i].clone()))
            .or_insert_with(|| (gnss[i].clone(), sv[i].clone(), Vec::new()))
            .2
            .push((t[i], el[i], az[i]));
    }

    let (cx, cy) = SKY_CENTER;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{w}" viewBox="0 0 {w} {w}">"#,
        w = SKY_SIZE
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SKY_SIZE}" height="{SKY_SIZE}" fill="white"/>"#);
    let _ = writeln!(s, r##"<g class="grid" fill="none" stroke="#888888" stroke-width="1">"##);
    for ring in [0.0, 30.0, 60.0] {
        let _ = writeln!(
            s,
            r#"<circle class="ring" data-elevation="{}" cx="{}" cy="{}" r="{}"/>"#,
            num(ring, 0),
            num(cx, 2),
            num(cy, 2),
            num(skyplot_radius(ring), 2)
        );
    }
    let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, num(cx, 2), num(cy - SKY_RADIUS, 2), num(cx, 2), num(cy + SKY_RADIUS, 2));
    let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, num(cx - SKY_RADIUS, 2), num(cy, 2), num(cx + SKY_RADIUS, 2), num(cy, 2));
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="14" text-anchor="middle">"#);
    for (label, az) in [("N", 0.0), ("E", 90.0), ("S", 180.0), ("W", 270.0)] {
        let r = SKY_RADIUS + 18.0;
        let (sa, ca) = f64::to_radians(az).sin_cos();
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" dominant-baseline="middle">{label}</text>"#,
            num(cx + r * sa, 2),
            num(cy - r * ca, 2)
        );
    }
    for ring in [30.0, 60.0] {
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" font-size="10" fill="#888888">{}</text>"##,
            num(cx + 4.0, 2),
            num(cy - skyplot_radius(ring) - 3.0, 2),
            num(ring, 0)
        );
    }
    let _ = writeln!(s, "</g>");

    for (k, (g, svid, mut p)) in traces.into_values().enumerate() {
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = color_for(&g, k);
        let xy: Vec<(f64, f64)> = p.iter().map(|q| skyplot_xy(q.1, q.2)).collect();
        let tag = escape(&sv_tag(&g, &svid));
        let _ = writeln!(s, r#"<g class="satellite" data-gnss="{}" data-sv="{}">"#, escape(&g), escape(&svid));
        if xy.len() > 1 {
            let pts: Vec<String> = xy.iter().map(|(x, y)| format!("{},{}", num(*x, 2), num(*y, 2))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        let (x, y) = xy[xy.len() - 1];
        let _ = writeln!(s, r#"<circle class="marker" cx="{}" cy="{}" r="4" fill="{color}"/>"#, num(x, 4), num(y, 4));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{tag}</text>"#,
            num(x + 6.0, 2),
            num(y - 6.0, 2)
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn plot_skyplot_svg(data: &NavData, out_path: impl AsRef<Path>) -> Result<(), VisualizeError> {
    write(out_path.as_ref(), &skyplot_svg(data)?)
}
