//! Receiver trajectories as GeoJSON.

use super::{write, VisualizeError};
use crate::coords::ecef_to_geodetic;
use crate::solvers::Solution;
use serde_json::{json, Value};
use std::path::Path;

fn clean(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// FeatureCollection with a LineString over all fixes (when there are at
/// least two) followed by one Point per fix. Positions that do not convert
/// are skipped.
pub fn trajectory_geojson_string(solutions: &[Solution]) -> Result<String, VisualizeError> {
    let mut points = Vec::new();
    for s in solutions {
        match ecef_to_geodetic(&s.position()) {
            Ok(g) => {
                let lon = if g.lon_deg <= -180.0 { g.lon_deg + 360.0 } else { g.lon_deg };
                points.push((s.gps_millis, clean(lon), clean(g.lat_deg), clean(g.alt_m)));
            }
            Err(e) => log::warn!("solution at {} ms has no geodetic position: {e}", s.gps_millis),
        }
    }
    if points.is_empty() {
        return Err(VisualizeError::Empty);
    }
    let mut features: Vec<Value> = Vec::new();
    if points.len() > 1 {
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": points.iter().map(|p| json!([p.1, p.2])).collect::<Vec<_>>(),
            },
            "properties": { "kind": "trajectory" },
        }));
    }
    for p in &points {
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": [p.1, p.2] },
            "properties": { "gps_millis": p.0, "alt_m": p.3 },
        }));
    }
    let fc = json!({ "type": "FeatureCollection", "features": features });
    let mut s = serde_json::to_string_pretty(&fc).map_err(|e| VisualizeError::Io {
        path: Default::default(),
        source: e.into(),
    })?;
    s.push('\n');
    Ok(s)
}

pub fn trajectory_geojson(solutions: &[Solution], out_path: impl AsRef<Path>) -> Result<(), VisualizeError> {
    write(out_path.as_ref(), &trajectory_geojson_string(solutions)?)
}
