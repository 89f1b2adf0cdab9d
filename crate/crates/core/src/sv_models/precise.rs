//! Lagrange interpolation of SP3 orbit nodes with linear CLK clocks.

use super::{sv_label, SvModelError, SvState};
use crate::constellation::Constellation;
use crate::parsers::{ClkNode, Sp3Node};
use crate::time::GpsTime;
use crate::SPEED_OF_LIGHT;
use std::collections::HashMap;

const WINDOW: usize = 11;
const MIN_SIDE: usize = 5;

/// Value and derivative weights of the Lagrange basis through `x` at 0.
fn lagrange_weights(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut w = vec![0.0; n];
    let mut dw = vec![0.0; n];
    for j in 0..n {
        let mut denom = 1.0;
        let mut prod = 1.0;
        for m in 0..n {
            if m != j {
                denom *= x[j] - x[m];
                prod *= -x[m];
            }
        }
        w[j] = prod / denom;
        let mut d = 0.0;
        for k in 0..n {
            if k == j {
                continue;
            }
            let mut p = 1.0;
            for m in 0..n {
                if m != j && m != k {
                    p *= -x[m];
                }
            }
            d += p;
        }
        dw[j] = d / denom;
    }
    (w, dw)
}

/// Seconds from `t` to a node time given in milliseconds.
fn offset_s(node_ms: f64, t: &GpsTime) -> f64 {
    GpsTime::from_millis(node_ms).seconds_since(t)
}

/// Position and velocity from the nodes of one satellite (sorted by time).
pub fn interpolate_sp3_clk(
    sp3: &[Sp3Node],
    clk: &[ClkNode],
    t: impl Into<GpsTime>,
) -> Result<SvState, SvModelError> {
    let t = t.into();
    let first = sp3.first().ok_or(SvModelError::EmptyProducts)?;
    let label = sv_label(first.gnss_id, first.sv_id);
    if sp3.len() < WINDOW {
        return Err(SvModelError::InsufficientNodes {
            sv: label,
            have: sp3.len(),
            need: WINDOW,
        });
    }
    let t_ms = t.to_millis();
    let start_ms = first.gps_millis;
    let end_ms = sp3[sp3.len() - 1].gps_millis;
    let out_of_span = || SvModelError::OutOfSpan {
        sv: label.clone(),
        t_ms,
        start_ms,
        end_ms,
    };
    let dts: Vec<f64> = sp3.iter().map(|n| offset_s(n.gps_millis, &t)).collect();
    if dts[0] > 0.0 || dts[dts.len() - 1] < 0.0 {
        return Err(out_of_span());
    }
    let before = dts.iter().filter(|&&d| d <= 0.0).count();
    let after = dts.iter().filter(|&&d| d >= 0.0).count();
    if before < MIN_SIDE || after < MIN_SIDE {
        return Err(SvModelError::InsufficientNodes {
            sv: label,
            have: before.min(after),
            need: MIN_SIDE,
        });
    }
    let nearest = (0..dts.len())
        .min_by(|&a, &b| dts[a].abs().total_cmp(&dts[b].abs()))
        .unwrap_or(0);
    let start = nearest.saturating_sub(WINDOW / 2).min(sp3.len() - WINDOW);
    let nodes = &sp3[start..start + WINDOW];
    let x = &dts[start..start + WINDOW];
    let (w, dw) = lagrange_weights(x);
    let axis = |f: fn(&Sp3Node) -> f64| -> (f64, f64) {
        nodes.iter().zip(w.iter().zip(&dw)).fold((0.0, 0.0), |(p, v), (n, (a, b))| {
            (p + a * f(n), v + b * f(n))
        })
    };
    let (x_m, vx) = axis(|n| n.x_m);
    let (y_m, vy) = axis(|n| n.y_m);
    let (z_m, vz) = axis(|n| n.z_m);

    let (clk_s, clk_rate) = clock(clk, sp3, &t).ok_or_else(|| SvModelError::NoClock(label.clone()))?;
    // Periodic relativistic clock term for precise clocks.
    let rel_m = -2.0 * (x_m * vx + y_m * vy + z_m * vz) / SPEED_OF_LIGHT;
    Ok(SvState {
        gps_millis: t_ms,
        gnss_id: first.gnss_id,
        sv_id: first.sv_id,
        x_sv_m: x_m,
        y_sv_m: y_m,
        z_sv_m: z_m,
        vx_sv_mps: vx,
        vy_sv_mps: vy,
        vz_sv_mps: vz,
        b_sv_m: clk_s * SPEED_OF_LIGHT + rel_m,
        b_dot_sv_mps: clk_rate * SPEED_OF_LIGHT,
    })
}

/// Linear interpolation between bracketing clock samples; CLK nodes are
/// preferred, SP3 clock columns are the fallback.
fn clock(clk: &[ClkNode], sp3: &[Sp3Node], t: &GpsTime) -> Option<(f64, f64)> {
    let from_clk: Vec<(f64, f64)> = clk
        .iter()
        .filter(|n| n.clk_s.is_finite())
        .map(|n| (offset_s(n.gps_millis, t), n.clk_s))
        .collect();
    if !from_clk.is_empty() {
        return linear(&from_clk);
    }
    let from_sp3: Vec<(f64, f64)> = sp3
        .iter()
        .filter(|n| n.clk_s.is_finite())
        .map(|n| (offset_s(n.gps_millis, t), n.clk_s))
        .collect();
    linear(&from_sp3)
}

fn linear(samples: &[(f64, f64)]) -> Option<(f64, f64)> {
    let hi = samples.iter().position(|&(d, _)| d >= 0.0)?;
    let (d1, v1) = samples[hi];
    if d1 == 0.0 {
        let rate = if hi + 1 < samples.len() {
            let (d2, v2) = samples[hi + 1];
            (v2 - v1) / d2
        } else if hi > 0 {
            let (d0, v0) = samples[hi - 1];
            (v1 - v0) / -d0
        } else {
            0.0
        };
        return Some((v1, rate));
    }
    if hi == 0 {
        return None;
    }
    let (d0, v0) = samples[hi - 1];
    let rate = (v1 - v0) / (d1 - d0);
    Some((v0 + rate * (0.0 - d0), rate))
}

/// SP3 and CLK nodes grouped per satellite, sorted by time.
#[derive(Debug, Clone, Default)]
pub struct PreciseStore {
    sp3: HashMap<(Constellation, u32), Vec<Sp3Node>>,
    clk: HashMap<(Constellation, u32), Vec<ClkNode>>,
}

impl PreciseStore {
    pub fn new(sp3: &[Sp3Node], clk: &[ClkNode]) -> Self {
        let mut s: HashMap<_, Vec<Sp3Node>> = HashMap::new();
        for n in sp3 {
            s.entry((n.gnss_id, n.sv_id)).or_default().push(*n);
        }
        let mut c: HashMap<_, Vec<ClkNode>> = HashMap::new();
        for n in clk {
            c.entry((n.gnss_id, n.sv_id)).or_default().push(*n);
        }
        for v in s.values_mut() {
            v.sort_by(|a, b| a.gps_millis.total_cmp(&b.gps_millis));
        }
        for v in c.values_mut() {
            v.sort_by(|a, b| a.gps_millis.total_cmp(&b.gps_millis));
        }
        Self { sp3: s, clk: c }
    }

    pub fn is_empty(&self) -> bool {
        self.sp3.is_empty()
    }

    pub fn sp3_nodes(&self, gnss: Constellation, sv: u32) -> &[Sp3Node] {
        self.sp3.get(&(gnss, sv)).map_or(&[], Vec::as_slice)
    }

    pub fn clk_nodes(&self, gnss: Constellation, sv: u32) -> &[ClkNode] {
        self.clk.get(&(gnss, sv)).map_or(&[], Vec::as_slice)
    }

    pub fn state(&self, gnss: Constellation, sv: u32, t: GpsTime) -> Result<SvState, SvModelError> {
        let nodes = self.sp3_nodes(gnss, sv);
        if nodes.is_empty() {
            return Err(SvModelError::NoProduct(sv_label(gnss, sv)));
        }
        interpolate_sp3_clk(nodes, self.clk_nodes(gnss, sv), t)
    }
}
