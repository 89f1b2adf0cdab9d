//! Gauss-Newton weighted least squares on pseudoranges.

use super::{epoch_obs, line_of_sight, EpochObs, Solution, SolverError};
use crate::coords::{elevation_azimuth, EcefPosition};
use crate::navdata::{names, NavData};
use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    /// sin²(el), elevation taken from the previous iterate.
    Elevation,
    /// 1/σ² from `raw_pr_sigma_m`; covariance uses σ0 = 1.
    SigmaRow,
}

const CONVERGENCE_M: f64 = 1e-6;
const MAX_ITERATIONS: usize = 20;
const MIN_ELEVATION_WEIGHT: f64 = 1e-6;

fn weights(obs: &EpochObs, state: &Vector4<f64>, weighting: Weighting, first: bool) -> Vec<f64> {
    match weighting {
        Weighting::Uniform => vec![1.0; obs.len()],
        Weighting::SigmaRow => obs.sigma.iter().map(|s| 1.0 / (s * s)).collect(),
        Weighting::Elevation => {
            if first {
                return vec![1.0; obs.len()];
            }
            let rx = EcefPosition::new(state[0], state[1], state[2]);
            obs.sv
                .iter()
                .map(|sv| {
                    let el = elevation_azimuth(&EcefPosition::from(*sv), &rx).map_or(90.0, |(e, _)| e);
                    el.to_radians().sin().powi(2).max(MIN_ELEVATION_WEIGHT)
                })
                .collect()
        }
    }
}

/// Design matrix rows [-u, 1] and residuals pr - (range + b) at `state`.
pub(crate) fn linearize(obs: &EpochObs, state: &Vector4<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let rx = [state[0], state[1], state[2]];
    let n = obs.len();
    let mut g = DMatrix::zeros(n, 4);
    let mut r = DVector::zeros(n);
    for i in 0..n {
        let (u, range) = line_of_sight(&obs.sv[i], &rx);
        g[(i, 0)] = -u[0];
        g[(i, 1)] = -u[1];
        g[(i, 2)] = -u[2];
        g[(i, 3)] = 1.0;
        r[i] = obs.pr[i] - (range + state[3]);
    }
    (g, r)
}

pub(crate) fn normal_inverse(g: &DMatrix<f64>, w: &[f64]) -> Result<Matrix4<f64>, SolverError> {
    let mut n = Matrix4::zeros();
    for (i, wi) in w.iter().enumerate() {
        let row = g.row(i);
        for a in 0..4 {
            for b in 0..4 {
                n[(a, b)] += wi * row[a] * row[b];
            }
        }
    }
    let svd = n.svd(false, false);
    let (max, min) = (svd.singular_values.max(), svd.singular_values.min());
    if !(max > 0.0) || min / max < 1e-14 {
        return Err(SolverError::Singular);
    }
    n.try_inverse().ok_or(SolverError::Singular)
}

/// Update Δ = (GᵀWG)⁻¹GᵀW r at `state` (x, y, z, b).
pub fn gauss_newton_step(data: &NavData, state: [f64; 4], weighting: Weighting) -> Result<[f64; 4], SolverError> {
    let obs = epoch_obs(data)?;
    if obs.len() < 4 {
        return Err(SolverError::TooFewSatellites(obs.len()));
    }
    let s = Vector4::from(state);
    let (g, r) = linearize(&obs, &s);
    let w = weights(&obs, &s, weighting, false);
    let d = step(&g, &r, &w)?;
    Ok([d[0], d[1], d[2], d[3]])
}

fn step(g: &DMatrix<f64>, r: &DVector<f64>, w: &[f64]) -> Result<Vector4<f64>, SolverError> {
    let inv = normal_inverse(g, w)?;
    let mut gtwr = Vector4::zeros();
    for (i, wi) in w.iter().enumerate() {
        for a in 0..4 {
            gtwr[a] += wi * g[(i, a)] * r[i];
        }
    }
    Ok(inv * gtwr)
}

pub(crate) fn solve_obs(
    obs: &EpochObs,
    gps_millis: f64,
    weighting: Weighting,
    init: Option<&Solution>,
) -> Result<Solution, SolverError> {
    if obs.len() < 4 {
        return Err(SolverError::TooFewSatellites(obs.len()));
    }
    if weighting == Weighting::SigmaRow && obs.sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(SolverError::MissingRow(names::RAW_PR_SIGMA_M.into()));
    }
    let mut state = init.map_or_else(Vector4::zeros, |s| Vector4::new(s.x_rx_m, s.y_rx_m, s.z_rx_m, s.b_rx_m));
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..MAX_ITERATIONS {
        let (g, r) = linearize(obs, &state);
        let w = weights(obs, &state, weighting, k == 0 && init.is_none());
        let d = step(&g, &r, &w)?;
        state += d;
        iterations = k + 1;
        if d.norm() < CONVERGENCE_M {
            converged = true;
            break;
        }
    }
    let (g, r) = linearize(obs, &state);
    let w = weights(obs, &state, weighting, false);
    let inv = normal_inverse(&g, &w)?;
    let dof = obs.len() as f64 - 4.0;
    let sigma0_sq = match weighting {
        Weighting::SigmaRow => 1.0,
        _ if dof > 0.0 => r.iter().zip(&w).map(|(ri, wi)| wi * ri * ri).sum::<f64>() / dof,
        _ => 1.0,
    };
    if !converged {
        log::warn!("WLS did not converge in {MAX_ITERATIONS} iterations at {gps_millis} ms");
    }
    Ok(Solution {
        gps_millis,
        x_rx_m: state[0],
        y_rx_m: state[1],
        z_rx_m: state[2],
        b_rx_m: state[3],
        velocity_mps: None,
        b_dot_rx_mps: None,
        covariance: DMatrix::from_fn(4, 4, |i, j| sigma0_sq * inv[(i, j)]),
        num_used: obs.len(),
        converged,
        iterations,
    })
}

fn epoch_time(data: &NavData) -> Result<f64, SolverError> {
    Ok(data.numeric(names::GPS_MILLIS)?.first().copied().unwrap_or(f64::NAN))
}

/// Snapshot solution for one epoch.
pub fn solve_wls(epoch: &NavData, weighting: Weighting, init: Option<&Solution>) -> Result<Solution, SolverError> {
    let obs = epoch_obs(epoch)?;
    solve_obs(&obs, epoch_time(epoch)?, weighting, init)
}

/// WLS over every `loop_time` bin; epochs that fail are logged and skipped.
pub fn solve_wls_epochs(data: &NavData, weighting: Weighting, delta_t_ms: f64) -> Result<Vec<Solution>, SolverError> {
    let mut out = Vec::new();
    let mut prev: Option<Solution> = None;
    for (t, epoch) in data.loop_time(delta_t_ms)? {
        match solve_wls(&epoch, weighting, prev.as_ref()) {
            Ok(s) => {
                prev = Some(s.clone());
                out.push(s);
            }
            Err(e) => log::warn!("epoch {t} ms: {e}"),
        }
    }
    Ok(out)
}
