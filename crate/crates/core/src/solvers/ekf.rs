//! Extended Kalman filter over position, velocity and clock.

use super::wls::{linearize, normal_inverse, solve_obs};
use super::{epoch_obs, line_of_sight, Solution, SolverError, Weighting};
use crate::navdata::{names, NavData};
use nalgebra::{DMatrix, DVector, SMatrix, SVector, Vector4};

type State = SVector<f64, 8>;
type Cov = SMatrix<f64, 8, 8>;

const IX_B: usize = 6;
const IX_BD: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfConfig {
    /// White-noise acceleration density (m/s²).
    pub sigma_a_mps2: f64,
    /// Random walk on the clock bias (m/√s).
    pub sigma_b_m: f64,
    /// White-noise clock drift rate (m/s²).
    pub sigma_b_dot_mps2: f64,
    /// Pseudorange sigma when no `raw_pr_sigma_m` row is given.
    pub sigma_pr_m: f64,
    /// Innovations beyond gate_k standard deviations are discarded.
    pub gate_k: f64,
    pub init_velocity_sigma_mps: f64,
    pub init_clock_drift_sigma_mps: f64,
    /// Grouping tolerance for `loop_time`.
    pub epoch_delta_ms: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            sigma_a_mps2: 1.0,
            sigma_b_m: 1.0,
            sigma_b_dot_mps2: 0.1,
            sigma_pr_m: 5.0,
            gate_k: 5.0,
            init_velocity_sigma_mps: 10.0,
            init_clock_drift_sigma_mps: 100.0,
            epoch_delta_ms: 1.0,
        }
    }
}

fn predict(x: &mut State, p: &mut Cov, dt: f64, cfg: &EkfConfig) {
    let mut f = Cov::identity();
    for k in 0..3 {
        f[(k, k + 3)] = dt;
    }
    f[(IX_B, IX_BD)] = dt;
    *x = f * *x;
    let mut q = Cov::zeros();
    let (d1, d2, d3) = (dt.abs(), dt * dt / 2.0, dt.abs().powi(3) / 3.0);
    let sa = cfg.sigma_a_mps2.powi(2);
    for k in 0..3 {
        q[(k, k)] = sa * d3;
        q[(k, k + 3)] = sa * d2;
        q[(k + 3, k)] = sa * d2;
        q[(k + 3, k + 3)] = sa * d1;
    }
    let sd = cfg.sigma_b_dot_mps2.powi(2);
    q[(IX_B, IX_B)] = cfg.sigma_b_m.powi(2) * d1 + sd * d3;
    q[(IX_B, IX_BD)] = sd * d2;
    q[(IX_BD, IX_B)] = sd * d2;
    q[(IX_BD, IX_BD)] = sd * d1;
    *p = f * *p * f.transpose() + q;
}

/// Returns the number of measurements used.
fn update(x: &mut State, p: &mut Cov, sv: &[[f64; 3]], pr: &[f64], sigma: &[f64], cfg: &EkfConfig) -> usize {
    let rx = [x[0], x[1], x[2]];
    let mut rows = Vec::new();
    for i in 0..sv.len() {
        let (u, range) = line_of_sight(&sv[i], &rx);
        let mut h = SMatrix::<f64, 1, 8>::zeros();
        h[0] = -u[0];
        h[1] = -u[1];
        h[2] = -u[2];
        h[IX_B] = 1.0;
        let nu = pr[i] - (range + x[IX_B]);
        let r = sigma[i] * sigma[i];
        let s = (h * *p * h.transpose())[0] + r;
        if nu.abs() > cfg.gate_k * s.sqrt() {
            log::debug!("EKF gated innovation {nu:.3} m (sigma {:.3})", s.sqrt());
            continue;
        }
        rows.push((h, nu, r));
    }
    let m = rows.len();
    if m == 0 {
        return 0;
    }
    let h = DMatrix::from_fn(m, 8, |i, j| rows[i].0[j]);
    let nu = DVector::from_iterator(m, rows.iter().map(|r| r.1));
    let r = DMatrix::from_diagonal(&DVector::from_iterator(m, rows.iter().map(|r| r.2)));
    let pd = DMatrix::from_column_slice(8, 8, p.as_slice());
    let s = &h * &pd * h.transpose() + &r;
    let Some(s_inv) = s.try_inverse() else {
        return 0;
    };
    let k = &pd * h.transpose() * s_inv;
    let dx = &k * nu;
    for i in 0..8 {
        x[i] += dx[i];
    }
    let ikh = DMatrix::<f64>::identity(8, 8) - &k * &h;
    let pn = &ikh * &pd * ikh.transpose() + &k * &r * k.transpose();
    for i in 0..8 {
        for j in 0..8 {
            p[(i, j)] = 0.5 * (pn[(i, j)] + pn[(j, i)]);
        }
    }
    m
}

fn to_solution(t: f64, x: &State, p: &Cov, used: usize) -> Solution {
    Solution {
        gps_millis: t,
        x_rx_m: x[0],
        y_rx_m: x[1],
        z_rx_m: x[2],
        b_rx_m: x[IX_B],
        velocity_mps: Some([x[3], x[4], x[5]]),
        b_dot_rx_mps: Some(x[IX_BD]),
        covariance: DMatrix::from_column_slice(8, 8, p.as_slice()),
        num_used: used,
        converged: used >= 4,
        iterations: 1,
    }
}

fn sigmas(raw: &[f64], cfg: &EkfConfig) -> Vec<f64> {
    raw.iter()
        .map(|s| if s.is_finite() && *s > 0.0 { *s } else { cfg.sigma_pr_m })
        .collect()
}

/// Filters a time-ordered epoch stream. Epochs before the first one with
/// four usable satellites produce no solution.
pub fn solve_gnss_ekf(epochs: &[NavData], cfg: &EkfConfig) -> Result<Vec<Solution>, SolverError> {
    if epochs.is_empty() {
        return Err(SolverError::EmptyStream);
    }
    let mut out = Vec::new();
    let mut filter: Option<(State, Cov, f64)> = None;
    for epoch in epochs {
        if epoch.is_empty() {
            continue;
        }
        let t = epoch.numeric(names::GPS_MILLIS)?[0];
        let obs = epoch_obs(epoch)?;
        let sig = sigmas(&obs.sigma, cfg);
        match filter.as_mut() {
            None => {
                if obs.len() < 4 {
                    log::info!("EKF waiting for 4 satellites at {t} ms");
                    continue;
                }
                let sol = solve_obs(&obs, t, Weighting::Uniform, None)
                    .map_err(|e| SolverError::Initialization(e.to_string()))?;
                let s4 = Vector4::new(sol.x_rx_m, sol.y_rx_m, sol.z_rx_m, sol.b_rx_m);
                let (g, _) = linearize(&obs, &s4);
                let w: Vec<f64> = sig.iter().map(|s| 1.0 / (s * s)).collect();
                let inv = normal_inverse(&g, &w).map_err(|e| SolverError::Initialization(e.to_string()))?;
                let mut x = State::zeros();
                let mut p = Cov::zeros();
                let map = [0, 1, 2, IX_B];
                for (a, &ia) in map.iter().enumerate() {
                    x[ia] = s4[a];
                    for (b, &ib) in map.iter().enumerate() {
                        p[(ia, ib)] = inv[(a, b)];
                    }
                }
                for k in 3..6 {
                    p[(k, k)] = cfg.init_velocity_sigma_mps.powi(2);
                }
                p[(IX_BD, IX_BD)] = cfg.init_clock_drift_sigma_mps.powi(2);
                out.push(to_solution(t, &x, &p, obs.len()));
                filter = Some((x, p, t));
            }
            Some((x, p, t_prev)) => {
                let dt = (t - *t_prev) / 1000.0;
                predict(x, p, dt, cfg);
                *t_prev = t;
                let used = if obs.len() < 4 {
                    log::info!("EKF predict-only at {t} ms ({} satellites)", obs.len());
                    0
                } else {
                    update(x, p, &obs.sv, &obs.pr, &sig, cfg)
                };
                out.push(to_solution(t, x, p, used));
            }
        }
    }
    if filter.is_none() {
        return Err(SolverError::Initialization("no epoch with 4 usable satellites".into()));
    }
    Ok(out)
}

/// Splits a multi-epoch table and runs the filter over it.
pub fn solve_gnss_ekf_table(data: &NavData, cfg: &EkfConfig) -> Result<Vec<Solution>, SolverError> {
    let epochs: Vec<NavData> = data.loop_time(cfg.epoch_delta_ms)?.into_iter().map(|(_, d)| d).collect();
    solve_gnss_ekf(&epochs, cfg)
}
