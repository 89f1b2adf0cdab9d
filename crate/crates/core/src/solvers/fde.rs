//! Residual-based fault detection and exclusion.

use super::wls::{linearize, normal_inverse, solve_obs};
use super::{epoch_obs, Solution, SolverError, Weighting};
use crate::navdata::{names, NavData, Row};
use nalgebra::Vector4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdeStrategy {
    /// Drop the satellite with the largest |residual|.
    GreedyResidual,
    /// Drop the satellite with the largest |r_i| / sqrt(1 - h_ii), h the hat
    /// matrix diagonal. Picks a lone fault correctly even when the fit
    /// smears it onto other satellites.
    #[default]
    GreedyNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdeStatus {
    WithinThreshold,
    /// Stopped at `max_exclusions` with residuals still above threshold.
    ResidualsAboveThreshold,
    /// Four satellites left, nothing more can be excluded.
    RedundancyExhausted,
    /// Fewer than five usable satellites on entry.
    InsufficientSatellites,
}

#[derive(Debug, Clone)]
pub struct FdeOutcome {
    /// Input epoch with a `fault_flag` row.
    pub data: NavData,
    pub status: FdeStatus,
    /// Column indices flagged, in exclusion order.
    pub excluded: Vec<usize>,
    /// WLS on the final active set.
    pub solution: Option<Solution>,
    pub warnings: Vec<String>,
}

fn flagged(epoch: &NavData, excluded: &[usize]) -> Result<NavData, SolverError> {
    let mut flags = vec![0.0; epoch.len()];
    for &i in excluded {
        flags[i] = 1.0;
    }
    let mut out = epoch.clone();
    out.insert(names::FAULT_FLAG, Row::Numeric(flags))?;
    Ok(out)
}

pub fn solve_fde(
    epoch: &NavData,
    threshold_m: f64,
    max_exclusions: usize,
    strategy: FdeStrategy,
) -> Result<FdeOutcome, SolverError> {
    let mut work = epoch.clone();
    work.remove(names::FAULT_FLAG);
    let obs = epoch_obs(&work)?;
    let t = work.numeric(names::GPS_MILLIS).ok().and_then(|v| v.first().copied()).unwrap_or(f64::NAN);
    if obs.len() < 5 {
        let msg = format!("{} usable satellites at {t} ms, exclusion needs at least 5", obs.len());
        log::warn!("{msg}");
        return Ok(FdeOutcome {
            data: flagged(&work, &[])?,
            status: FdeStatus::InsufficientSatellites,
            excluded: Vec::new(),
            solution: solve_obs(&obs, t, Weighting::Uniform, None).ok(),
            warnings: vec![msg],
        });
    }
    let mut active: Vec<usize> = (0..obs.len()).collect();
    let mut excluded = Vec::new();
    let status = loop {
        if active.len() <= 4 {
            break FdeStatus::RedundancyExhausted;
        }
        let sub = obs.subset(&active);
        let sol = solve_obs(&sub, t, Weighting::Uniform, None)?;
        let (g, r) = linearize(&sub, &Vector4::new(sol.x_rx_m, sol.y_rx_m, sol.z_rx_m, sol.b_rx_m));
        if r.amax() <= threshold_m {
            break FdeStatus::WithinThreshold;
        }
        if excluded.len() >= max_exclusions {
            break FdeStatus::ResidualsAboveThreshold;
        }
        let worst = match strategy {
            FdeStrategy::GreedyResidual => r.iamax(),
            FdeStrategy::GreedyNormalized => {
                let inv = normal_inverse(&g, &vec![1.0; sub.len()])?;
                let score = |i: usize| {
                    let gi = g.row(i).transpose();
                    let h = (gi.transpose() * inv * gi)[0];
                    r[i].abs() / (1.0 - h).max(1e-12).sqrt()
                };
                (0..sub.len()).max_by(|&a, &b| score(a).total_cmp(&score(b))).unwrap_or(0)
            }
        };
        log::debug!("excluding column {} with residual {:.3} m", obs.index[active[worst]], r[worst]);
        excluded.push(obs.index[active[worst]]);
        active.remove(worst);
    };
    let solution = solve_obs(&obs.subset(&active), t, Weighting::Uniform, None).ok();
    Ok(FdeOutcome {
        data: flagged(&work, &excluded)?,
        status,
        excluded,
        solution,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::test_support::{epoch, sky};

    fn flags(out: &FdeOutcome) -> Vec<f64> {
        out.data.numeric(names::FAULT_FLAG).unwrap().to_vec()
    }

    #[test]
    fn single_fault_flagged() {
        for k in 0..8 {
            let mut noise = [0.0; 8];
            noise[k] = 1000.0;
            let out = solve_fde(&epoch(&sky(8), 5.0, &noise), 10.0, 3, FdeStrategy::default()).unwrap();
            assert_eq!(out.excluded, vec![k]);
            assert_eq!(out.status, FdeStatus::WithinThreshold);
            assert_eq!(flags(&out).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn raw_residual_strategy_runs() {
        let mut noise = [0.0; 8];
        noise[3] = 1000.0;
        let out = solve_fde(&epoch(&sky(8), 0.0, &noise), 10.0, 3, FdeStrategy::GreedyResidual).unwrap();
        assert!(!out.excluded.is_empty() && out.excluded.len() <= 3);
    }

    #[test]
    fn clean_epoch_has_no_flags() {
        let out = solve_fde(&epoch(&sky(8), 0.0, &[]), 10.0, 3, FdeStrategy::default()).unwrap();
        assert!(out.excluded.is_empty());
        assert!(flags(&out).iter().all(|f| *f == 0.0));
    }

    #[test]
    fn exclusion_budget_respected() {
        let mut noise = [0.0; 8];
        noise[1] = 1000.0;
        noise[5] = -700.0;
        let out = solve_fde(&epoch(&sky(8), 0.0, &noise), 10.0, 1, FdeStrategy::default()).unwrap();
        assert_eq!(out.excluded.len(), 1);
        assert_eq!(out.status, FdeStatus::ResidualsAboveThreshold);
    }

    #[test]
    fn never_below_four() {
        let noise = [300.0, -200.0, 500.0, 100.0, -400.0, 250.0];
        let out = solve_fde(&epoch(&sky(6), 0.0, &noise), 1.0, 10, FdeStrategy::default()).unwrap();
        assert!(out.excluded.len() <= 2);
        assert_eq!(out.status, FdeStatus::RedundancyExhausted);
    }

    #[test]
    fn too_few_satellites_warns() {
        let out = solve_fde(&epoch(&sky(4), 0.0, &[]), 10.0, 3, FdeStrategy::default()).unwrap();
        assert_eq!(out.status, FdeStatus::InsufficientSatellites);
        assert_eq!(out.warnings.len(), 1);
        assert!(flags(&out).iter().all(|f| *f == 0.0));
    }
}
