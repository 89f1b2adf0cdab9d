//! Pseudorange residuals against a receiver state.

use super::{corrected_pseudoranges, Solution, SolverError};
use crate::navdata::{names, NavData, Row};

/// Appends `residuals_m` = corrected pseudorange − (range + b_rx). Columns
/// without a satellite position get NaN.
pub fn compute_residuals(epoch: &NavData, state: &Solution) -> Result<NavData, SolverError> {
    for name in [names::X_SV_M, names::Y_SV_M, names::Z_SV_M] {
        if !epoch.contains(name) {
            return Err(SolverError::MissingRow(name.into()));
        }
    }
    let rx = [state.x_rx_m, state.y_rx_m, state.z_rx_m];
    if !rx.iter().chain([&state.b_rx_m]).all(|v| v.is_finite()) {
        return Err(SolverError::MissingRow("receiver state".into()));
    }
    let x = epoch.numeric(names::X_SV_M)?;
    let y = epoch.numeric(names::Y_SV_M)?;
    let z = epoch.numeric(names::Z_SV_M)?;
    let pr = corrected_pseudoranges(epoch)?;
    let res: Vec<f64> = (0..epoch.len())
        .map(|i| {
            let d = [x[i] - rx[0], y[i] - rx[1], z[i] - rx[2]];
            pr[i] - ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() + state.b_rx_m)
        })
        .collect();
    let mut out = epoch.clone();
    out.insert(names::RESIDUALS_M, Row::Numeric(res))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::test_support::{epoch, sky, truth};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn truth_solution(b: f64) -> Solution {
        let t = truth();
        Solution {
            gps_millis: 0.0,
            x_rx_m: t[0],
            y_rx_m: t[1],
            z_rx_m: t[2],
            b_rx_m: b,
            velocity_mps: None,
            b_dot_rx_mps: None,
            covariance: DMatrix::zeros(4, 4),
            num_used: 0,
            converged: true,
            iterations: 0,
        }
    }

    #[test]
    fn truth_gives_zero_and_clock_is_linear() {
        let data = epoch(&sky(8), 20.0, &[]);
        let r0 = compute_residuals(&data, &truth_solution(20.0)).unwrap();
        let r0 = r0.numeric(names::RESIDUALS_M).unwrap().to_vec();
        assert!(r0.iter().all(|r| r.abs() < 1e-9));
        let r1 = compute_residuals(&data, &truth_solution(30.0)).unwrap();
        for (a, b) in r0.iter().zip(r1.numeric(names::RESIDUALS_M).unwrap()) {
            assert!((a - b - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_statistics() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let normal = Normal::new(0.0, 5.0).unwrap();
        let svs: Vec<[f64; 3]> = sky(10).into_iter().cycle().take(1000).collect();
        let noise: Vec<f64> = (0..1000).map(|_| normal.sample(&mut rng)).collect();
        let data = epoch(&svs, 0.0, &noise);
        let r = compute_residuals(&data, &truth_solution(0.0)).unwrap();
        let r = r.numeric(names::RESIDUALS_M).unwrap();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let sd = (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r.len() - 1) as f64).sqrt();
        assert!((4.0..=6.0).contains(&sd), "{sd}");
    }
}
