//! Evaluation quantities computed from a [`Trajectory`] and its
//! [`ReferenceTrajectory`]: tracking error `E_x`, consensus disagreement
//! `V1 = ||B0^T x||_1`, the zero-gradient-sum residuals, the allocation
//! constraint mismatch and an empirical settling detector.

use std::io::Write;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::oracle::ReferenceTrajectory;
use crate::problems::{total_demand, ResourceProfile, TvCost};
use crate::sim::Trajectory;

/// Value reported by [`tracking_error`] when the error is exactly zero.
pub const LOG_FLOOR: f64 = -16.0;

/// Time grids agree if they have the same length and every sample matches to
/// this absolute tolerance.
const GRID_TOL: f64 = 1e-9;

fn check_grid(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} samples vs {}", a.len(), b.len())));
    }
    if let Some(k) = a.iter().zip(b).position(|(x, y)| (x - y).abs() > GRID_TOL) {
        return Err(Error::GridMismatch(format!("sample {k}: t = {} vs {}", a[k], b[k])));
    }
    Ok(())
}

/// `log10` guarded to [`LOG_FLOOR`].
pub fn log10_floor(v: f64) -> f64 {
    if v > 0.0 {
        v.log10().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}

/// `(1/N) sum_i ||x_i(t_k) - x_i*(t_k)||` per sample, using the recovered
/// primals for the dual flow.
pub fn mean_tracking_distance(traj: &Trajectory, reference: &ReferenceTrajectory) -> Result<Vec<f64>> {
    check_grid(&traj.times, &reference.times)?;
    let decisions = traj.decisions();
    Ok(decisions
        .iter()
        .enumerate()
        .map(|(k, xs)| {
            let total: f64 = xs.iter().enumerate().map(|(i, x)| (x - reference.agent(k, i)).norm()).sum();
            total / xs.len() as f64
        })
        .collect())
}

/// `E_x(t_k) = log10((1/N) sum_i ||x_i(t_k) - x_i*(t_k)||)`, floored at
/// [`LOG_FLOOR`].
pub fn tracking_error(traj: &Trajectory, reference: &ReferenceTrajectory) -> Result<Vec<f64>> {
    Ok(mean_tracking_distance(traj, reference)?.into_iter().map(log10_floor).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZgsResidual {
    /// `|| sum_i grad f_i(x_i, t) ||`: distance proxy to the zero-gradient-sum manifold.
    pub distance: Vec<f64>,
    /// `|| sum_i grad f_i(x_i, t) - sum_i z_i ||`: conservation drift.
    pub drift: Vec<f64>,
}

pub fn zgs_residual<M: TvCost>(traj: &Trajectory, models: &[M]) -> ZgsResidual {
    let mut distance = Vec::with_capacity(traj.times.len());
    let mut drift = Vec::with_capacity(traj.times.len());
    for (k, &t) in traj.times.iter().enumerate() {
        let d = traj.dim();
        let mut g = DVector::zeros(d);
        let mut z = DVector::zeros(d);
        for (i, m) in models.iter().enumerate() {
            g += m.gradient(&traj.primary[k][i], t);
            z += &traj.aux[k][i];
        }
        distance.push(g.norm());
        drift.push((g - z).norm());
    }
    ZgsResidual { distance, drift }
}

/// `V1(x) = ||(B0^T ⊗ I) x||_1 = sum_{(i,j)} a_ij ||x_i - x_j||_1`.
pub fn disagreement(net: &Network, states: &[DVector<f64>]) -> f64 {
    net.edges()
        .iter()
        .map(|e| e.weight * (&states[e.i] - &states[e.j]).lp_norm(1))
        .sum()
}

/// [`disagreement`] of the primary states (`x_i`, or `lambda_i` for the
/// dual flow) at every sample.
pub fn consensus_error(traj: &Trajectory, net: &Network) -> Vec<f64> {
    traj.primary.iter().map(|s| disagreement(net, s)).collect()
}

/// `|| sum_i x_i(t_k) - d(t_k) ||` from the recovered primals.
pub fn constraint_mismatch(traj: &Trajectory, profiles: &[ResourceProfile]) -> Result<Vec<f64>> {
    let primal = traj
        .primal
        .as_ref()
        .ok_or_else(|| Error::param("trajectory", "no recovered primal states; not a dual-flow run"))?;
    Ok(traj
        .times
        .iter()
        .zip(primal)
        .map(|(&t, xs)| {
            let s = xs.iter().fold(DVector::zeros(traj.dim()), |acc, x| acc + x);
            (s - total_demand(profiles, t)).norm()
        })
        .collect())
}

/// Default settling threshold `10 h (a + alpha)`: a multiple of the Euler
/// chattering band.
pub fn default_settling_threshold(h: f64, a: f64, alpha: f64) -> f64 {
    10.0 * h * (a + alpha)
}

pub const DEFAULT_DWELL: f64 = 0.5;

/// First sample time `t` such that every sample in `[t, t + dwell]` is at most
/// `threshold`. The window must fit inside the recorded horizon, so a series
/// that only drops below the threshold near the end yields `None`.
pub fn detect_settling(times: &[f64], series: &[f64], threshold: f64, dwell: f64) -> Result<Option<f64>> {
    if !(threshold > 0.0) {
        return Err(Error::param("threshold", format!("must be positive, got {threshold}")));
    }
    if !(dwell > 0.0) {
        return Err(Error::param("dwell", format!("must be positive, got {dwell}")));
    }
    if times.len() != series.len() {
        return Err(Error::GridMismatch(format!("{} times vs {} values", times.len(), series.len())));
    }
    let (Some(&t0), Some(&t_last)) = (times.first(), times.last()) else {
        return Ok(None);
    };
    if dwell > t_last - t0 + GRID_TOL {
        return Err(Error::param("dwell", format!("{dwell} exceeds the horizon {}", t_last - t0)));
    }
    // next_bad[k]: first index >= k whose value exceeds the threshold
    let n = series.len();
    let mut next_bad = vec![n; n + 1];
    for k in (0..n).rev() {
        next_bad[k] = if series[k] > threshold || series[k].is_nan() { k } else { next_bad[k + 1] };
    }
    for k in 0..n {
        let t = times[k];
        if t + dwell > t_last + GRID_TOL {
            break;
        }
        let bad = next_bad[k];
        if bad == n || times[bad] > t + dwell + GRID_TOL {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Largest value over the final `window` seconds.
pub fn tail_max(times: &[f64], series: &[f64], window: f64) -> f64 {
    let Some(&end) = times.last() else { return f64::NAN };
    times
        .iter()
        .zip(series)
        .filter(|(t, _)| **t >= end - window - GRID_TOL)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest value over `t in [from, to]`.
pub fn window_max(times: &[f64], series: &[f64], from: f64, to: f64) -> f64 {
    times
        .iter()
        .zip(series)
        .filter(|(t, _)| **t >= from - GRID_TOL && **t <= to + GRID_TOL)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// All metrics on the recording grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub times: Vec<f64>,
    /// `(1/N) sum_i ||x_i - x_i*||`.
    pub mean_error: Vec<f64>,
    /// `E_x`, the floored `log10` of `mean_error`.
    pub tracking_error: Vec<f64>,
    /// `V1`; empty for single-agent runs.
    pub consensus: Vec<f64>,
    pub zgs: Option<ZgsResidual>,
    pub constraint_mismatch: Option<Vec<f64>>,
    pub settled_at: Option<f64>,
}

impl MetricSeries {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut header = vec!["t", "mean_error", "e_x"];
        if !self.consensus.is_empty() {
            header.push("v1");
        }
        if self.zgs.is_some() {
            header.extend(["zgs_distance", "zgs_drift"]);
        }
        if self.constraint_mismatch.is_some() {
            header.push("constraint_mismatch");
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![self.times[k], self.mean_error[k], self.tracking_error[k]];
            if !self.consensus.is_empty() {
                row.push(self.consensus[k]);
            }
            if let Some(z) = &self.zgs {
                row.extend([z.distance[k], z.drift[k]]);
            }
            if let Some(c) = &self.constraint_mismatch {
                row.push(c[k]);
            }
            out.write_record(row.iter().map(f64::to_string))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::FlowKind;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    fn traj(times: Vec<f64>, primary: Vec<Vec<DVector<f64>>>) -> Trajectory {
        let aux = primary.clone();
        Trajectory {
            kind: FlowKind::ConsensusZgs,
            times,
            primary,
            aux,
            primal: None,
            diverged_at: None,
            settled_at: None,
            steps_taken: 0,
            wall_seconds: 0.0,
        }
    }

    fn reference(times: Vec<f64>, x: DVector<f64>) -> ReferenceTrajectory {
        let n = times.len();
        ReferenceTrajectory { times, states: vec![vec![x]; n], multipliers: None, residuals: vec![0.0; n] }
    }

    #[test]
    fn tracking_error_examples() {
        let r = reference(vec![0.0], v(&[0.0]));
        let e = tracking_error(&traj(vec![0.0], vec![vec![v(&[0.1]), v(&[-0.3])]]), &r).unwrap();
        assert_relative_eq!(e[0], 0.2f64.log10(), epsilon = 1e-15);
        let e = tracking_error(&traj(vec![0.0], vec![vec![v(&[0.0]), v(&[0.0])]]), &r).unwrap();
        assert_eq!(e[0], LOG_FLOOR);
        let e = tracking_error(&traj(vec![0.0], vec![vec![v(&[1.0]), v(&[-1.0])]]), &r).unwrap();
        assert_eq!(e[0], 0.0);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let r = reference(vec![0.0, 0.1], v(&[0.0]));
        let t = traj(vec![0.0, 0.2], vec![vec![v(&[0.0])]; 2]);
        assert!(matches!(tracking_error(&t, &r), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn disagreement_examples() {
        let net = Network::new(2, [(0, 1, 1.0)]).unwrap();
        assert_eq!(disagreement(&net, &[v(&[1.0, -2.0]), v(&[0.0, 0.0])]), 3.0);
        assert_eq!(disagreement(&net, &[v(&[0.5, 0.5]), v(&[0.5, 0.5])]), 0.0);
    }

    #[test]
    fn settling_examples() {
        let times: Vec<f64> = (0..=300).map(|k| k as f64 * 0.01).collect();
        let zeros = vec![0.0; times.len()];
        assert_eq!(detect_settling(&times, &zeros, 0.1, 1.0).unwrap(), Some(0.0));
        let ramp: Vec<f64> = times.iter().map(|t| (1.0 - t).max(0.0)).collect();
        let s = detect_settling(&times, &ramp, 0.1, 1.0).unwrap().unwrap();
        assert!((s - 0.9).abs() < 0.01 + 1e-9);
        let band = vec![1e-3; times.len()];
        assert_eq!(detect_settling(&times, &band, 1e-4, 1.0).unwrap(), None);
        assert!(detect_settling(&times, &zeros, 0.1, 5.0).is_err());
        assert!(detect_settling(&times, &zeros, 0.0, 1.0).is_err());
    }

    #[test]
    fn settling_window_must_fit() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        // only below threshold during the last 0.3 s
        let s: Vec<f64> = times.iter().map(|&t| if t >= 0.7 { 0.0 } else { 1.0 }).collect();
        assert_eq!(detect_settling(&times, &s, 0.5, 0.5).unwrap(), None);
    }

    #[test]
    fn constraint_mismatch_of_zero_allocation() {
        use crate::signal::Signal;
        let profiles = vec![
            ResourceProfile::new(vec![Signal::constant(1.0)]).unwrap(),
            ResourceProfile::new(vec![Signal::constant(2.0)]).unwrap(),
        ];
        let mut t = traj(vec![0.0], vec![vec![v(&[0.0]), v(&[0.0])]]);
        t.primal = Some(vec![vec![v(&[0.0]), v(&[0.0])]]);
        assert_eq!(constraint_mismatch(&t, &profiles).unwrap(), vec![3.0]);
        t.primal = None;
        assert!(constraint_mismatch(&t, &profiles).is_err());
    }
}
