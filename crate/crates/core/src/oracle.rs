//! Ground truth for the flows: the instantaneous optimizer `x*(t)` of
//! `sum_i f_i(x, t)`, the optimal allocation and multiplier of the resource
//! allocation problem, and closed-form settling times of `z' = -a sgn^{1-p}(z)`.
//!
//! Nothing here touches [`crate::flows`]; the solvers only use the cost
//! surfaces, so they serve as an independent cross-check.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::{conjugate_argmax, solve_spd, total_demand, NewtonOptions, ResourceProfile, TvCost};

/// Newton stopping tolerance, relative to the size of the summed terms.
pub const ORACLE_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusSolution {
    pub x: DVector<f64>,
    /// `|| sum_i grad f_i(x, t) ||` at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton on `sum_i grad f_i(x, t) = 0`, started from `warm` (or the
/// origin). Converged once the residual is below
/// `ORACLE_TOL * (1 + sum_i ||grad f_i(x, t)||)`.
pub fn consensus_optimum<M: TvCost>(models: &[M], t: f64, warm: Option<&DVector<f64>>) -> Result<ConsensusSolution> {
    let first = models.first().ok_or(Error::param("models", "at least one agent required"))?;
    let n = first.dim();
    if let Some(m) = models.iter().find(|m| m.dim() != n) {
        return Err(Error::Dimension { expected: n, got: m.dim() });
    }
    let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
    if x.len() != n {
        return Err(Error::Dimension { expected: n, got: x.len() });
    }
    let total = |x: &DVector<f64>| models.iter().map(|m| m.value(x, t)).sum::<f64>();
    let grad = |x: &DVector<f64>| {
        let mut g = DVector::zeros(n);
        let mut scale = 0.0;
        for m in models {
            let gi = m.gradient(x, t);
            scale += gi.norm();
            g += gi;
        }
        (g, scale)
    };
    let mut history = Vec::new();
    for it in 0..MAX_ITER {
        let (g, scale) = grad(&x);
        let gn = g.norm();
        history.push(gn);
        if !gn.is_finite() {
            return Err(Error::NonFinite { x: x.iter().copied().collect(), t });
        }
        if gn <= ORACLE_TOL * (1.0 + scale) {
            return Ok(ConsensusSolution { x, residual: gn, iterations: it });
        }
        let mut h = DMatrix::zeros(n, n);
        for m in models {
            h += m.hessian(&x, t);
        }
        let step = solve_spd(h, &g).ok_or(Error::SingularHessian { agent: 0, t })?;
        let f0 = total(&x);
        let slope = -g.dot(&step);
        let mut s = 1.0;
        loop {
            let trial = &x - &step * s;
            let ok = total(&trial) <= f0 + 1e-4 * s * slope || grad(&trial).0.norm() < gn;
            if ok || s < 1e-12 {
                x = trial;
                break;
            }
            s *= 0.5;
        }
    }
    let residual = grad(&x).0.norm();
    Err(Error::NoConvergence { iterations: MAX_ITER, residual, history })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DorapSolution {
    pub lam: DVector<f64>,
    pub x: Vec<DVector<f64>>,
    /// `|| sum_i x_i - d(t) ||`.
    pub feasibility: f64,
    /// `max_i || grad f_i(x_i, t) - lam ||`.
    pub stationarity: f64,
    pub iterations: usize,
}

impl DorapSolution {
    pub fn kkt_residual(&self) -> f64 {
        self.feasibility.max(self.stationarity)
    }
}

fn allocation<M: TvCost>(
    models: &[M],
    lam: &DVector<f64>,
    t: f64,
    opts: &NewtonOptions,
    warm: Option<&[DVector<f64>]>,
) -> Result<Vec<DVector<f64>>> {
    models
        .iter()
        .enumerate()
        .map(|(i, m)| conjugate_argmax(m, lam, t, opts, warm.map(|w| &w[i])))
        .collect()
}

fn sum(vs: &[DVector<f64>], n: usize) -> DVector<f64> {
    vs.iter().fold(DVector::zeros(n), |acc, v| acc + v)
}

/// Solves `sum_i (d_i(t) - x_i(lam, t)) = 0` for the common multiplier, where
/// `x_i(lam, t)` maximises `<lam, x> - f_i(x, t)`. Newton uses the Jacobian
/// `-sum_i H_i^{-1}`; scalar problems fall back to bisection if Newton stalls.
pub fn dorap_optimum<M: TvCost>(
    models: &[M],
    profiles: &[ResourceProfile],
    t: f64,
    warm: Option<&DVector<f64>>,
) -> Result<DorapSolution> {
    let first = models.first().ok_or(Error::param("models", "at least one agent required"))?;
    let n = first.dim();
    if profiles.len() != models.len() {
        return Err(Error::Dimension { expected: models.len(), got: profiles.len() });
    }
    if let Some(p) = profiles.iter().find(|p| p.dim() != n) {
        return Err(Error::Dimension { expected: n, got: p.dim() });
    }
    let opts = NewtonOptions { tol: 1e-14, ..NewtonOptions::default() };
    let d = total_demand(profiles, t);
    let tol = 1e-12 * (1.0 + d.norm());
    let mut lam = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
    let mut xs = allocation(models, &lam, t, &opts, None)?;
    let mut history = Vec::new();
    let mut iterations = 0;
    let converged = loop {
        let r = &d - sum(&xs, n);
        let rn = r.norm();
        history.push(rn);
        if rn <= tol {
            break true;
        }
        if iterations == MAX_ITER || !rn.is_finite() {
            break false;
        }
        iterations += 1;
        // J = -sum H_i^{-1}; Newton step lam <- lam - J^{-1} r = lam + (sum H_i^{-1})^{-1} r
        let mut hinv = DMatrix::zeros(n, n);
        for (i, (m, x)) in models.iter().zip(&xs).enumerate() {
            let h = m.hessian(x, t);
            let inv = h.try_inverse().ok_or(Error::SingularHessian { agent: i, t })?;
            hinv += inv;
        }
        let step = solve_spd(hinv, &r).ok_or(Error::SingularHessian { agent: 0, t })?;
        let mut s = 1.0;
        loop {
            let trial = &lam + &step * s;
            let txs = allocation(models, &trial, t, &opts, Some(&xs))?;
            let tn = (&d - sum(&txs, n)).norm();
            if tn < rn || s < 1e-12 {
                lam = trial;
                xs = txs;
                break;
            }
            s *= 0.5;
        }
    };
    if !converged {
        if n != 1 {
            let residual = history.last().copied().unwrap_or(f64::NAN);
            return Err(Error::NoConvergence { iterations, residual, history });
        }
        lam = bisect_scalar(models, &d, t, &opts)?;
        xs = allocation(models, &lam, t, &opts, None)?;
    }
    let feasibility = (sum(&xs, n) - &d).norm();
    let stationarity = models
        .iter()
        .zip(&xs)
        .map(|(m, x)| (m.gradient(x, t) - &lam).norm())
        .fold(0.0, f64::max);
    Ok(DorapSolution { lam, x: xs, feasibility, stationarity, iterations })
}

/// `sum_i x_i(lam)` is increasing in scalar `lam`, so the root of
/// `d - sum_i x_i(lam)` can always be bracketed.
fn bisect_scalar<M: TvCost>(models: &[M], d: &DVector<f64>, t: f64, opts: &NewtonOptions) -> Result<DVector<f64>> {
    let r = |l: f64| -> Result<f64> {
        let xs = allocation(models, &DVector::from_element(1, l), t, opts, None)?;
        Ok(d[0] - xs.iter().map(|x| x[0]).sum::<f64>())
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut expansions = 0;
    while r(lo)? < 0.0 || r(hi)? > 0.0 {
        lo *= 2.0;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::NoConvergence { iterations: expansions, residual: f64::NAN, history: Vec::new() });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if r(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DVector::from_element(1, 0.5 * (lo + hi)))
}

/// Time for `z' = -a sgn^{1-p}(z)` to reach zero from `z0`: the largest
/// componentwise `|z0_j|^p / (a p)`.
pub fn analytic_settling_time(z0: &DVector<f64>, a: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("must lie in (0, 1], got {p}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("a", format!("must be positive, got {a}")));
    }
    Ok(z0.iter().map(|z| z.abs().powf(p) / (a * p)).fold(0.0, f64::max))
}

/// Oracle samples on a time grid. For the consensus problem every sample has
/// one shared optimizer; for resource allocation one allocation per agent
/// plus the multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub times: Vec<f64>,
    /// `states[k]` has length 1 (shared `x*`) or `N` (per-agent `x_i*`).
    pub states: Vec<Vec<DVector<f64>>>,
    pub multipliers: Option<Vec<DVector<f64>>>,
    pub residuals: Vec<f64>,
}

impl ReferenceTrajectory {
    /// Reference for agent `i` at sample `k`.
    pub fn agent(&self, k: usize, i: usize) -> &DVector<f64> {
        let s = &self.states[k];
        if s.len() == 1 {
            &s[0]
        } else {
            &s[i]
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let Some(first) = self.states.first() else {
            out.write_record(["t", "residual"])?;
            out.flush()?;
            return Ok(());
        };
        let d = first[0].len();
        let mut header = vec!["t".to_string()];
        if first.len() == 1 {
            header.extend((1..=d).map(|c| format!("xstar_{c}")));
        } else {
            for i in 1..=first.len() {
                header.extend((1..=d).map(|c| format!("xstar{i}_{c}")));
            }
        }
        if self.multipliers.is_some() {
            header.extend((1..=d).map(|c| format!("lamstar_{c}")));
        }
        header.push("residual".into());
        out.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![self.times[k]];
            for s in &self.states[k] {
                row.extend(s.iter());
            }
            if let Some(l) = &self.multipliers {
                row.extend(l[k].iter());
            }
            row.push(self.residuals[k]);
            out.write_record(row.iter().map(f64::to_string))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `x*(t)` on `times`, serially, each sample warm-started from the previous.
pub fn consensus_reference<M: TvCost>(models: &[M], times: &[f64]) -> Result<ReferenceTrajectory> {
    let mut states = Vec::with_capacity(times.len());
    let mut residuals = Vec::with_capacity(times.len());
    let mut warm: Option<DVector<f64>> = None;
    for &t in times {
        let sol = consensus_optimum(models, t, warm.as_ref())?;
        residuals.push(sol.residual);
        warm = Some(sol.x.clone());
        states.push(vec![sol.x]);
    }
    Ok(ReferenceTrajectory { times: times.to_vec(), states, multipliers: None, residuals })
}

/// Same samples as [`consensus_reference`], solved in parallel from cold
/// starts.
pub fn consensus_reference_parallel<M: TvCost>(models: &[M], times: &[f64]) -> Result<ReferenceTrajectory> {
    let sols: Vec<ConsensusSolution> =
        times.par_iter().map(|&t| consensus_optimum(models, t, None)).collect::<Result<_>>()?;
    Ok(ReferenceTrajectory {
        times: times.to_vec(),
        residuals: sols.iter().map(|s| s.residual).collect(),
        states: sols.into_iter().map(|s| vec![s.x]).collect(),
        multipliers: None,
    })
}

/// `(lam*(t), x_i*(t))` on `times`, warm-started serially. Residuals are the
/// KKT residuals.
pub fn dorap_reference<M: TvCost>(
    models: &[M],
    profiles: &[ResourceProfile],
    times: &[f64],
) -> Result<ReferenceTrajectory> {
    let mut states = Vec::with_capacity(times.len());
    let mut lams = Vec::with_capacity(times.len());
    let mut residuals = Vec::with_capacity(times.len());
    let mut warm: Option<DVector<f64>> = None;
    for &t in times {
        let sol = dorap_optimum(models, profiles, t, warm.as_ref())?;
        residuals.push(sol.kkt_residual());
        warm = Some(sol.lam.clone());
        lams.push(sol.lam);
        states.push(sol.x);
    }
    Ok(ReferenceTrajectory { times: times.to_vec(), states, multipliers: Some(lams), residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{AffineDriftQuadratic, TvLogistic};
    use crate::signal::Signal;
    use approx::assert_relative_eq;

    fn s(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn weighted_mean_of_targets() {
        // f_i = a_i/2 (x - r_i)^2  ->  x* = sum a_i r_i / sum a_i
        let a = [1.0, 2.0, 5.0];
        let r = [0.3, -1.0, 2.0];
        let models: Vec<_> = a
            .iter()
            .zip(&r)
            .map(|(&a, &r)| AffineDriftQuadratic::scalar(a, Signal::constant(-a * r), Signal::zero()).unwrap())
            .collect();
        let x = consensus_optimum(&models, 0.0, None).unwrap().x;
        let expected = a.iter().zip(&r).map(|(a, r)| a * r).sum::<f64>() / a.iter().sum::<f64>();
        assert_relative_eq!(x[0], expected, epsilon = 1e-14);
    }

    #[test]
    fn single_agent_stationarity() {
        let m = AffineDriftQuadratic::scalar(4.0, Signal::sin(2.0, 1.0, 0.0), Signal::zero()).unwrap();
        let t = 0.7;
        let x = consensus_optimum(std::slice::from_ref(&m), t, None).unwrap().x;
        assert_relative_eq!(x[0], -2.0 * t.sin() / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn logistic_pair_matches_grid_search() {
        let models = vec![
            TvLogistic::new(1.0, DVector::from_vec(vec![0.4, 0.7]), 0.3, 2.0).unwrap(),
            TvLogistic::new(-1.0, DVector::from_vec(vec![0.9, 0.1]), 0.3, 3.0).unwrap(),
        ];
        let x = consensus_optimum(&models, 1.0, None).unwrap().x;
        let f = |u: f64, v: f64| {
            let p = DVector::from_vec(vec![u, v]);
            models.iter().map(|m| m.value(&p, 1.0)).sum::<f64>()
        };
        let (mut cu, mut cv, mut w) = (0.0, 0.0, 2.0);
        for _ in 0..40 {
            let mut best = (f64::INFINITY, cu, cv);
            for i in -10..=10 {
                for j in -10..=10 {
                    let (u, v) = (cu + w * i as f64 / 10.0, cv + w * j as f64 / 10.0);
                    let val = f(u, v);
                    if val < best.0 {
                        best = (val, u, v);
                    }
                }
            }
            (cu, cv) = (best.1, best.2);
            w *= 0.5;
        }
        assert!((x[0] - cu).abs() < 1e-6 && (x[1] - cv).abs() < 1e-6);
    }

    #[test]
    fn two_agent_allocation_by_hand() {
        // lam/1 + lam/2 = 3 -> lam = 2, x = (2, 1)
        let models = vec![
            AffineDriftQuadratic::scalar(1.0, Signal::zero(), Signal::zero()).unwrap(),
            AffineDriftQuadratic::scalar(2.0, Signal::zero(), Signal::zero()).unwrap(),
        ];
        let profiles = vec![
            ResourceProfile::new(vec![Signal::constant(3.0)]).unwrap(),
            ResourceProfile::new(vec![Signal::zero()]).unwrap(),
        ];
        let sol = dorap_optimum(&models, &profiles, 0.0, None).unwrap();
        assert_relative_eq!(sol.lam[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(sol.x[0][0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(sol.x[1][0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_agents_split_evenly() {
        let m = AffineDriftQuadratic::scalar(3.0, Signal::zero(), Signal::zero()).unwrap();
        let models = vec![m; 4];
        let profiles: Vec<_> = (0..4)
            .map(|i| ResourceProfile::new(vec![Signal::constant(i as f64).plus(Signal::sin(1.0, 1.0, 0.0))]).unwrap())
            .collect();
        let t = 0.4;
        let sol = dorap_optimum(&models, &profiles, t, None).unwrap();
        let d = total_demand(&profiles, t)[0];
        for x in &sol.x {
            assert_relative_eq!(x[0], d / 4.0, epsilon = 1e-12);
        }
        assert!(sol.kkt_residual() <= 1e-10);
    }

    #[test]
    fn logistic_allocation_kkt() {
        let models = vec![
            TvLogistic::new(1.0, DVector::from_vec(vec![0.4, 0.7]), 0.3, 2.0).unwrap(),
            TvLogistic::new(-1.0, DVector::from_vec(vec![0.9, 0.1]), 0.3, 3.0).unwrap(),
        ];
        let profiles = vec![
            ResourceProfile::new(vec![Signal::constant(1.0), Signal::sin(1.0, 1.0, 0.0)]).unwrap(),
            ResourceProfile::new(vec![Signal::constant(-0.5), Signal::constant(2.0)]).unwrap(),
        ];
        let sol = dorap_optimum(&models, &profiles, 1.3, None).unwrap();
        assert!(sol.kkt_residual() <= 1e-10, "{sol:?}");
    }

    #[test]
    fn bisection_fallback_agrees_with_newton() {
        let models = vec![
            AffineDriftQuadratic::scalar(1.0, Signal::constant(0.5), Signal::zero()).unwrap(),
            AffineDriftQuadratic::scalar(4.0, Signal::zero(), Signal::zero()).unwrap(),
        ];
        let d = s(7.0);
        let lam = bisect_scalar(&models, &d, 0.0, &NewtonOptions::default()).unwrap();
        let profiles = vec![
            ResourceProfile::new(vec![Signal::constant(7.0)]).unwrap(),
            ResourceProfile::new(vec![Signal::zero()]).unwrap(),
        ];
        let sol = dorap_optimum(&models, &profiles, 0.0, None).unwrap();
        assert_relative_eq!(lam[0], sol.lam[0], epsilon = 1e-10);
    }

    #[test]
    fn settling_times() {
        assert_eq!(analytic_settling_time(&s(1.0), 1.0, 0.5).unwrap(), 2.0);
        assert_eq!(analytic_settling_time(&s(0.0), 1.0, 0.5).unwrap(), 0.0);
        let t1 = analytic_settling_time(&DVector::from_vec(vec![1.0, -0.5]), 2.0, 0.5).unwrap();
        let t4 = analytic_settling_time(&DVector::from_vec(vec![4.0, -2.0]), 2.0, 0.5).unwrap();
        assert_relative_eq!(t4, 2.0 * t1, epsilon = 1e-15);
        assert!(analytic_settling_time(&s(1.0), 1.0, 0.0).is_err());
        assert!(analytic_settling_time(&s(1.0), 1.0, 1.5).is_err());
    }

    #[test]
    fn serial_and_parallel_references_agree() {
        let models = vec![
            TvLogistic::new(1.0, DVector::from_vec(vec![0.4, 0.7]), 0.3, 2.0).unwrap(),
            TvLogistic::new(-1.0, DVector::from_vec(vec![0.9, 0.1]), 0.3, 3.0).unwrap(),
        ];
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.25).collect();
        let a = consensus_reference(&models, &times).unwrap();
        let b = consensus_reference_parallel(&models, &times).unwrap();
        for k in 0..times.len() {
            assert!((a.agent(k, 0) - b.agent(k, 1)).norm() < 1e-11);
        }
        assert!(a.max_residual() < 1e-10);
    }
}
