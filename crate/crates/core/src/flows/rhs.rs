use nalgebra::DVector;

use super::{phi, Derivative, ExactReadings, GainSpec, Readings, SolverState};
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::problems::{dual_surfaces, solve_spd, NewtonOptions, ResourceProfile, TvCost};

/// Centralized tracker:
/// `x' = -H(x, t)^{-1} (phi(z) + ∂_t grad f(x, t))`, `z' = -phi(z)`.
pub fn rhs_centralized<M: TvCost + ?Sized>(
    model: &M,
    gain: &GainSpec,
    state: &SolverState,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (x, z, t) = (&state.primary[0], &state.aux[0], state.t);
    let drive = phi(gain, z);
    let rhs = &drive + model.time_partial(x, t);
    let dx = -solve_spd(model.hessian(x, t), &rhs).ok_or(Error::SingularHessian { agent: 0, t })?;
    Ok((dx, -drive))
}

/// `sum_j a_ij sgn(x_i - x_j)` over the given neighbor readings.
pub fn coupling_term(gain: &GainSpec, own: &DVector<f64>, neighbors: &[(f64, DVector<f64>)]) -> DVector<f64> {
    let mut out = DVector::zeros(own.len());
    for (a, xj) in neighbors {
        for k in 0..own.len() {
            out[k] += a * gain.coupling_sign(own[k] - xj[k]);
        }
    }
    out
}

/// One agent's share of the consensus flow. Only the agent's own model and
/// state and its neighbors' readings enter.
pub fn consensus_agent_rhs<M: TvCost + ?Sized>(
    model: &M,
    gain: &GainSpec,
    t: f64,
    x: &DVector<f64>,
    z: &DVector<f64>,
    drift: DVector<f64>,
    neighbors: &[(f64, DVector<f64>)],
) -> Option<(DVector<f64>, DVector<f64>)> {
    let drive = phi(gain, z);
    let rhs = &drive + drift + coupling_term(gain, x, neighbors) * gain.alpha;
    let dx = -solve_spd(model.hessian(x, t), &rhs)?;
    Some((dx, -drive))
}

pub fn rhs_consensus<M: TvCost>(models: &[M], net: &Network, gain: &GainSpec, state: &SolverState) -> Result<Derivative> {
    rhs_consensus_with(models, net, gain, state, &mut ExactReadings)
}

/// Consensus flow
/// `x_i' = -H_i^{-1} (phi(z_i) + ∂_t grad f_i + alpha sum_j a_ij sgn(x_i - x_j))`,
/// `z_i' = -phi(z_i)`, with neighbor and drift readings routed through
/// `readings`. Agents are visited in index order.
pub fn rhs_consensus_with<M: TvCost, R: Readings + ?Sized>(
    models: &[M],
    net: &Network,
    gain: &GainSpec,
    state: &SolverState,
    readings: &mut R,
) -> Result<Derivative> {
    let t = state.t;
    let n = models.len();
    let mut dx = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    for (i, m) in models.iter().enumerate() {
        let x = &state.primary[i];
        let nb: Vec<(f64, DVector<f64>)> = net
            .neighbors(i)
            .iter()
            .map(|&(j, a)| (a, readings.neighbor(i, j, &state.primary[j])))
            .collect();
        let drift = readings.drift(i, m.time_partial(x, t));
        let (a, b) = consensus_agent_rhs(m, gain, t, x, &state.aux[i], drift, &nb)
            .ok_or(Error::SingularHessian { agent: i, t })?;
        dx.push(a);
        dz.push(b);
    }
    Ok(Derivative { primary: dx, aux: dz, primal: None })
}

/// One agent's share of the dual flow:
/// `lam' = -H(x, t) (phi(z) - ∂_t grad g + alpha sum_j a_ij sgn(lam - lam_j))`.
/// The Hessian multiplies; nothing is inverted.
pub fn dual_agent_rhs(
    gain: &GainSpec,
    hessian: &nalgebra::DMatrix<f64>,
    lam: &DVector<f64>,
    z: &DVector<f64>,
    dual_drift: DVector<f64>,
    neighbors: &[(f64, DVector<f64>)],
) -> (DVector<f64>, DVector<f64>) {
    let drive = phi(gain, z);
    let inner = &drive - dual_drift + coupling_term(gain, lam, neighbors) * gain.alpha;
    (-(hessian * inner), -drive)
}

pub fn rhs_dual_dorap<M: TvCost>(
    models: &[M],
    profiles: &[ResourceProfile],
    net: &Network,
    gain: &GainSpec,
    state: &SolverState,
    opts: &NewtonOptions,
) -> Result<Derivative> {
    rhs_dual_dorap_with(models, profiles, net, gain, state, opts, &mut ExactReadings)
}

/// Dual flow for resource allocation. Each agent first recovers
/// `x_i = argmax <lam_i, x> - f_i(x, t)` (warm-started from `state.primal`),
/// then evaluates [`dual_agent_rhs`]. The recovered primals are returned in
/// [`Derivative::primal`].
pub fn rhs_dual_dorap_with<M: TvCost, R: Readings + ?Sized>(
    models: &[M],
    profiles: &[ResourceProfile],
    net: &Network,
    gain: &GainSpec,
    state: &SolverState,
    opts: &NewtonOptions,
    readings: &mut R,
) -> Result<Derivative> {
    let t = state.t;
    let n = models.len();
    let mut dlam = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    for (i, (m, p)) in models.iter().zip(profiles).enumerate() {
        let lam = &state.primary[i];
        let warm = state.primal.as_ref().map(|v| &v[i]);
        let s = dual_surfaces(m, p, lam, t, opts, warm).map_err(|e| match e {
            Error::SingularHessian { t, .. } => Error::SingularHessian { agent: i, t },
            other => other,
        })?;
        let nb: Vec<(f64, DVector<f64>)> = net
            .neighbors(i)
            .iter()
            .map(|&(j, a)| (a, readings.neighbor(i, j, &state.primary[j])))
            .collect();
        let drift = readings.drift(i, s.dual_time_partial);
        let (a, b) = dual_agent_rhs(gain, &s.hessian, lam, &state.aux[i], drift, &nb);
        dlam.push(a);
        dz.push(b);
        xs.push(s.primal);
    }
    Ok(Derivative { primary: dlam, aux: dz, primal: Some(xs) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{AffineDriftQuadratic, CostModel};
    use crate::signal::Signal;

    fn v(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn centralized_tracker_reduces_to_reference_following() {
        // f = 1/2 ||x - r(t)||^2, r = [sin t, cos t]
        let m = AffineDriftQuadratic::diagonal(
            &[1.0, 1.0],
            vec![Signal::sin(-1.0, 1.0, 0.0), Signal::cos(-1.0, 1.0, 0.0)],
            Signal::constant(0.5),
        )
        .unwrap();
        let gain = GainSpec::power_sign(3.0, 0.5, 0.0);
        let t: f64 = 0.7;
        let x = DVector::from_vec(vec![1.2, -0.4]);
        let r = DVector::from_vec(vec![t.sin(), t.cos()]);
        let rdot = DVector::from_vec(vec![t.cos(), -t.sin()]);
        let state = SolverState { t, primary: vec![x.clone()], aux: vec![&x - &r], primal: None };
        let (dx, dz) = rhs_centralized(&m, &gain, &state).unwrap();
        let expected = -phi(&gain, &(&x - &r)) + rdot;
        assert!((dx - expected).norm() < 1e-14);
        assert_eq!(dz, -phi(&gain, &(&x - &r)));
    }

    #[test]
    fn centralized_equilibrium() {
        let m = AffineDriftQuadratic::scalar(2.0, Signal::constant(1.0), Signal::zero()).unwrap();
        let gain = GainSpec::power_sign(1.0, 0.5, 0.0);
        let state = SolverState { t: 3.0, primary: vec![v(-0.5)], aux: vec![v(0.0)], primal: None };
        let (dx, dz) = rhs_centralized(&m, &gain, &state).unwrap();
        assert_eq!(dx[0], 0.0);
        assert_eq!(dz[0], 0.0);
    }

    #[test]
    fn two_agent_coupling_signs() {
        let gain = GainSpec::power_sign(1.0, 0.5, 1.0);
        assert_eq!(coupling_term(&gain, &v(1.0), &[(1.0, v(0.0))])[0], 1.0);
        assert_eq!(coupling_term(&gain, &v(0.0), &[(1.0, v(1.0))])[0], -1.0);
    }

    fn quad(a: f64, b: Signal) -> CostModel {
        AffineDriftQuadratic::scalar(a, b, Signal::zero()).unwrap().into()
    }

    #[test]
    fn static_consensus_equilibrium_at_optimum() {
        // sum_i (a_i x + c_i) = 0 at x* = -sum c / sum a
        let cs = [1.0, -2.0, 0.5];
        let as_ = [1.0, 2.0, 3.0];
        let models: Vec<CostModel> = as_.iter().zip(cs).map(|(&a, c)| quad(a, Signal::constant(c))).collect();
        let net = Network::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let x_star = -cs.iter().sum::<f64>() / as_.iter().sum::<f64>();
        let gain = GainSpec::power_sign(1.0, 0.5, 2.0);
        let state = SolverState { t: 1.0, primary: vec![v(x_star); 3], aux: vec![v(0.0); 3], primal: None };
        let d = rhs_consensus(&models, &net, &gain, &state).unwrap();
        assert!(d.primary.iter().all(|dx| dx[0] == 0.0));
        assert!(d.aux.iter().all(|dz| dz[0] == 0.0));
        // a consensus point off the optimum is not an equilibrium once z
        // carries the gradient sum
        let x_off = x_star + 0.3;
        let aux: Vec<_> = models.iter().map(|m| m.gradient(&v(x_off), 1.0)).collect();
        let state = SolverState { t: 1.0, primary: vec![v(x_off); 3], aux, primal: None };
        let d = rhs_consensus(&models, &net, &gain, &state).unwrap();
        assert!(d.primary.iter().any(|dx| dx[0] != 0.0));
    }

    #[test]
    fn locality_of_consensus_rhs() {
        let models: Vec<CostModel> = (0..4).map(|i| quad(1.0 + i as f64, Signal::sin(1.0, 1.0, 0.0))).collect();
        let net = Network::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let gain = GainSpec::power_sign(2.0, 0.5, 1.5);
        let base = SolverState {
            t: 0.4,
            primary: vec![v(0.1), v(-0.3), v(0.8), v(2.0)],
            aux: vec![v(0.5), v(-0.2), v(0.1), v(0.0)],
            primal: None,
        };
        let d0 = rhs_consensus(&models, &net, &gain, &base).unwrap();
        let mut changed = base.clone();
        changed.primary[3] = v(0.0); // not a neighbor of agent 0
        let d1 = rhs_consensus(&models, &net, &gain, &changed).unwrap();
        assert_eq!(d0.primary[0], d1.primary[0]);
    }

    #[test]
    fn coupling_sums_to_zero() {
        let net = Network::new(4, [(0, 1, 0.5), (0, 2, 2.0), (1, 3, 1.0), (2, 3, 1.5)]).unwrap();
        let gain = GainSpec::power_sign(1.0, 0.5, 1.0);
        let xs = [v(0.3), v(-1.1), v(0.3), v(4.0)];
        let mut total = DVector::zeros(1);
        for i in 0..4 {
            let nb: Vec<_> = net.neighbors(i).iter().map(|&(j, a)| (a, xs[j].clone())).collect();
            total += coupling_term(&gain, &xs[i], &nb);
        }
        assert_eq!(total[0], 0.0);
    }

    #[test]
    fn dual_flow_equilibrium_at_kkt_point() {
        // a_i = 2, b_i = 0, constant demands: lam* = 2 * sum d / N
        let d = [1.0, 2.0, 4.5];
        let models: Vec<CostModel> = (0..3).map(|_| quad(2.0, Signal::zero())).collect();
        let profiles: Vec<_> = d.iter().map(|&c| ResourceProfile::new(vec![Signal::constant(c)]).unwrap()).collect();
        let net = Network::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let lam_star = 2.0 * d.iter().sum::<f64>() / 3.0;
        let gain = GainSpec::power_sign(10.0, 0.5, 5.0);
        let state = SolverState { t: 0.0, primary: vec![v(lam_star); 3], aux: vec![v(0.0); 3], primal: None };
        let out = rhs_dual_dorap(&models, &profiles, &net, &gain, &state, &NewtonOptions::default()).unwrap();
        assert!(out.primary.iter().all(|dl| dl[0] == 0.0));
        let xs = out.primal.unwrap();
        let total: f64 = xs.iter().map(|x| x[0]).sum();
        assert!((total - d.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn dual_flow_drift_term_and_hessian_scaling() {
        let gain = GainSpec::power_sign(1.0, 0.5, 1.0);
        let lam = v(0.4);
        let z = v(0.25);
        let nb = vec![(1.0, v(0.0))];
        let h2 = nalgebra::DMatrix::from_element(1, 1, 2.0);
        let h4 = nalgebra::DMatrix::from_element(1, 1, 4.0);
        let (d2, _) = dual_agent_rhs(&gain, &h2, &lam, &z, v(0.1), &nb);
        let (d4, _) = dual_agent_rhs(&gain, &h4, &lam, &z, v(0.1), &nb);
        assert_eq!(d4[0], 2.0 * d2[0]);

        // inside the full flow the drift is d' + b'/a
        let b = Signal::sin(1.0, 0.3, 0.0);
        let m: Vec<CostModel> = vec![quad(2.0, b.clone())];
        let p = vec![ResourceProfile::new(vec![Signal::sin(1.0, 1.0, 0.2)]).unwrap()];
        let net = Network::new(1, []).unwrap();
        let t = 0.9;
        let state = SolverState { t, primary: vec![lam.clone()], aux: vec![v(0.0)], primal: None };
        let g0 = GainSpec::power_sign(1.0, 0.5, 0.0);
        let out = rhs_dual_dorap(&m, &p, &net, &g0, &state, &NewtonOptions::default()).unwrap();
        let drift = p[0].demand_rate(t)[0] + b.derivative(t) / 2.0;
        assert!((out.primary[0][0] - 2.0 * drift).abs() < 1e-14);
    }
}
