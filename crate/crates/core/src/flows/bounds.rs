//! Lower bounds on the coupling gain `alpha` that guarantee finite-time
//! consensus. Each returns the threshold; the gain must strictly exceed it.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problems::{solve_spd, TvCost};

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be non-negative, got {v}")))
    }
}

/// `kappa * sqrt(N theta_hi / (theta_lo lambda2))` for the consensus flow
/// with non-identical Hessians.
pub fn gain_bound_consensus(kappa: f64, n: usize, theta_hi: f64, theta_lo: f64, lambda2: f64) -> Result<f64> {
    non_negative("kappa", kappa)?;
    positive("N", n as f64)?;
    positive("theta_hi", theta_hi)?;
    positive("theta_lo", theta_lo)?;
    positive("lambda2", lambda2)?;
    Ok(kappa * (n as f64 * theta_hi / (theta_lo * lambda2)).sqrt())
}

/// `m varpi a_bar theta_hi / lambda2`, the bound under the relaxed
/// assumption that normalised drifts differ by at most `varpi` in 1-norm.
pub fn gain_bound_relaxed(m: usize, varpi: f64, a_bar: f64, theta_hi: f64, lambda2: f64) -> Result<f64> {
    positive("m", m as f64)?;
    non_negative("varpi", varpi)?;
    positive("a_bar", a_bar)?;
    positive("theta_hi", theta_hi)?;
    positive("lambda2", lambda2)?;
    Ok(m as f64 * varpi * a_bar * theta_hi / lambda2)
}

/// `(kappa / theta_lo + delta) sqrt(N theta_hi / (theta_lo lambda2))` for the
/// dual resource-allocation flow.
pub fn gain_bound_dorap(
    kappa: f64,
    delta: f64,
    theta_lo: f64,
    theta_hi: f64,
    n: usize,
    lambda2: f64,
) -> Result<f64> {
    non_negative("kappa", kappa)?;
    non_negative("delta", delta)?;
    positive("theta_lo", theta_lo)?;
    gain_bound_consensus(kappa / theta_lo + delta, n, theta_hi, theta_lo, lambda2)
}

/// Bound `kappa * sqrt(2N / lambda2)` of the earlier distributed average
/// tracking analysis, for comparison at `theta_hi = theta_lo = 1`.
pub fn gain_bound_average_tracking(kappa: f64, n: usize, lambda2: f64) -> Result<f64> {
    non_negative("kappa", kappa)?;
    positive("N", n as f64)?;
    positive("lambda2", lambda2)?;
    Ok(kappa * (2.0 * n as f64 / lambda2).sqrt())
}

/// Empirical estimate of `varpi`: the largest 1-norm gap between
/// `H_i^{-1} ∂/∂t grad f_i` of any two agents over the supplied sample
/// points `(x_1..x_N, t)`. This is an estimate, not a certificate.
pub fn estimate_varpi<M: TvCost>(models: &[M], samples: &[(Vec<DVector<f64>>, f64)]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (xs, t) in samples {
        if xs.len() != models.len() {
            return Err(Error::Dimension { expected: models.len(), got: xs.len() });
        }
        let mut v = Vec::with_capacity(models.len());
        for (agent, (m, x)) in models.iter().zip(xs).enumerate() {
            let w = solve_spd(m.hessian(x, *t), &m.time_partial(x, *t))
                .ok_or(Error::SingularHessian { agent, t: *t })?;
            v.push(w);
        }
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                best = best.max((&v[i] - &v[j]).lp_norm(1));
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::AffineDriftQuadratic;
    use crate::signal::Signal;

    #[test]
    fn plug_in_values() {
        assert_eq!(gain_bound_consensus(1.0, 4, 1.0, 1.0, 2.0).unwrap(), 2f64.sqrt());
        assert_eq!(gain_bound_consensus(0.0, 4, 1.0, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(gain_bound_relaxed(3, 1.0, 1.0, 2.0, 3.0).unwrap(), 2.0);
        assert_eq!(gain_bound_relaxed(3, 0.0, 1.0, 2.0, 3.0).unwrap(), 0.0);
        assert_eq!(
            gain_bound_relaxed(3, 1.0, 2.0, 2.0, 3.0).unwrap(),
            2.0 * gain_bound_relaxed(3, 1.0, 1.0, 2.0, 3.0).unwrap()
        );
        assert_eq!(gain_bound_dorap(0.0, 1.0, 1.0, 1.0, 4, 2.0).unwrap(), 2f64.sqrt());
        assert_eq!(gain_bound_dorap(0.0, 0.0, 1.0, 1.0, 4, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(gain_bound_consensus(-1.0, 4, 1.0, 1.0, 2.0).is_err());
        assert!(gain_bound_consensus(1.0, 0, 1.0, 1.0, 2.0).is_err());
        assert!(gain_bound_consensus(1.0, 4, 1.0, 0.0, 2.0).is_err());
        assert!(gain_bound_relaxed(0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(gain_bound_dorap(1.0, -0.1, 1.0, 1.0, 4, 2.0).is_err());
        assert!(gain_bound_dorap(1.0, 0.1, 1.0, 1.0, 4, f64::NAN).is_err());
    }

    #[test]
    fn varpi_of_identical_drifts_is_zero() {
        let m = AffineDriftQuadratic::scalar(2.0, Signal::sin(1.0, 1.0, 0.0), Signal::zero()).unwrap();
        let models = vec![m.clone(), m];
        let samples: Vec<_> = (0..5)
            .map(|k| (vec![DVector::from_element(1, 0.1), DVector::from_element(1, -0.4)], k as f64))
            .collect();
        assert_eq!(estimate_varpi(&models, &samples).unwrap(), 0.0);
    }

    #[test]
    fn varpi_of_scalar_quadratics() {
        // H^{-1} b'(t): 1/1 * cos(t) vs 1/2 * 0  -> max |cos t| at t = 0
        let models = vec![
            AffineDriftQuadratic::scalar(1.0, Signal::sin(1.0, 1.0, 0.0), Signal::zero()).unwrap(),
            AffineDriftQuadratic::scalar(2.0, Signal::zero(), Signal::zero()).unwrap(),
        ];
        let samples = vec![(vec![DVector::zeros(1), DVector::zeros(1)], 0.0)];
        assert_eq!(estimate_varpi(&models, &samples).unwrap(), 1.0);
    }
}
