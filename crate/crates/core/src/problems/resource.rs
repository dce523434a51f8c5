use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Local demand `d_i(t)` of one agent in the allocation problem, with a
/// declared bound `delta >= sup_t ||d_i'(t)||`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceProfile {
    demand: Vec<Signal>,
    delta: f64,
}

impl ResourceProfile {
    /// Uses the closed-form bound of the demand signals as `delta`.
    pub fn new(demand: Vec<Signal>) -> Result<Self> {
        let delta = demand.iter().map(|s| s.derivative_bound().powi(2)).sum::<f64>().sqrt();
        Self::with_delta(demand, delta)
    }

    /// Declares `delta` explicitly. It must not be smaller than the
    /// closed-form derivative bound's value at sampled times.
    pub fn with_delta(demand: Vec<Signal>, delta: f64) -> Result<Self> {
        if demand.is_empty() {
            return Err(Error::param("demand", "must have at least one component"));
        }
        if demand.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("demand", "signals must be finite"));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::param("delta", format!("must be non-negative, got {delta}")));
        }
        let p = Self { demand, delta };
        for k in 0..=1000 {
            let t = 0.01 * k as f64;
            let rate = p.demand_rate(t).norm();
            if rate > delta + 1e-12 {
                return Err(Error::param(
                    "delta",
                    format!("declared {delta} but ||d'(t)|| = {rate} at t = {t}"),
                ));
            }
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.demand.len()
    }

    pub fn signals(&self) -> &[Signal] {
        &self.demand
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn demand(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.demand.iter().map(|s| s.value(t)))
    }

    pub fn demand_rate(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.demand.iter().map(|s| s.derivative(t)))
    }
}

/// `d(t) = sum_i d_i(t)`.
pub fn total_demand(profiles: &[ResourceProfile], t: f64) -> DVector<f64> {
    let n = profiles.first().map_or(0, ResourceProfile::dim);
    profiles.iter().fold(DVector::zeros(n), |acc, p| acc + p.demand(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_delta_is_checked() {
        let d = vec![Signal::constant(1.0).plus(Signal::sin(1.0, 1.0, 0.3))];
        assert_eq!(ResourceProfile::new(d.clone()).unwrap().delta(), 1.0);
        assert!(ResourceProfile::with_delta(d.clone(), 0.5).is_err());
        assert!(ResourceProfile::with_delta(d, 2.0).is_ok());
    }

    #[test]
    fn total_sums_agents() {
        let ps: Vec<_> = (1..=3)
            .map(|i| ResourceProfile::new(vec![Signal::constant(i as f64)]).unwrap())
            .collect();
        assert_eq!(total_demand(&ps, 0.0)[0], 6.0);
    }
}
