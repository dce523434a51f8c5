use nalgebra::{DMatrix, DVector};

use super::TvCost;
use crate::error::{Error, Result};

/// `sup_u |σ(-u) (1 - u σ(u))|`, rounded up. Multiplies `w ||y0||` in the
/// drift bound of [`TvLogistic`].
pub const LOGISTIC_DRIFT_FACTOR: f64 = 1.09984;

/// Regularised logistic loss on a sample that oscillates in time:
///
/// `f(x, t) = log(1 + exp(-l y(t)^T x)) + beta/2 ||x||^2`,
/// `y(t) = (1 + sin(w t)) y0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TvLogistic {
    label: f64,
    y0: DVector<f64>,
    freq: f64,
    beta: f64,
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn softplus(u: f64) -> f64 {
    // log(1 + e^u)
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

impl TvLogistic {
    pub fn new(label: f64, y0: DVector<f64>, freq: f64, beta: f64) -> Result<Self> {
        if label != 1.0 && label != -1.0 {
            return Err(Error::param("label", format!("must be +1 or -1, got {label}")));
        }
        if y0.is_empty() || y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("y0", "must be a non-empty finite vector"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::param("beta", format!("must be positive, got {beta}")));
        }
        if !freq.is_finite() {
            return Err(Error::param("w", "must be finite"));
        }
        Ok(Self { label, y0, freq, beta })
    }

    pub fn label(&self) -> f64 {
        self.label
    }

    pub fn y0(&self) -> &DVector<f64> {
        &self.y0
    }

    pub fn freq(&self) -> f64 {
        self.freq
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sample(&self, t: f64) -> DVector<f64> {
        &self.y0 * (1.0 + (self.freq * t).sin())
    }

    fn sample_rate(&self, t: f64) -> DVector<f64> {
        &self.y0 * (self.freq * (self.freq * t).cos())
    }

    fn margin(&self, x: &DVector<f64>, t: f64) -> f64 {
        self.label * self.sample(t).dot(x)
    }
}

impl TvCost for TvLogistic {
    fn dim(&self) -> usize {
        self.y0.len()
    }

    fn value(&self, x: &DVector<f64>, t: f64) -> f64 {
        softplus(-self.margin(x, t)) + 0.5 * self.beta * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        let u = self.margin(x, t);
        self.sample(t) * (-self.label * sigmoid(-u)) + x * self.beta
    }

    fn hessian(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64> {
        let u = self.margin(x, t);
        let y = self.sample(t);
        let n = self.dim();
        &y * y.transpose() * (sigmoid(u) * sigmoid(-u)) + DMatrix::identity(n, n) * self.beta
    }

    fn time_partial(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        let u = self.margin(x, t);
        let ydot = self.sample_rate(t);
        let s = sigmoid(u) * sigmoid(-u);
        &ydot * (-self.label * sigmoid(-u)) + self.sample(t) * (s * ydot.dot(x))
    }

    fn theta_lo(&self) -> f64 {
        self.beta
    }

    /// `beta + max_t ||y(t)||^2 / 4` with `max_t (1 + sin) = 2`.
    fn theta_hi(&self) -> f64 {
        self.beta + self.y0.norm_squared()
    }

    fn kappa(&self) -> Option<f64> {
        Some(self.freq.abs() * self.y0.norm() * LOGISTIC_DRIFT_FACTOR)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_factor_upper_bounds_its_supremum() {
        let mut best: f64 = 0.0;
        let steps = 2_000_000;
        for k in 0..=steps {
            let u = -40.0 + 80.0 * k as f64 / steps as f64;
            best = best.max((sigmoid(-u) * (1.0 - u * sigmoid(u))).abs());
        }
        assert!(best <= LOGISTIC_DRIFT_FACTOR);
        assert!(LOGISTIC_DRIFT_FACTOR - best < 1e-4);
    }

    #[test]
    fn zero_sample_is_pure_regularizer() {
        let m = TvLogistic::new(1.0, DVector::zeros(2), 0.3, 2.5).unwrap();
        let x = DVector::from_vec(vec![0.4, -1.2]);
        assert_eq!(m.gradient(&x, 1.7), &x * 2.5);
        assert_eq!(m.hessian(&x, 1.7), DMatrix::identity(2, 2) * 2.5);
        assert_eq!(m.time_partial(&x, 1.7), DVector::zeros(2));
    }

    #[test]
    fn sample_law() {
        let w = std::f64::consts::PI / 10.0;
        let m = TvLogistic::new(-1.0, DVector::from_vec(vec![0.3, 0.8]), w, 1.0).unwrap();
        for k in 0..10 {
            let t = 0.5 * k as f64;
            let ratio = m.sample(t)[1] / 0.8;
            assert!((ratio - (1.0 + (w * t).sin())).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TvLogistic::new(0.5, DVector::zeros(2), 1.0, 1.0).is_err());
        assert!(TvLogistic::new(1.0, DVector::zeros(2), 1.0, 0.0).is_err());
        assert!(TvLogistic::new(1.0, DVector::zeros(0), 1.0, 1.0).is_err());
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
    }
}
