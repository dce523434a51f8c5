use nalgebra::{DMatrix, DVector};

use super::TvCost;
use crate::error::{Error, Result};
use crate::graph::sorted_eigenvalues;
use crate::signal::Signal;

/// Time-dependent constant term of a quadratic. It only affects `f`'s value.
#[derive(Debug, Clone, PartialEq)]
pub enum Offset {
    Signal(Signal),
    /// `sum_k s_k(t)^2 / 2`, the constant left over when expanding
    /// `||A x + b(t)||^2 / 2`.
    HalfSquare(Vec<Signal>),
}

impl Offset {
    fn value(&self, t: f64) -> f64 {
        match self {
            Offset::Signal(s) => s.value(t),
            Offset::HalfSquare(v) => v.iter().map(|s| 0.5 * s.value(t).powi(2)).sum(),
        }
    }
}

/// `f(x, t) = 1/2 x^T A x + b(t)^T x + c(t)` with constant SPD curvature `A`.
///
/// Covers both `(a x + b(t))^2 / 2` ([`AffineDriftQuadratic::squared_affine`])
/// and `a x^2 / 2 + b(t) x + c(t)` ([`AffineDriftQuadratic::scalar`]).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDriftQuadratic {
    curvature: DMatrix<f64>,
    drift: Vec<Signal>,
    offset: Offset,
    theta_lo: f64,
    theta_hi: f64,
    kappa: f64,
}

impl AffineDriftQuadratic {
    pub fn new(curvature: DMatrix<f64>, drift: Vec<Signal>, offset: Offset) -> Result<Self> {
        let n = curvature.nrows();
        if n == 0 || curvature.ncols() != n {
            return Err(Error::param("curvature", "must be a non-empty square matrix"));
        }
        if drift.len() != n {
            return Err(Error::Dimension { expected: n, got: drift.len() });
        }
        if curvature.iter().any(|v| !v.is_finite()) || drift.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("curvature", "entries must be finite"));
        }
        if (&curvature - curvature.transpose()).amax() > 1e-12 * (1.0 + curvature.amax()) {
            return Err(Error::param("curvature", "must be symmetric"));
        }
        let eig = sorted_eigenvalues(curvature.clone());
        let (lo, hi) = (eig[0], eig[n - 1]);
        if lo <= 0.0 {
            return Err(Error::param("curvature", format!("must be positive definite (min eigenvalue {lo})")));
        }
        let kappa = drift.iter().map(|s| s.derivative_bound().powi(2)).sum::<f64>().sqrt();
        Ok(Self { curvature, drift, offset, theta_lo: lo, theta_hi: hi, kappa })
    }

    /// Scalar `a x^2 / 2 + b(t) x + c(t)`.
    pub fn scalar(a: f64, b: Signal, c: Signal) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, a), vec![b], Offset::Signal(c))
    }

    /// Scalar `(a x + b(t))^2 / 2`.
    pub fn squared_affine(a: f64, b: Signal) -> Result<Self> {
        if a == 0.0 {
            return Err(Error::param("a", "must be nonzero"));
        }
        Self::new(DMatrix::from_element(1, 1, a * a), vec![b.scaled(a)], Offset::HalfSquare(vec![b]))
    }

    /// Diagonal curvature with one drift signal per coordinate.
    pub fn diagonal(curvature: &[f64], drift: Vec<Signal>, offset: Signal) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(curvature)),
            drift,
            Offset::Signal(offset),
        )
    }

    pub fn curvature(&self) -> &DMatrix<f64> {
        &self.curvature
    }

    pub fn drift(&self) -> &[Signal] {
        &self.drift
    }

    pub fn offset(&self) -> &Offset {
        &self.offset
    }

    pub fn drift_at(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.drift.len(), self.drift.iter().map(|s| s.value(t)))
    }

    pub fn drift_rate_at(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.drift.len(), self.drift.iter().map(|s| s.derivative(t)))
    }
}

impl TvCost for AffineDriftQuadratic {
    fn dim(&self) -> usize {
        self.drift.len()
    }

    fn value(&self, x: &DVector<f64>, t: f64) -> f64 {
        0.5 * x.dot(&(&self.curvature * x)) + self.drift_at(t).dot(x) + self.offset.value(t)
    }

    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        &self.curvature * x + self.drift_at(t)
    }

    fn hessian(&self, _x: &DVector<f64>, _t: f64) -> DMatrix<f64> {
        self.curvature.clone()
    }

    fn time_partial(&self, _x: &DVector<f64>, t: f64) -> DVector<f64> {
        self.drift_rate_at(t)
    }

    fn theta_lo(&self) -> f64 {
        self.theta_lo
    }

    fn theta_hi(&self) -> f64 {
        self.theta_hi
    }

    fn kappa(&self) -> Option<f64> {
        Some(self.kappa)
    }

    fn conjugate_closed_form(&self, lam: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        super::solve_spd(self.curvature.clone(), &(lam - self.drift_at(t)))
    }
}
