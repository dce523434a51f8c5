//! Time-varying cost functions `f_i(x, t)` and the problem families used by
//! the flows: drift-affine quadratics, time-varying logistic regression and
//! resource-demand profiles for the allocation problem.

mod conjugate;
mod logistic;
pub mod probe;
mod quadratic;
mod resource;

pub use conjugate::{conjugate_argmax, dual_surfaces, DualSurfaces, NewtonOptions};
pub use logistic::{TvLogistic, LOGISTIC_DRIFT_FACTOR};
pub use quadratic::{AffineDriftQuadratic, Offset};
pub use resource::{total_demand, ResourceProfile};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A time-varying, twice differentiable cost `f(x, t)` on `R^n`.
///
/// Implementors promise `theta_lo * I <= H(x, t) <= theta_hi * I` and, when
/// `kappa` is declared, `|| d/dt grad f(x, t) || <= kappa` everywhere.
pub trait TvCost: std::fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>, t: f64) -> f64;
    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64>;
    /// `∂/∂t ∇f(x, t)`.
    fn time_partial(&self, x: &DVector<f64>, t: f64) -> DVector<f64>;
    fn theta_lo(&self) -> f64;
    fn theta_hi(&self) -> f64;
    fn kappa(&self) -> Option<f64>;

    /// Closed-form `argmax_x <lam, x> - f(x, t)` when the family has one.
    fn conjugate_closed_form(&self, _lam: &DVector<f64>, _t: f64) -> Option<DVector<f64>> {
        None
    }
}

impl<T: TvCost + ?Sized> TvCost for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DVector<f64>, t: f64) -> f64 {
        (**self).value(x, t)
    }
    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        (**self).gradient(x, t)
    }
    fn hessian(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64> {
        (**self).hessian(x, t)
    }
    fn time_partial(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        (**self).time_partial(x, t)
    }
    fn theta_lo(&self) -> f64 {
        (**self).theta_lo()
    }
    fn theta_hi(&self) -> f64 {
        (**self).theta_hi()
    }
    fn kappa(&self) -> Option<f64> {
        (**self).kappa()
    }
    fn conjugate_closed_form(&self, lam: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        (**self).conjugate_closed_form(lam, t)
    }
}

/// The built-in families behind one type, for configs and heterogeneous
/// agent lists.
#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    Quadratic(AffineDriftQuadratic),
    Logistic(TvLogistic),
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            CostModel::Quadratic($m) => $e,
            CostModel::Logistic($m) => $e,
        }
    };
}

impl TvCost for CostModel {
    fn dim(&self) -> usize {
        dispatch!(self, m => m.dim())
    }
    fn value(&self, x: &DVector<f64>, t: f64) -> f64 {
        dispatch!(self, m => m.value(x, t))
    }
    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        dispatch!(self, m => m.gradient(x, t))
    }
    fn hessian(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64> {
        dispatch!(self, m => m.hessian(x, t))
    }
    fn time_partial(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        dispatch!(self, m => m.time_partial(x, t))
    }
    fn theta_lo(&self) -> f64 {
        dispatch!(self, m => m.theta_lo())
    }
    fn theta_hi(&self) -> f64 {
        dispatch!(self, m => m.theta_hi())
    }
    fn kappa(&self) -> Option<f64> {
        dispatch!(self, m => m.kappa())
    }
    fn conjugate_closed_form(&self, lam: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        dispatch!(self, m => m.conjugate_closed_form(lam, t))
    }
}

impl From<AffineDriftQuadratic> for CostModel {
    fn from(m: AffineDriftQuadratic) -> Self {
        CostModel::Quadratic(m)
    }
}

impl From<TvLogistic> for CostModel {
    fn from(m: TvLogistic) -> Self {
        CostModel::Logistic(m)
    }
}

/// All four surfaces of a model at one `(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surfaces {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub time_partial: DVector<f64>,
}

pub fn eval_surfaces<M: TvCost + ?Sized>(model: &M, x: &DVector<f64>, t: f64) -> Result<Surfaces> {
    if x.len() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: x.len() });
    }
    let s = Surfaces {
        value: model.value(x, t),
        gradient: model.gradient(x, t),
        hessian: model.hessian(x, t),
        time_partial: model.time_partial(x, t),
    };
    let finite = s.value.is_finite()
        && s.gradient.iter().all(|v| v.is_finite())
        && s.hessian.iter().all(|v| v.is_finite())
        && s.time_partial.iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite { x: x.iter().copied().collect(), t });
    }
    Ok(s)
}

/// Largest declared drift bound across agents; `None` if any is unknown.
pub fn max_kappa<M: TvCost>(models: &[M]) -> Option<f64> {
    models.iter().map(TvCost::kappa).try_fold(0.0_f64, |acc, k| k.map(|k| acc.max(k)))
}

pub fn min_theta_lo<M: TvCost>(models: &[M]) -> f64 {
    models.iter().map(TvCost::theta_lo).fold(f64::INFINITY, f64::min)
}

pub fn max_theta_hi<M: TvCost>(models: &[M]) -> f64 {
    models.iter().map(TvCost::theta_hi).fold(0.0, f64::max)
}

/// Solves `H v = rhs` for a symmetric positive definite `H`, falling back to
/// LU when Cholesky fails. `None` means the system is singular.
pub(crate) fn solve_spd(h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if h.nrows() == 1 {
        let d = h[(0, 0)];
        return (d != 0.0 && d.is_finite()).then(|| rhs / d);
    }
    match h.clone().cholesky() {
        Some(c) => Some(c.solve(rhs)),
        None => h.lu().solve(rhs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Signal;

    #[test]
    fn eval_surfaces_scalar_quadratic() {
        // f = 1/2 * 2 x^2 + sin(t) x
        let m = AffineDriftQuadratic::scalar(2.0, Signal::sin(1.0, 1.0, 0.0), Signal::zero()).unwrap();
        let s = eval_surfaces(&m, &DVector::from_element(1, 1.0), 0.0).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.gradient[0], 2.0);
        assert_eq!(s.hessian[(0, 0)], 2.0);
        assert_eq!(s.time_partial[0], 1.0);
    }

    #[test]
    fn eval_surfaces_dimension_and_finiteness() {
        let m = AffineDriftQuadratic::scalar(2.0, Signal::zero(), Signal::zero()).unwrap();
        assert!(matches!(
            eval_surfaces(&m, &DVector::zeros(2), 0.0),
            Err(Error::Dimension { expected: 1, got: 2 })
        ));
        match eval_surfaces(&m, &DVector::from_element(1, f64::NAN), 0.5) {
            Err(Error::NonFinite { t, .. }) => assert_eq!(t, 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stationary_at_analytic_minimizer() {
        let b = Signal::sin(1.3, 0.4, 0.2);
        let m = AffineDriftQuadratic::scalar(3.0, b.clone(), Signal::zero()).unwrap();
        for k in 0..10 {
            let t = 0.3 * k as f64;
            let x = DVector::from_element(1, -b.value(t) / 3.0);
            assert!(m.gradient(&x, t).norm() < 1e-15);
        }
    }

    #[test]
    fn aggregates() {
        let models: Vec<CostModel> = vec![
            AffineDriftQuadratic::scalar(1.0, Signal::linear(2.0), Signal::zero()).unwrap().into(),
            AffineDriftQuadratic::scalar(4.0, Signal::sin(1.0, 3.0, 0.0), Signal::zero()).unwrap().into(),
        ];
        assert_eq!(max_kappa(&models), Some(3.0));
        assert_eq!(min_theta_lo(&models), 1.0);
        assert_eq!(max_theta_hi(&models), 4.0);
    }
}
