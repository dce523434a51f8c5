//! Local conjugate maximisation `x_i(lam, t) = argmax_x <lam, x> - f_i(x, t)`
//! and the dual-function surfaces built on it.

use nalgebra::{DMatrix, DVector};

use super::{solve_spd, ResourceProfile, TvCost};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop once `||grad f(x, t) - lam|| <= tol * (1 + ||lam||)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 100, armijo: 1e-4 }
    }
}

/// Maximises `<lam, x> - f(x, t)`. Families with a closed form use it;
/// everything else goes through damped Newton on the stationarity residual
/// `grad f(x, t) - lam`, starting from `warm` (or the origin).
pub fn conjugate_argmax<M: TvCost + ?Sized>(
    model: &M,
    lam: &DVector<f64>,
    t: f64,
    opts: &NewtonOptions,
    warm: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let n = model.dim();
    if lam.len() != n {
        return Err(Error::Dimension { expected: n, got: lam.len() });
    }
    if let Some(x) = model.conjugate_closed_form(lam, t) {
        return Ok(x);
    }
    let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
    let tol = opts.tol * (1.0 + lam.norm());
    // psi(x) = f(x, t) - <lam, x>, minimised.
    let psi = |x: &DVector<f64>| model.value(x, t) - lam.dot(x);
    let mut history = Vec::new();
    for _ in 0..opts.max_iter {
        let r = model.gradient(&x, t) - lam;
        let rn = r.norm();
        history.push(rn);
        if !rn.is_finite() {
            break;
        }
        if rn <= tol {
            return Ok(x);
        }
        let step = solve_spd(model.hessian(&x, t), &r).ok_or(Error::SingularHessian { agent: 0, t })?;
        let slope = -r.dot(&step);
        let f0 = psi(&x);
        let mut s = 1.0;
        loop {
            let trial = &x - &step * s;
            let f1 = psi(&trial);
            // Near the optimum psi stops resolving decreases; fall back to
            // the residual norm there.
            let accepted = f1 <= f0 + opts.armijo * s * slope
                || (model.gradient(&trial, t) - lam).norm() < rn;
            if accepted || s < 1e-12 {
                x = trial;
                break;
            }
            s *= 0.5;
        }
    }
    let residual = (model.gradient(&x, t) - lam).norm();
    if residual <= tol {
        return Ok(x);
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual, history })
}

/// Local dual surfaces at `(lam, t)` for `g_i(lam, t) = <lam, d_i(t)> - f_i*(lam, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSurfaces {
    /// Recovered primal `x_i(lam, t)`.
    pub primal: DVector<f64>,
    /// `grad g_i = d_i(t) - x_i(lam, t)`.
    pub dual_grad: DVector<f64>,
    /// `∂/∂t grad g_i = d_i'(t) + H_i^{-1} ∂/∂t grad f_i` at the recovered primal.
    pub dual_time_partial: DVector<f64>,
    /// `H_i(x_i(lam, t), t)`.
    pub hessian: DMatrix<f64>,
}

pub fn dual_surfaces<M: TvCost + ?Sized>(
    model: &M,
    profile: &ResourceProfile,
    lam: &DVector<f64>,
    t: f64,
    opts: &NewtonOptions,
    warm: Option<&DVector<f64>>,
) -> Result<DualSurfaces> {
    if profile.dim() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: profile.dim() });
    }
    let primal = conjugate_argmax(model, lam, t, opts, warm)?;
    let hessian = model.hessian(&primal, t);
    let dx = solve_spd(hessian.clone(), &model.time_partial(&primal, t))
        .ok_or(Error::SingularHessian { agent: 0, t })?;
    Ok(DualSurfaces {
        dual_grad: profile.demand(t) - &primal,
        dual_time_partial: profile.demand_rate(t) + dx,
        primal,
        hessian,
    })
}
