//! Sampled checks of the standing assumptions on a cost model: curvature
//! sandwich, drift bound and finite-difference consistency of the surfaces.

use nalgebra::DVector;
use rand::Rng;

use super::TvCost;
use crate::graph::sorted_eigenvalues;

/// Region to sample `(x, t)` from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeBox {
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Default for ProbeBox {
    fn default() -> Self {
        Self { x_lo: -3.0, x_hi: 3.0, t_lo: 0.0, t_hi: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeReport {
    pub samples: usize,
    /// Smallest / largest Hessian eigenvalue seen.
    pub min_curvature: f64,
    pub max_curvature: f64,
    /// Largest `||∂/∂t grad f||` seen.
    pub max_drift: f64,
    /// Largest relative finite-difference mismatch per surface.
    pub gradient_fd_error: f64,
    pub hessian_fd_error: f64,
    pub time_fd_error: f64,
}

impl ProbeReport {
    /// True when the sampled curvature lies in `[theta_lo, theta_hi]` and the
    /// drift respects the declared `kappa`, both up to `tol`.
    pub fn respects_bounds<M: TvCost + ?Sized>(&self, model: &M, tol: f64) -> bool {
        let curvature = self.min_curvature >= model.theta_lo() - tol && self.max_curvature <= model.theta_hi() + tol;
        let drift = model.kappa().is_none_or(|k| self.max_drift <= k + tol);
        curvature && drift
    }
}

fn random_point<R: Rng + ?Sized>(rng: &mut R, n: usize, bx: &ProbeBox) -> (DVector<f64>, f64) {
    let x = DVector::from_fn(n, |_, _| rng.random_range(bx.x_lo..=bx.x_hi));
    (x, rng.random_range(bx.t_lo..=bx.t_hi))
}

/// Samples `samples` random points and records curvature, drift and
/// central-difference errors (step `fd_step`).
pub fn probe<M: TvCost + ?Sized, R: Rng + ?Sized>(
    model: &M,
    rng: &mut R,
    samples: usize,
    bx: &ProbeBox,
    fd_step: f64,
) -> ProbeReport {
    let n = model.dim();
    let mut rep = ProbeReport {
        samples,
        min_curvature: f64::INFINITY,
        max_curvature: f64::NEG_INFINITY,
        ..Default::default()
    };
    let h = fd_step;
    for _ in 0..samples {
        let (x, t) = random_point(rng, n, bx);
        let g = model.gradient(&x, t);
        let hess = model.hessian(&x, t);
        let eig = sorted_eigenvalues(hess.clone());
        rep.min_curvature = rep.min_curvature.min(eig[0]);
        rep.max_curvature = rep.max_curvature.max(eig[n - 1]);
        let dt = model.time_partial(&x, t);
        rep.max_drift = rep.max_drift.max(dt.norm());

        let mut fd_g = DVector::zeros(n);
        let mut fd_h = hess.clone() * 0.0;
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            fd_g[k] = (model.value(&xp, t) - model.value(&xm, t)) / (2.0 * h);
            let col = (model.gradient(&xp, t) - model.gradient(&xm, t)) / (2.0 * h);
            fd_h.set_column(k, &col);
        }
        let fd_t = (model.gradient(&x, t + h) - model.gradient(&x, t - h)) / (2.0 * h);
        rep.gradient_fd_error = rep.gradient_fd_error.max((&g - fd_g).norm() / (1.0 + g.norm()));
        rep.hessian_fd_error = rep.hessian_fd_error.max((&hess - fd_h).norm() / (1.0 + hess.norm()));
        rep.time_fd_error = rep.time_fd_error.max((&dt - fd_t).norm() / (1.0 + dt.norm()));
    }
    rep
}
