//! Evaluates the built-in cost families and checks their derivatives by
//! finite differences.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvdopt::problems::probe::{probe, ProbeBox};
use tvdopt::problems::conjugate_argmax;
use tvdopt::{AffineDriftQuadratic, Signal, TvCost, TvLogistic};

fn main() -> tvdopt::Result<()> {
    let quad = AffineDriftQuadratic::squared_affine(3.0, Signal::cos(1.0, 1.0, 0.0))?;
    let logit = TvLogistic::new(1.0, DVector::from_vec(vec![0.4, 0.7]), std::f64::consts::PI / 10.0, 4.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let rep = probe(&quad, &mut rng, 200, &ProbeBox::default(), 1e-5);
    println!("quadratic: kappa {:?}, theta [{}, {}]", quad.kappa(), quad.theta_lo(), quad.theta_hi());
    println!("  fd errors: grad {:.1e}, hess {:.1e}, time {:.1e}", rep.gradient_fd_error, rep.hessian_fd_error, rep.time_fd_error);

    let rep = probe(&logit, &mut rng, 200, &ProbeBox::default(), 1e-5);
    println!("logistic: kappa {:.4}, theta [{}, {:.3}]", logit.kappa().unwrap(), logit.theta_lo(), logit.theta_hi());
    println!("  fd errors: grad {:.1e}, hess {:.1e}, time {:.1e}", rep.gradient_fd_error, rep.hessian_fd_error, rep.time_fd_error);
    println!("  observed within declared bounds: {}", rep.respects_bounds(&logit, 1e-9));

    // the conjugate maximizer inverts the gradient map
    let x = DVector::from_vec(vec![0.3, -1.2]);
    let lam = logit.gradient(&x, 2.0);
    let back = conjugate_argmax(&logit, &lam, 2.0, &Default::default(), None)?;
    println!("  conjugate round trip error {:.1e}", (back - x).norm());
    Ok(())
}
