//! Independent checks of computed solutions: a proximal-gradient solver,
//! an optimality residual, path verification by sampling, and the
//! pseudoinverse formula `beta(t)` known from the least angle literature,
//! which is not a minimizer in general.

mod fista;
mod verify;

use nalgebra::DVector;

pub use fista::{fista_solve, lipschitz_bound, OracleConfig};
pub use verify::{verify_path, SampleReport, VerificationReport, VerifyOptions, THREADS_ENV};

use crate::error::Result;
use crate::linalg::{columns, inf_norm, pinv_solve};
use crate::problem::{PathPoint, ProblemInstance, Tolerances};

/// Optimality residual of `u` at `t`.
///
/// For `t > 0` this is `max(||p||_inf - 1, max_{u_i != 0} |p_i - sign(u_i)|)`
/// with negative parts clipped. At `t = 0` it is the normal equation residual
/// `||A^T (A u - f)||_inf / (1 + ||A^T f||_inf)`.
pub fn kkt_check(inst: &ProblemInstance, t: f64, u: &DVector<f64>, tol: &Tolerances) -> Result<f64> {
    let point = PathPoint::at(inst, t, u.clone(), tol)?;
    Ok(match point.subgradient_violation() {
        Some(v) => v,
        None => {
            let normal = inst.a().tr_mul(&point.r);
            inf_norm(&normal) / (1.0 + inst.t_max())
        }
    })
}

/// `beta_E = A_E^+ (f - (A_E^T)^+ t p_E)` with `E` and `p` taken from the
/// optimal reference point `u_ref`, zero off `E`.
pub fn tibshirani_beta(inst: &ProblemInstance, t: f64, u_ref: &DVector<f64>, tol: &Tolerances) -> Result<DVector<f64>> {
    let point = PathPoint::at(inst, t, u_ref.clone(), tol)?;
    let mut beta = DVector::zeros(inst.n());
    let Some(p) = point.p.as_ref() else {
        // At t = 0 the formula reduces to the minimal-norm least squares solution.
        return Ok(pinv_solve(inst.a(), inst.f(), tol.rank_tol));
    };
    let e = &point.equicorrelation;
    if e.is_empty() {
        return Ok(beta);
    }
    let a_e = columns(inst.a(), e)?;
    let tp = DVector::from_iterator(e.len(), e.iter().map(|i| t * p[i]));
    let shift = pinv_solve(&a_e.transpose(), &tp, tol.rank_tol);
    let beta_e = pinv_solve(&a_e, &(inst.f().as_inner() - shift), tol.rank_tol);
    for (k, i) in e.iter().enumerate() {
        beta[i] = beta_e[k];
    }
    Ok(beta)
}
