use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, l1_norm};
use crate::problem::ProblemInstance;

/// Settings for the proximal-gradient oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub max_iters: usize,
    /// Target duality gap relative to `1 + ||f||^2 / 2`.
    pub obj_tol: f64,
    /// Step length; `None` uses `1/L` with `L` estimated by power iteration.
    pub step: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_iters: 200_000, obj_tol: 1e-10, step: None }
    }
}

const POWER_ITERS: usize = 50;
const LIPSCHITZ_SAFETY: f64 = 1.01;
const GAP_EVERY: usize = 10;

/// Upper estimate of `||A^T A||_2`.
pub fn lipschitz_bound(inst: &ProblemInstance) -> f64 {
    let a = inst.a().as_inner();
    let mut x = DVector::from_element(inst.n(), 1.0 / (inst.n() as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..POWER_ITERS {
        let y = a.tr_mul(&(a * &x));
        est = y.norm();
        if est == 0.0 {
            // The start vector can sit in the null space; fall back to the Frobenius bound.
            return a.norm_squared() * LIPSCHITZ_SAFETY;
        }
        x = y / est;
    }
    est * LIPSCHITZ_SAFETY
}

fn soft_threshold(x: &DVector<f64>, tau: f64) -> DVector<f64> {
    x.map(|v| v.signum() * (v.abs() - tau).max(0.0))
}

/// `(primal objective, duality gap)` at `u`. The dual point is the residual
/// scaled into the feasible set `||A^T theta||_inf <= t`.
pub(crate) fn duality_gap(inst: &ProblemInstance, t: f64, u: &DVector<f64>) -> (f64, f64) {
    let r = inst.residual(u);
    let primal = 0.5 * r.norm_squared() + t * l1_norm(u);
    let corr = inf_norm(&inst.a().tr_mul(&r));
    let scale = if corr > t { t / corr } else { 1.0 };
    let theta = &r * scale;
    let f = inst.f().as_inner();
    let dual = f.dot(&theta) - 0.5 * theta.norm_squared();
    (primal, (primal - dual).max(0.0))
}

/// Minimizer of `1/2 ||A u - f||^2 + t ||u||_1` by accelerated proximal
/// gradient with function-value restarts, stopped on the duality gap.
pub fn fista_solve(inst: &ProblemInstance, t: f64, cfg: &OracleConfig) -> Result<DVector<f64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("oracle needs t > 0, got {t}")));
    }
    let n = inst.n();
    let a = inst.a().as_inner();
    let f = inst.f().as_inner();
    let target = cfg.obj_tol * (1.0 + 0.5 * f.norm_squared());
    let step = match cfg.step {
        Some(s) => s,
        None => {
            let l = lipschitz_bound(inst);
            if l == 0.0 {
                return Ok(DVector::zeros(n));
            }
            1.0 / l
        }
    };
    let objective = |u: &DVector<f64>| 0.5 * (a * u - f).norm_squared() + t * l1_norm(u);
    let prox_grad = |y: &DVector<f64>| {
        let grad = a.tr_mul(&(a * y - f));
        soft_threshold(&(y - grad * step), t * step)
    };

    let mut x = DVector::zeros(n);
    let mut fx = objective(&x);
    let mut y = x.clone();
    let mut theta = 1.0_f64;
    let mut last_gap = f64::INFINITY;
    for k in 1..=cfg.max_iters {
        let x_new = prox_grad(&y);
        let f_new = objective(&x_new);
        // Restart the momentum on an objective increase. Right after a restart
        // the step is a plain proximal gradient step and any increase is round-off.
        if f_new > fx && theta > 1.0 {
            theta = 1.0;
            y = x.clone();
        } else {
            let theta_new = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            y = &x_new + (&x_new - &x) * ((theta - 1.0) / theta_new);
            x = x_new;
            fx = f_new;
            theta = theta_new;
        }
        if k % GAP_EVERY == 0 {
            last_gap = duality_gap(inst, t, &x).1;
            if last_gap <= target {
                return Ok(x);
            }
        }
    }
    Err(Error::OracleNonConvergence { iterations: cfg.max_iters, objective: fx, gap: last_gap })
}
