//! Replay of a deliberately bad (but admissible) direction choice rule on a
//! 2x4 instance, producing kinks at `t = 2^{-k}` that accumulate at zero.

use nalgebra::DVector;

use super::step::step_at;
use crate::direction::DirectionProblem;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::problem::{PathPoint, ProblemInstance, SolutionPath, Termination, Tolerances};

/// `A = [[1,1,1,0],[0,0,0,1]]`, `f = (2, 1)`.
pub fn adversarial_instance() -> ProblemInstance {
    fixtures::infinite_kinks()
}

/// Direction used on segment `k` (0-based) of the replay.
fn replay_direction(k: usize) -> DVector<f64> {
    let d: [f64; 4] = match k {
        0 => [0.5, 0.5, 0.0, 0.0],
        k if k % 2 == 1 => [1.5, -1.0, 0.5, 1.0],
        _ => [1.5, 0.5, -1.0, 1.0],
    };
    DVector::from_column_slice(&d)
}

/// First `max_kinks` kinks of the replayed path. Every replayed direction is
/// checked against the direction set before it is followed.
pub fn adversarial_demo(max_kinks: usize) -> Result<SolutionPath> {
    if max_kinks == 0 {
        return Err(Error::InvalidArgument("max_kinks must be at least 1".into()));
    }
    let inst = adversarial_instance();
    let tol = Tolerances::default();
    let mut kinks = vec![PathPoint::at(&inst, inst.t_max(), DVector::zeros(4), &tol)?];
    for segment in 0..max_kinks - 1 {
        let point = kinks.last().unwrap();
        let d = replay_direction(segment);
        let prob = DirectionProblem::at_point(&inst, point)?;
        let report = prob.check(&d, &tol);
        if !report.pass {
            return Err(Error::ReplayRejected { segment, residual: report.max_residual });
        }
        let g = inst.a().tr_mul(&(prob.target() - inst.a().as_inner() * &d));
        let mut lambda = DVector::zeros(4);
        for &(i, _) in prob.signs() {
            lambda[i] = g[i];
        }
        let step = step_at(&inst, point, &d, &lambda);
        if step.delta <= 0.0 {
            return Err(Error::ReplayRejected { segment, residual: 0.0 });
        }
        let mut u = &point.u + &d * step.delta;
        u.iter_mut().filter(|v| v.abs() <= tol.act_tol).for_each(|v| *v = 0.0);
        let next = PathPoint::at(&inst, step.s, u, &tol)?;
        kinks.push(next);
    }
    SolutionPath::new(inst, kinks, Termination::IterationCap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kinks_halve() {
        let path = adversarial_demo(5).unwrap();
        let ts = path.kink_ts();
        assert_eq!(ts.len(), 5);
        for (k, t) in ts.iter().enumerate() {
            assert_abs_diff_eq!(*t, 2.0 * 0.5f64.powi(k as i32), epsilon = 1e-14);
        }
        assert_eq!(path.termination(), Termination::IterationCap);
    }

    #[test]
    fn single_kink_and_zero() {
        assert_eq!(adversarial_demo(1).unwrap().kink_ts(), vec![2.0]);
        assert!(adversarial_demo(0).is_err());
    }

    #[test]
    fn replayed_solutions_follow_the_closed_form() {
        let path = adversarial_demo(10).unwrap();
        for k in path.kinks().iter().filter(|k| k.t <= 1.0) {
            assert_abs_diff_eq!(k.u[0] + k.u[1] + k.u[2], 2.0 - k.t, epsilon = 1e-12);
            assert_abs_diff_eq!(k.u[3], 1.0 - k.t, epsilon = 1e-12);
        }
    }
}
