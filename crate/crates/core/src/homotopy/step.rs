use nalgebra::DVector;

use crate::direction::DirectionCertificate;
use crate::error::Result;
use crate::problem::{PathPoint, ProblemInstance, Tolerances};

/// What stops a linear segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepEvent {
    /// An active coefficient reaches zero.
    CoefficientHitsZero,
    /// A zero coefficient in `E \ A` has its subgradient leave `±1`.
    MultiplierSignFlip,
    /// An inactive correlation reaches the boundary `|p_i| = 1`.
    CorrelationHitsBoundary,
}

/// Candidate kink locations below `t` along a direction. Empty candidate
/// sets are reported as `-inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSizeBreakdown {
    pub s_active: f64,
    pub s_equicorrelated: f64,
    pub s_outside: f64,
    /// `max(s_active, s_equicorrelated, s_outside, 0)`, the next kink.
    pub s: f64,
    /// `t - s`
    pub delta: f64,
    /// Indices whose candidate equals `s`.
    pub triggers: Vec<(usize, StepEvent)>,
}

/// Relative slack for calling a candidate a trigger of the step.
const TRIGGER_SLACK: f64 = 1e-12;

/// Largest segment below `t` on which `u + (t - s) d` stays optimal.
pub fn step_size(
    inst: &ProblemInstance,
    t: f64,
    u: &DVector<f64>,
    cert: &DirectionCertificate,
    tol: &Tolerances,
) -> Result<StepSizeBreakdown> {
    let point = PathPoint::at(inst, t, u.clone(), tol)?;
    Ok(step_at(inst, &point, &cert.d, &cert.lambda))
}

pub(crate) fn step_at(
    inst: &ProblemInstance,
    point: &PathPoint,
    d: &DVector<f64>,
    lambda: &DVector<f64>,
) -> StepSizeBreakdown {
    let t = point.t;
    let a = inst.a();
    let ata_d = a.tr_mul(&(a.as_inner() * d));
    // p - A^T A d, computed from the residual to avoid cancellation
    let g = a.tr_mul(&(&point.r / t - a.as_inner() * d));

    let mut candidates: Vec<(usize, StepEvent, f64)> = Vec::new();
    for i in point.active.iter() {
        if d[i] != 0.0 {
            let nu = (point.u[i] + t * d[i]) / d[i];
            if nu < t {
                candidates.push((i, StepEvent::CoefficientHitsZero, nu));
            }
        }
    }
    for i in point.equicorrelation.difference(&point.active).iter() {
        let l = lambda[i].abs();
        candidates.push((i, StepEvent::MultiplierSignFlip, t * l / (l + 2.0)));
    }
    for i in point.equicorrelation.union(&point.active).complement(inst.n()).iter() {
        for bound in [1.0, -1.0] {
            let mu = if bound != ata_d[i] { t * g[i] / (bound - ata_d[i]) } else { 0.0 };
            if mu < t {
                candidates.push((i, StepEvent::CorrelationHitsBoundary, mu));
            }
        }
    }

    let max_of = |kind: StepEvent| {
        candidates
            .iter()
            .filter(|c| c.1 == kind)
            .map(|c| c.2)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let s_active = max_of(StepEvent::CoefficientHitsZero);
    let s_equicorrelated = max_of(StepEvent::MultiplierSignFlip);
    let s_outside = max_of(StepEvent::CorrelationHitsBoundary);
    let s = s_active.max(s_equicorrelated).max(s_outside).max(0.0);
    let triggers = if s > 0.0 {
        candidates
            .iter()
            .filter(|c| c.2 >= s * (1.0 - TRIGGER_SLACK))
            .map(|c| (c.0, c.1))
            .collect()
    } else {
        Vec::new()
    };
    StepSizeBreakdown { s_active, s_equicorrelated, s_outside, s, delta: t - s, triggers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direction::{minimal_direction, DirectionProblem};
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn cert_at(inst: &ProblemInstance, t: f64, u: &[f64]) -> (PathPoint, DirectionCertificate) {
        let tol = Tolerances::default();
        let pt = PathPoint::at(inst, t, DVector::from_column_slice(u), &tol).unwrap();
        let prob = DirectionProblem::at_point(inst, &pt).unwrap();
        let cert = minimal_direction(&prob, &tol).unwrap();
        (pt, cert)
    }

    #[test]
    fn infinite_kinks_first_step() {
        let inst = fixtures::infinite_kinks();
        let (pt, cert) = cert_at(&inst, 2.0, &[0.0; 4]);
        let step = step_size(&inst, 2.0, &pt.u, &cert, &Tolerances::default()).unwrap();
        assert_abs_diff_eq!(step.s, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(step.delta, 1.0, epsilon = 1e-14);
        assert_eq!(step.s_active, f64::NEG_INFINITY);
        assert_eq!(step.triggers, vec![(3, StepEvent::CorrelationHitsBoundary)]);
    }

    #[test]
    fn loris_first_step() {
        let inst = fixtures::loris();
        let (pt, cert) = cert_at(&inst, 192.0, &[0.0; 3]);
        let step = step_size(&inst, 192.0, &pt.u, &cert, &Tolerances::default()).unwrap();
        assert_abs_diff_eq!(step.s_outside, 63.0, epsilon = 1e-12);
        assert_abs_diff_eq!(step.s_equicorrelated, 7.68, epsilon = 1e-12);
        assert_abs_diff_eq!(step.s, 63.0, epsilon = 1e-12);
        assert_eq!(step.triggers, vec![(1, StepEvent::CorrelationHitsBoundary)]);
    }

    #[test]
    fn loris_correlation_crossing_by_sampling() {
        // p_1(t) along the first segment, sampled densely, first reaches 1 at t = 63.
        let inst = fixtures::loris();
        let d = DVector::from_column_slice(&[0.0, 0.0, 1.0 / 48.0]);
        let mut first_hit = None;
        for k in 0..=129_000 {
            let t = 192.0 - k as f64 * 1e-3;
            let u = &d * (192.0 - t);
            let p1 = inst.a().tr_mul(&inst.residual(&u))[1] / t;
            if p1 >= 1.0 - 1e-12 {
                first_hit = Some(t);
                break;
            }
        }
        assert_abs_diff_eq!(first_hit.unwrap(), 63.0, epsilon = 1e-3);
    }

    #[test]
    fn zero_direction_runs_to_zero() {
        // f in the span of a single column: at t = t0 the unconstrained tail
        // is stationary once u solves least squares.
        let inst = ProblemInstance::from_rows(2, 1, &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        let tol = Tolerances::default();
        let pt = PathPoint::at(&inst, 0.5, DVector::from_column_slice(&[0.5]), &tol).unwrap();
        let zero = DirectionCertificate {
            d: DVector::zeros(1),
            lambda: DVector::zeros(1),
            theta: DVector::zeros(1),
            is_min_norm: true,
            kkt: Default::default(),
        };
        // Bypass the point's active set: treat the coefficient as inactive so
        // every candidate set is empty.
        let mut bare = pt.clone();
        bare.active = Default::default();
        bare.equicorrelation = Default::default();
        let step = step_at(&inst, &bare, &zero.d, &zero.lambda);
        assert_eq!(step.s, 0.0);
        assert_eq!(step.delta, 0.5);
        assert!(step.triggers.is_empty());
    }
}
