//! Path construction.
//!
//! All three drivers start at `t0 = ||A^T f||_inf` with `u = 0`, pick a
//! direction at each kink, and follow it down to the next kink found by
//! [`step_size`]. They differ only in how the direction is chosen:
//!
//! * [`run_generalized`]: the minimal-norm element of the direction set.
//! * [`run_standard`]: the pseudoinverse guess on `E \ Leav`, which can
//!   land outside the direction set when several indices change at once.
//! * [`run_looping`]: pseudoinverse directions over every `A ⊆ S ⊆ E`
//!   until one is admissible.

mod adversarial;
mod report;
mod step;

use nalgebra::DVector;

pub use adversarial::{adversarial_demo, adversarial_instance};
pub use report::one_at_a_time_report;
pub use step::{step_size, StepEvent, StepSizeBreakdown};

use crate::direction::{minimal_direction, DirectionProblem};
use crate::error::{Error, Result};
use crate::linalg::{gram, pinv_solve, IndexSet};
use crate::problem::{PathPoint, ProblemInstance, SolutionPath, Termination, Tolerances};
use step::step_at;

/// Default bound on `|E \ A|` for [`run_looping`].
pub const DEFAULT_LOOP_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Generalized,
    Standard,
    Looping,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomotopyConfig {
    pub algorithm: Algorithm,
    pub tolerances: Tolerances,
    /// Evaluate the optimality residual at every segment midpoint.
    pub record_midpoint_checks: bool,
    /// Largest `|E \ A|` the looping variant will enumerate.
    pub loop_cap: usize,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Generalized,
            tolerances: Tolerances::default(),
            record_midpoint_checks: false,
            loop_cap: DEFAULT_LOOP_CAP,
        }
    }
}

impl HomotopyConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        Self { algorithm, ..Self::default() }
    }
}

/// Runs the configured algorithm.
pub fn run(inst: &ProblemInstance, cfg: &HomotopyConfig) -> Result<SolutionPath> {
    cfg.tolerances.validate()?;
    let path = match cfg.algorithm {
        Algorithm::Generalized => run_generalized(inst, cfg)?,
        Algorithm::Standard => run_standard(inst, cfg)?,
        Algorithm::Looping => run_looping(inst, cfg)?,
    };
    if cfg.record_midpoint_checks {
        return Ok(path.with_midpoint_checks(&cfg.tolerances));
    }
    Ok(path)
}

/// Outcome of choosing a direction at one kink.
enum Choice {
    Follow { d: DVector<f64>, lambda: DVector<f64> },
    Stop(Termination),
}

/// Shared driver: `choose` is called at every kink with `t > 0`.
fn trace<F>(inst: &ProblemInstance, tol: &Tolerances, mut choose: F) -> Result<SolutionPath>
where
    F: FnMut(&[PathPoint], &PathPoint) -> Result<Choice>,
{
    let t0 = inst.t_max();
    let mut kinks = vec![PathPoint::at(inst, t0, DVector::zeros(inst.n()), tol)?];
    let snap = tol.eq_tol * t0;
    loop {
        let point = kinks.last().unwrap();
        if point.t == 0.0 {
            return SolutionPath::new(inst.clone(), kinks, Termination::ReachedZero);
        }
        if kinks.len() > tol.max_iters {
            return SolutionPath::new(inst.clone(), kinks, Termination::IterationCap);
        }
        let (d, lambda) = match choose(&kinks[..kinks.len() - 1], point)? {
            Choice::Follow { d, lambda } => (d, lambda),
            Choice::Stop(term) => return SolutionPath::new(inst.clone(), kinks, term),
        };
        let step = step_at(inst, point, &d, &lambda);
        let t_next = if step.s <= snap { 0.0 } else { step.s };
        let mut u = &point.u + &d * (point.t - t_next);
        if t_next > 0.0 {
            for &(i, ev) in &step.triggers {
                if ev == StepEvent::CoefficientHitsZero {
                    u[i] = 0.0;
                }
            }
        }
        u.iter_mut().filter(|v| v.abs() <= tol.act_tol).for_each(|v| *v = 0.0);
        let next = PathPoint::at(inst, t_next, u, tol)?;
        kinks.push(next);
    }
}

/// Minimal-norm direction at every kink.
pub fn run_generalized(inst: &ProblemInstance, cfg: &HomotopyConfig) -> Result<SolutionPath> {
    let tol = cfg.tolerances;
    trace(inst, &tol, |history, point| {
        let prob = DirectionProblem::at_point(inst, point)?;
        let cert = minimal_direction(&prob, &tol).map_err(|e| Error::AtKink {
            kink: history.len(),
            t: point.t,
            source: Box::new(e),
        })?;
        Ok(Choice::Follow { d: cert.d, lambda: cert.lambda })
    })
}

/// `d_S = (A_S^T A_S)^+ p_S`, zero off `S`.
fn gram_direction(inst: &ProblemInstance, point: &PathPoint, s: &IndexSet, rank_tol: f64) -> DVector<f64> {
    let p = point.p.as_ref().expect("direction requested at t > 0");
    let g = gram(inst.a(), s, s).expect("indices within range");
    let ps = DVector::from_iterator(s.len(), s.iter().map(|i| p[i]));
    let ds = pinv_solve(&g, &ps, rank_tol);
    let mut d = DVector::zeros(inst.n());
    for (k, i) in s.iter().enumerate() {
        d[i] = ds[k];
    }
    d
}

fn lambda_of(prob: &DirectionProblem<'_>, d: &DVector<f64>, n: usize, a: &nalgebra::DMatrix<f64>) -> DVector<f64> {
    let g = a.tr_mul(&(prob.target() - a * d));
    let mut lambda = DVector::zeros(n);
    for &(i, _) in prob.signs() {
        lambda[i] = g[i];
    }
    lambda
}

/// Classical homotopy with `S^j = E(t^j) \ Leav^j`. Stops with
/// [`Termination::SignInconsistency`] when that direction is not admissible.
pub fn run_standard(inst: &ProblemInstance, cfg: &HomotopyConfig) -> Result<SolutionPath> {
    let tol = cfg.tolerances;
    trace(inst, &tol, |history, point| {
        let prev_active = history.last().map(|k| k.active.clone()).unwrap_or_default();
        let leaving = prev_active.difference(&point.active);
        let s = point.equicorrelation.difference(&leaving);
        let d = gram_direction(inst, point, &s, tol.rank_tol);
        let prob = DirectionProblem::at_point(inst, point)?;
        let report = prob.check(&d, &tol);
        if !report.pass {
            let index = report.worst_index.or_else(|| s.iter().next()).unwrap_or(0);
            return Ok(Choice::Stop(Termination::SignInconsistency { index, t: point.t }));
        }
        let lambda = lambda_of(&prob, &d, inst.n(), inst.a());
        if step_at(inst, point, &d, &lambda).delta <= 0.0 {
            let index = s.iter().next().unwrap_or(0);
            return Ok(Choice::Stop(Termination::SignInconsistency { index, t: point.t }));
        }
        Ok(Choice::Follow { d, lambda })
    })
}

/// Subsets `A ∪ T` for `T ⊆ E \ A`, by increasing `|T|`, then lexicographically.
fn candidate_sets<'a>(active: &'a IndexSet, extra: &'a IndexSet) -> impl Iterator<Item = IndexSet> + 'a {
    let k = extra.len();
    (0..=k).flat_map(move |size| {
        Combinations::new(k, size).map(move |pick| active.union(&pick.iter().map(|&j| extra.as_slice()[j]).collect()))
    })
}

/// Lexicographic `size`-subsets of `0..n`.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, size: usize) -> Self {
        Self { n, idx: (0..size).collect(), done: size > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        match (0..k).rev().find(|&i| self.idx[i] < self.n - k + i) {
            Some(i) => {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// Classical homotopy that loops over candidate supports until the
/// pseudoinverse direction is admissible.
pub fn run_looping(inst: &ProblemInstance, cfg: &HomotopyConfig) -> Result<SolutionPath> {
    let tol = cfg.tolerances;
    trace(inst, &tol, |_, point| {
        let extra = point.equicorrelation.difference(&point.active);
        if extra.len() > cfg.loop_cap {
            return Err(Error::LoopCapExceeded { t: point.t, free: extra.len(), cap: cfg.loop_cap });
        }
        let prob = DirectionProblem::at_point(inst, point)?;
        for s in candidate_sets(&point.active, &extra) {
            let d = gram_direction(inst, point, &s, tol.rank_tol);
            if prob.check(&d, &tol).pass {
                let lambda = lambda_of(&prob, &d, inst.n(), inst.a());
                if step_at(inst, point, &d, &lambda).delta > 0.0 {
                    return Ok(Choice::Follow { d, lambda });
                }
            }
        }
        Err(Error::LoopingExhausted { t: point.t, equicorrelation: point.equicorrelation.clone() })
    })
}
