//! Problem state: energy, residual, subgradient, equicorrelation and active
//! sets, kinks, and the piecewise-linear path built from them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, l1_norm, DenseMatrix, DenseVector, IndexSet, DEFAULT_RANK_TOL};

/// The immutable input pair `(A, f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    a: DenseMatrix,
    f: DenseVector,
}

impl ProblemInstance {
    pub fn new(a: DenseMatrix, f: DenseVector) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be non-empty, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if f.dim() != a.rows() {
            return Err(Error::Dimension(format!(
                "data vector has {} entries, matrix has {} rows",
                f.dim(),
                a.rows()
            )));
        }
        Ok(Self { a, f })
    }

    /// Convenience constructor from row-major entries.
    pub fn from_rows(m: usize, n: usize, a: &[f64], f: &[f64]) -> Result<Self> {
        Self::new(DenseMatrix::from_row_slice(m, n, a)?, DenseVector::from_slice(f)?)
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn f(&self) -> &DenseVector {
        &self.f
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// `||A^T f||_inf`, the parameter above which `u = 0` is optimal.
    pub fn t_max(&self) -> f64 {
        inf_norm(&self.a.tr_mul_vec(&self.f))
    }

    /// `f - A u`
    pub fn residual(&self, u: &DVector<f64>) -> DVector<f64> {
        self.f.as_inner() - self.a.mul_vec(u)
    }

    fn check_u(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::Dimension(format!(
                "coefficient vector has {} entries, expected {}",
                u.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Numerical tolerances shared by the path algorithms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance (scaled by `max(1, t)`) for equicorrelation membership.
    pub eq_tol: f64,
    /// Absolute threshold below which a coefficient counts as zero.
    pub act_tol: f64,
    pub kkt_tol: f64,
    /// Relative singular value cutoff for pseudoinverse solves.
    pub rank_tol: f64,
    pub max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq_tol: 1e-9,
            act_tol: 1e-12,
            kkt_tol: 1e-8,
            rank_tol: DEFAULT_RANK_TOL,
            max_iters: 100_000,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.eq_tol, self.act_tol, self.kkt_tol, self.rank_tol];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.max_iters == 0 {
            return Err(Error::InvalidArgument(format!("tolerances must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// `1/2 ||A u - f||^2 + t ||u||_1`
pub fn energy(inst: &ProblemInstance, t: f64, u: &DVector<f64>) -> Result<f64> {
    inst.check_u(u)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("parameter must be nonnegative, got {t}")));
    }
    Ok(0.5 * inst.residual(u).norm_squared() + t * l1_norm(u))
}

/// `p = A^T (f - A u) / t`
pub fn subgradient(inst: &ProblemInstance, t: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    inst.check_u(u)?;
    if t == 0.0 {
        return Err(Error::ZeroParameter);
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("parameter must be positive, got {t}")));
    }
    Ok(inst.a.tr_mul_vec(&inst.residual(u)) / t)
}

/// Indices whose correlation `|A_i^T (A u - f)|` equals `t` up to
/// `eq_tol * max(1, t)`. At `t = 0` every index is included.
pub fn equicorrelation_set(
    inst: &ProblemInstance,
    t: f64,
    u: &DVector<f64>,
    tol: &Tolerances,
) -> Result<IndexSet> {
    inst.check_u(u)?;
    if t == 0.0 {
        return Ok(IndexSet::full(inst.n()));
    }
    let corr = inst.a.tr_mul_vec(&inst.residual(u));
    Ok(equicorrelated(&corr, t, tol))
}

pub(crate) fn equicorrelated(corr: &DVector<f64>, t: f64, tol: &Tolerances) -> IndexSet {
    let band = tol.eq_tol * t.max(1.0);
    corr.iter()
        .enumerate()
        .filter(|(_, c)| (c.abs() - t).abs() <= band)
        .map(|(i, _)| i)
        .collect()
}

/// Support of `u` above `act_tol`.
pub fn active_set(u: &DVector<f64>, tol: &Tolerances) -> IndexSet {
    u.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol.act_tol)
        .map(|(i, _)| i)
        .collect()
}

/// A kink of the path with all derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub u: DVector<f64>,
    pub r: DVector<f64>,
    /// `None` at `t = 0`.
    pub p: Option<DVector<f64>>,
    pub equicorrelation: IndexSet,
    pub active: IndexSet,
}

impl PathPoint {
    /// Recomputes `r`, `p`, `E` and the active set from `(t, u)`.
    pub fn at(inst: &ProblemInstance, t: f64, u: DVector<f64>, tol: &Tolerances) -> Result<Self> {
        inst.check_u(&u)?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("kink parameter must be finite and >= 0, got {t}")));
        }
        let r = inst.residual(&u);
        let corr = inst.a.tr_mul_vec(&r);
        let (p, equicorrelation) = if t > 0.0 {
            (Some(&corr / t), equicorrelated(&corr, t, tol))
        } else {
            (None, IndexSet::full(inst.n()))
        };
        let active = active_set(&u, tol);
        Ok(Self { t, u, r, p, equicorrelation, active })
    }

    /// Optimality residual: `max(||p||_inf - 1, max_{i active} |p_i - sign(u_i)|)`.
    /// `None` at `t = 0`.
    pub fn subgradient_violation(&self) -> Option<f64> {
        let p = self.p.as_ref()?;
        let excess = (inf_norm(p) - 1.0).max(0.0);
        let sign_err = self
            .active
            .iter()
            .map(|i| (p[i] - self.u[i].signum()).abs())
            .fold(0.0, f64::max);
        Some(excess.max(sign_err))
    }
}

/// How a path computation ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    ReachedZero,
    IterationCap,
    /// The classical update produced a direction outside the direction set.
    SignInconsistency { index: usize, t: f64 },
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::ReachedZero => write!(f, "ReachedZero"),
            Termination::IterationCap => write!(f, "IterationCap"),
            Termination::SignInconsistency { index, t } => {
                write!(f, "SignInconsistency(index={index},t={t:?})")
            }
        }
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPath(format!("unknown termination {s:?}"));
        match s {
            "ReachedZero" => return Ok(Termination::ReachedZero),
            "IterationCap" => return Ok(Termination::IterationCap),
            _ => {}
        }
        let body = s
            .strip_prefix("SignInconsistency(")
            .and_then(|b| b.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (idx, t) = body.split_once(',').ok_or_else(bad)?;
        let index = idx.strip_prefix("index=").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let t = t.strip_prefix("t=").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        Ok(Termination::SignInconsistency { index, t })
    }
}

/// Ordered kinks `t^0 > t^1 > ... > t^K` with the instance they solve.
#[derive(Clone, Debug)]
pub struct SolutionPath {
    instance: ProblemInstance,
    kinks: Vec<PathPoint>,
    t0: f64,
    termination: Termination,
    midpoint_checks: Option<Vec<(f64, f64)>>,
}

/// Result of evaluating a path at some `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub u: DVector<f64>,
    /// `t` lies below the last kink of a path that stopped before `t = 0`;
    /// the last kink's solution is returned.
    pub beyond_last_kink: bool,
}

impl SolutionPath {
    /// Assembles a path, checking the structural invariants.
    pub fn new(instance: ProblemInstance, kinks: Vec<PathPoint>, termination: Termination) -> Result<Self> {
        let t0 = instance.t_max();
        let first = kinks
            .first()
            .ok_or_else(|| Error::InvalidPath("path has no kinks".into()))?;
        if first.t != t0 {
            return Err(Error::InvalidPath(format!("first kink at t = {} but t0 = {t0}", first.t)));
        }
        if first.u.iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidPath("first kink must have u = 0".into()));
        }
        if let Some(w) = kinks.windows(2).position(|w| !(w[1].t < w[0].t)) {
            return Err(Error::InvalidPath(format!(
                "kink parameters not strictly decreasing at kink {}",
                w + 1
            )));
        }
        if termination == Termination::ReachedZero && kinks.last().unwrap().t != 0.0 {
            return Err(Error::InvalidPath("path marked ReachedZero does not end at t = 0".into()));
        }
        if let Some(k) = kinks.iter().position(|k| k.u.len() != instance.n()) {
            return Err(Error::Dimension(format!("kink {k} has wrong coefficient length")));
        }
        Ok(Self { instance, kinks, t0, termination, midpoint_checks: None })
    }

    /// Rebuilds a path from bare `(t, u)` pairs, recomputing every derived set.
    pub fn from_kinks(
        instance: ProblemInstance,
        kinks: Vec<(f64, DVector<f64>)>,
        termination: Termination,
        tol: &Tolerances,
    ) -> Result<Self> {
        let points = kinks
            .into_iter()
            .map(|(t, u)| PathPoint::at(&instance, t, u, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::new(instance, points, termination)
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn kinks(&self) -> &[PathPoint] {
        &self.kinks
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// `(t, residual)` at every segment midpoint, if recorded.
    pub fn midpoint_checks(&self) -> Option<&[(f64, f64)]> {
        self.midpoint_checks.as_deref()
    }

    /// Records the optimality residual at the midpoint of every segment.
    pub fn with_midpoint_checks(mut self, tol: &Tolerances) -> Self {
        let checks = self
            .kinks
            .windows(2)
            .map(|w| {
                let t = 0.5 * (w[0].t + w[1].t);
                let u = (&w[0].u + &w[1].u) * 0.5;
                let residual = PathPoint::at(&self.instance, t, u, tol)
                    .ok()
                    .and_then(|p| p.subgradient_violation())
                    .unwrap_or(f64::INFINITY);
                (t, residual)
            })
            .collect();
        self.midpoint_checks = Some(checks);
        self
    }

    pub fn kink_ts(&self) -> Vec<f64> {
        self.kinks.iter().map(|k| k.t).collect()
    }

    /// Linear interpolation between bracketing kinks; zero above `t0`.
    pub fn eval(&self, t: f64) -> Evaluation {
        let ts: Vec<f64> = self.kinks.iter().map(|k| k.t).collect();
        let us: Vec<&DVector<f64>> = self.kinks.iter().map(|k| &k.u).collect();
        interpolate(&ts, &us, t)
    }
}

/// Evaluates the path at `t`.
pub fn eval_path(path: &SolutionPath, t: f64) -> Evaluation {
    path.eval(t)
}

pub(crate) fn interpolate(ts: &[f64], us: &[&DVector<f64>], t: f64) -> Evaluation {
    let n = us[0].len();
    if t >= ts[0] {
        return Evaluation { u: DVector::zeros(n), beyond_last_kink: false };
    }
    // First kink with t^k <= t; t^{k-1} > t.
    match ts.iter().position(|&tk| tk <= t) {
        Some(k) => {
            let (hi, lo) = (ts[k - 1], ts[k]);
            let w_hi = (t - lo) / (hi - lo);
            let w_lo = (hi - t) / (hi - lo);
            Evaluation { u: us[k - 1] * w_hi + us[k] * w_lo, beyond_last_kink: false }
        }
        None => Evaluation { u: us[ts.len() - 1].clone(), beyond_last_kink: true },
    }
}

/// Per-kink hitting and leaving sets of a path.
#[derive(Clone, Debug, PartialEq)]
pub struct OneAtATimeReport {
    pub records: Vec<KinkEvents>,
    /// `|Hit^j| + |Leav^j| <= 1` at every kink with `t^j > 0`.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KinkEvents {
    pub kink: usize,
    pub t: f64,
    /// `E(t^j) \ E(t^{j-1})`
    pub hitting: IndexSet,
    /// `A(u(t^{j-1})) \ A(u(t^j))`
    pub leaving: IndexSet,
}

impl KinkEvents {
    pub fn count(&self) -> usize {
        self.hitting.len() + self.leaving.len()
    }
}
