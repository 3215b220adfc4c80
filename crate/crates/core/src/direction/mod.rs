//! Possible directions of the solution path at a kink.
//!
//! At an optimal `(t, u)` the directions `d` for which `u + (t - s) d` stays
//! optimal for `s` slightly below `t` are exactly the minimizers of
//! `||A d - r/t||^2` subject to `d_i p_i >= 0` on `E \ A` and `d_i = 0`
//! off `E`. [`solve_direction`] finds one such minimizer,
//! [`min_norm_direction`] projects it to the unique element of least
//! Euclidean norm, and [`direction_set_membership`] checks a candidate
//! against the optimality system with multipliers rebuilt in closed form.

mod nnls;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, null_space, pinv_solve, IndexSet};
use crate::problem::{PathPoint, ProblemInstance, Tolerances};

use self::nnls::NnlsSettings;

/// Relative gradient threshold for the active-set solver, as a fraction of
/// `kkt_tol`.
const GRAD_TOL_FACTOR: f64 = 1e-3;

/// Multiple of machine epsilon in the rounding floor of [`DirectionProblem::check`].
const ROUNDOFF_FACTOR: f64 = 32.0;

/// The sign-constrained least squares problem whose solution set is the
/// direction set at a kink.
#[derive(Clone, Debug)]
pub struct DirectionProblem<'a> {
    a: &'a DMatrix<f64>,
    /// `r(t)/t`
    target: DVector<f64>,
    /// `A^T target`, equal to the subgradient at a path point.
    p: DVector<f64>,
    /// Unconstrained indices (the active set).
    free: IndexSet,
    /// `(index, sign)` for indices in `E \ A`; `d_i * sign >= 0`.
    signs: Vec<(usize, f64)>,
    /// Indices forced to zero (complement of `E`).
    zero: IndexSet,
}

impl<'a> DirectionProblem<'a> {
    /// Builds a problem from explicit data. `free` and the signed indices
    /// must be disjoint; everything else is forced to zero.
    pub fn new(
        a: &'a DMatrix<f64>,
        target: DVector<f64>,
        free: IndexSet,
        signs: Vec<(usize, f64)>,
    ) -> Result<Self> {
        let n = a.ncols();
        if target.len() != a.nrows() {
            return Err(Error::Dimension(format!(
                "target has {} entries, matrix has {} rows",
                target.len(),
                a.nrows()
            )));
        }
        let mut signs = signs;
        signs.sort_by_key(|&(i, _)| i);
        if signs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate signed index".into()));
        }
        if let Some(&(i, s)) = signs.iter().find(|&&(i, s)| i >= n || (s != 1.0 && s != -1.0)) {
            return Err(Error::InvalidArgument(format!("bad signed index {i} with sign {s}")));
        }
        let signed: IndexSet = signs.iter().map(|&(i, _)| i).collect();
        if free.as_slice().last().is_some_and(|&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: *free.as_slice().last().unwrap(), bound: n });
        }
        if !free.intersection(&signed).is_empty() {
            return Err(Error::InvalidArgument("free and signed indices overlap".into()));
        }
        let zero = free.union(&signed).complement(n);
        let p = a.tr_mul(&target);
        Ok(Self { a, target, p, free, signs, zero })
    }

    /// The direction problem at a kink with `t > 0`.
    pub fn at_point(inst: &'a ProblemInstance, point: &PathPoint) -> Result<Self> {
        let p = point
            .p
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("no direction problem at t = 0".into()))?;
        let constrained = point.equicorrelation.difference(&point.active);
        let signs = constrained.iter().map(|i| (i, if p[i] >= 0.0 { 1.0 } else { -1.0 })).collect();
        let free = point.active.clone();
        Self::new(inst.a(), &point.r / point.t, free, signs)
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn p(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn free(&self) -> &IndexSet {
        &self.free
    }

    pub fn signs(&self) -> &[(usize, f64)] {
        &self.signs
    }

    pub fn zero(&self) -> &IndexSet {
        &self.zero
    }

    pub fn constrained(&self) -> IndexSet {
        self.signs.iter().map(|&(i, _)| i).collect()
    }

    /// `E = free ∪ signed`
    pub fn support_allowed(&self) -> IndexSet {
        self.free.union(&self.constrained())
    }

    pub fn objective(&self, d: &DVector<f64>) -> f64 {
        (self.a * d - &self.target).norm_squared()
    }

    /// Columns in solver order: free first, then the sign-flipped constrained ones.
    fn solver_columns(&self) -> (DMatrix<f64>, Vec<(usize, f64)>) {
        let layout: Vec<(usize, f64)> = self.free.iter().map(|i| (i, 1.0)).chain(self.signs.iter().copied()).collect();
        let mut c = DMatrix::zeros(self.a.nrows(), layout.len());
        for (k, &(i, s)) in layout.iter().enumerate() {
            c.set_column(k, &(self.a.column(i) * s));
        }
        (c, layout)
    }

    fn expand(&self, x: &DVector<f64>, layout: &[(usize, f64)]) -> DVector<f64> {
        let mut d = DVector::zeros(self.a.ncols());
        for (k, &(i, s)) in layout.iter().enumerate() {
            d[i] = s * x[k];
        }
        d
    }

    /// Optimality residuals of `d` with multipliers `lambda`, `theta`
    /// reconstructed from `g = p - A^T A d`.
    pub fn check(&self, d: &DVector<f64>, tol: &Tolerances) -> KktReport {
        let g = self.a.tr_mul(&(&self.target - self.a * d));
        let ata_d = &self.p - &g;
        let scale_g = 1.0_f64.max(inf_norm(&self.p)).max(inf_norm(&ata_d));
        let scale_d = 1.0 + inf_norm(d);
        // Absolute rounding error in forming g. Without it, directions on
        // nearly singular column sets (huge d) fail on pure round-off.
        let a_norm = self.a.norm();
        let floor = ROUNDOFF_FACTOR * f64::EPSILON * a_norm * (self.target.norm() + a_norm * d.norm());
        let g = g.map(|v| v.signum() * (v.abs() - floor).max(0.0));

        let mut report = KktReport::default();
        let bump = |slot: &mut f64, value: f64, i: usize, worst: &mut (f64, Option<usize>)| {
            *slot = slot.max(value);
            if value > worst.0 {
                *worst = (value, Some(i));
            }
        };
        let mut worst = (0.0, None);
        for i in self.free.iter() {
            bump(&mut report.stationarity, g[i].abs() / scale_g, i, &mut worst);
        }
        for i in self.zero.iter() {
            bump(&mut report.feasibility, d[i].abs() / scale_d, i, &mut worst);
        }
        for &(i, s) in &self.signs {
            bump(&mut report.feasibility, (-d[i] * s).max(0.0) / scale_d, i, &mut worst);
            bump(&mut report.multiplier_sign, (g[i] * s).max(0.0) / scale_g, i, &mut worst);
            bump(&mut report.complementarity, (g[i] * d[i]).abs() / (scale_g * scale_d), i, &mut worst);
        }
        report.max_residual = worst.0;
        report.worst_index = worst.1;
        report.pass = report.max_residual <= tol.kkt_tol;
        report
    }

    fn certificate(&self, d: DVector<f64>, is_min_norm: bool, tol: &Tolerances) -> DirectionCertificate {
        let g = self.a.tr_mul(&(&self.target - self.a * &d));
        let n = self.a.ncols();
        let mut lambda = DVector::zeros(n);
        let mut theta = DVector::zeros(n);
        for &(i, _) in &self.signs {
            lambda[i] = g[i];
        }
        for i in self.zero.iter() {
            theta[i] = g[i];
        }
        let kkt = self.check(&d, tol);
        DirectionCertificate { d, lambda, theta, is_min_norm, kkt }
    }

    /// Direction `d_S = A_S^+ (r/t)`, zero off `S`.
    pub fn pinv_direction(&self, s: &IndexSet, rank_tol: f64) -> DVector<f64> {
        let sub = self.a.select_columns(s.as_slice());
        let ds = pinv_solve(&sub, &self.target, rank_tol);
        let mut d = DVector::zeros(self.a.ncols());
        for (k, i) in s.iter().enumerate() {
            d[i] = ds[k];
        }
        d
    }

    fn settings(&self, tol: &Tolerances) -> NnlsSettings {
        NnlsSettings { rank_tol: tol.rank_tol, grad_tol: tol.kkt_tol * GRAD_TOL_FACTOR, max_iters: tol.max_iters }
    }
}

/// Residuals of the optimality system for a candidate direction. All
/// entries are scaled to be dimensionless.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KktReport {
    pub pass: bool,
    pub max_residual: f64,
    /// `(A^T A d - p)_i` on the active set.
    pub stationarity: f64,
    /// `d` off `E` and wrong-signed `d_i` on `E \ A`.
    pub feasibility: f64,
    /// `lambda_i p_i > 0` on `E \ A`.
    pub multiplier_sign: f64,
    /// `lambda_i d_i` on `E \ A`.
    pub complementarity: f64,
    pub worst_index: Option<usize>,
}

/// A direction together with multipliers proving it lies in the direction set.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionCertificate {
    pub d: DVector<f64>,
    /// Supported on `E \ A`.
    pub lambda: DVector<f64>,
    /// Supported on the complement of `E`.
    pub theta: DVector<f64>,
    pub is_min_norm: bool,
    pub kkt: KktReport,
}

/// Some minimizer of the sign-constrained least squares problem.
pub fn solve_direction(prob: &DirectionProblem<'_>, tol: &Tolerances) -> Result<DirectionCertificate> {
    let (c, layout) = prob.solver_columns();
    let sol = nnls::solve(&c, &prob.target, prob.free.len(), &prob.settings(tol))?;
    let cert = prob.certificate(prob.expand(&sol.x, &layout), false, tol);
    if !cert.kkt.pass {
        return Err(Error::InconsistentDirection { residual: cert.kkt.max_residual });
    }
    Ok(cert)
}

/// The unique element of least Euclidean norm in the direction set, given
/// any member `d_any`.
///
/// Solves `min ||d||^2` subject to `A d = A d_any`, `d = 0` off `E`, and the
/// sign constraints. Writing `d = d_p + Z w` with `d_p` the minimum-norm
/// solution of the equality constraints and `Z` an orthonormal null-space
/// basis turns this into `min ||w||` subject to `Z_K w >= -d_p,K`, which is
/// solved through its nonnegative least squares dual.
pub fn min_norm_direction(
    prob: &DirectionProblem<'_>,
    d_any: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DirectionCertificate> {
    if d_any.len() != prob.a.ncols() {
        return Err(Error::Dimension("direction length does not match the matrix".into()));
    }
    let (c, layout) = prob.solver_columns();
    let n_free = prob.free.len();
    let x_any = DVector::from_iterator(layout.len(), layout.iter().map(|&(i, s)| s * d_any[i]));
    let b = &c * &x_any;
    let b_scale = 1.0 + b.norm();

    let x_p = pinv_solve(&c, &b, tol.rank_tol);
    let z = null_space(&c, tol.rank_tol);
    let k = layout.len() - n_free;
    let mut x = if z.ncols() == 0 || k == 0 {
        x_p.clone()
    } else {
        let g = z.rows(n_free, k).into_owned();
        // Round-off can leave x_p slightly negative on a sign-constrained
        // coordinate the null space cannot move; such rows are satisfied.
        let slack = 1e-12 * (1.0 + x_p.amax());
        let h = (-x_p.rows(n_free, k)).map(|v| if v <= slack { v.min(0.0) } else { v });
        if h.iter().all(|&v| v <= 0.0) {
            x_p.clone()
        } else {
            let w = least_distance(&g, &h.into_owned(), prob, tol)?;
            &x_p + &z * w
        }
    };
    for v in x.iter_mut().skip(n_free) {
        *v = v.max(0.0);
    }
    if (&c * &x - &b).norm() > tol.kkt_tol * b_scale {
        return Err(Error::InconsistentDirection { residual: (&c * &x - &b).norm() / b_scale });
    }
    let x = polish(&c, &b, n_free, x, tol);
    let cert = prob.certificate(prob.expand(&x, &layout), true, tol);
    if !cert.kkt.pass {
        return Err(Error::InconsistentDirection { residual: cert.kkt.max_residual });
    }
    Ok(cert)
}

/// `min ||w||` subject to `G w >= h`, via the nonnegative least squares
/// problem `min ||[G^T; h^T] y - e_last||`, `y >= 0`.
fn least_distance(
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    prob: &DirectionProblem<'_>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let (k, q) = g.shape();
    let mut e = DMatrix::zeros(q + 1, k);
    e.view_mut((0, 0), (q, k)).copy_from(&g.transpose());
    e.row_mut(q).copy_from(&h.transpose());
    let mut rhs = DVector::zeros(q + 1);
    rhs[q] = 1.0;
    let sol = nnls::solve(&e, &rhs, 0, &prob.settings(tol))?;
    let res = &e * &sol.x - &rhs;
    if res[q].abs() <= f64::EPSILON {
        return Err(Error::InconsistentDirection { residual: f64::INFINITY });
    }
    Ok(-res.rows(0, q) / res[q])
}

/// Re-solves on the detected support for a cleaner minimum-norm point.
/// Kept only if it is feasible, consistent and no longer than `x`.
fn polish(c: &DMatrix<f64>, b: &DVector<f64>, n_free: usize, x: DVector<f64>, tol: &Tolerances) -> DVector<f64> {
    let thresh = 1e-10 * (1.0 + x.amax());
    let support: Vec<usize> = (0..x.len()).filter(|&j| j < n_free || x[j] > thresh).collect();
    let sub = c.select_columns(&support);
    let xs = pinv_solve(&sub, b, tol.rank_tol);
    let mut y = DVector::zeros(x.len());
    for (k, &j) in support.iter().enumerate() {
        y[j] = xs[k];
    }
    let scale = 1.0 + x.amax();
    let feasible = y.iter().skip(n_free).all(|&v| v >= -1e-12 * scale);
    let consistent = (c * &y - b).norm() <= 1e-12 * (1.0 + b.norm());
    let shorter = y.norm() <= x.norm() * (1.0 + 1e-12) + 1e-15;
    if feasible && consistent && shorter {
        for v in y.iter_mut().skip(n_free) {
            *v = v.max(0.0);
        }
        y
    } else {
        x
    }
}

/// The minimal-norm direction, using the closed forms `d_S = A_S^+ (r/t)`
/// for `S` in `{A, E}` when at most one index is sign-constrained, and the
/// general two-stage solve otherwise.
pub fn minimal_direction(prob: &DirectionProblem<'_>, tol: &Tolerances) -> Result<DirectionCertificate> {
    if prob.signs.len() <= 1 {
        let all = prob.support_allowed();
        let best = [prob.free.clone(), all]
            .iter()
            .map(|s| prob.pinv_direction(s, tol.rank_tol))
            .filter(|d| prob.check(d, tol).pass)
            .min_by(|x, y| x.norm().total_cmp(&y.norm()));
        if let Some(d) = best {
            return Ok(prob.certificate(d, true, tol));
        }
    }
    let any = solve_direction(prob, tol)?;
    min_norm_direction(prob, &any.d, tol)
}

/// Checks whether `d` is a possible direction at `(t, u)`.
pub fn direction_set_membership(
    inst: &ProblemInstance,
    t: f64,
    u: &DVector<f64>,
    d: &DVector<f64>,
    tol: &Tolerances,
) -> Result<KktReport> {
    if d.len() != inst.n() {
        return Err(Error::Dimension("direction length does not match the matrix".into()));
    }
    let point = PathPoint::at(inst, t, u.clone(), tol)?;
    let prob = DirectionProblem::at_point(inst, &point)?;
    Ok(prob.check(d, tol))
}
