//! Dense real linear algebra used by the path solvers.
//!
//! Storage is backed by `nalgebra`; the newtypes here only add the
//! finiteness checks and the column-subset helpers the solvers need.

use std::fmt;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative singular-value cutoff for pseudoinverse solves.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// A dense `rows x cols` matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    /// Builds a matrix from entries listed row by row.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(m, n, &flat)
    }

    pub fn new(inner: DMatrix<f64>) -> Result<Self> {
        if let Some(pos) = inner.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % inner.nrows(), pos / inner.nrows());
            return Err(Error::NonFinite(format!("matrix entry ({r}, {c})")));
        }
        Ok(Self(inner))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_inner(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            out.extend(self.0.row(i).iter());
        }
        out
    }

    /// `A x`
    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0 * x
    }

    /// `A^T y`
    pub fn tr_mul_vec(&self, y: &DVector<f64>) -> DVector<f64> {
        self.0.tr_mul(y)
    }
}

impl Deref for DenseMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// A dense vector with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVector(DVector<f64>);

impl DenseVector {
    pub fn new(inner: DVector<f64>) -> Result<Self> {
        if let Some(i) = inner.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("vector entry {i}")));
        }
        Ok(Self(inner))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_inner(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }
}

impl Deref for DenseVector {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Strictly increasing list of column indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// `{0, 1, ..., n-1}`
    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        Self(idx)
    }

    /// Validates that every index is below `n`.
    pub fn checked(idx: Vec<usize>, n: usize) -> Result<Self> {
        let set = Self::from_unsorted(idx);
        match set.0.last() {
            Some(&last) if last >= n => Err(Error::IndexOutOfRange { index: last, bound: n }),
            _ => Ok(set),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        Self(self.iter().filter(|&i| !other.contains(i)).collect())
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        Self::from_unsorted(self.iter().chain(other.iter()).collect())
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        Self(self.iter().filter(|&i| other.contains(i)).collect())
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    /// Indices in `0..n` not in the set.
    pub fn complement(&self, n: usize) -> IndexSet {
        Self((0..n).filter(|&i| !self.contains(i)).collect())
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

fn check_indices(set: &IndexSet, n: usize) -> Result<()> {
    match set.as_slice().last() {
        Some(&last) if last >= n => Err(Error::IndexOutOfRange { index: last, bound: n }),
        _ => Ok(()),
    }
}

/// Submatrix made of the columns of `a` listed in `set`.
pub fn columns(a: &DMatrix<f64>, set: &IndexSet) -> Result<DMatrix<f64>> {
    check_indices(set, a.ncols())?;
    Ok(a.select_columns(set.as_slice()))
}

/// `A_S^T A_T`
pub fn gram(a: &DMatrix<f64>, s: &IndexSet, t: &IndexSet) -> Result<DMatrix<f64>> {
    let a_s = columns(a, s)?;
    let a_t = columns(a, t)?;
    Ok(a_s.tr_mul(&a_t))
}

/// Minimal-norm least squares solution `G^+ b`.
///
/// Singular values `sigma_i <= rank_tol * sigma_max` are treated as zero.
pub fn least_squares_min_norm(g: &DMatrix<f64>, b: &DVector<f64>, rank_tol: f64) -> Result<DVector<f64>> {
    if b.len() != g.nrows() {
        return Err(Error::Dimension(format!(
            "right-hand side has {} entries, matrix has {} rows",
            b.len(),
            g.nrows()
        )));
    }
    Ok(pinv_solve(g, b, rank_tol))
}

/// Thin SVD `a = U diag(s) V^T` of a matrix with at least as many rows as
/// columns, by one-sided Jacobi rotations. `V` is square.
///
/// The LAPACK-style bidiagonal SVD in nalgebra 0.35 returns wrong singular
/// triplets on some rank-deficient matrices with repeated columns, which are
/// common here, so the factorization is done directly.
struct Svd {
    u: DMatrix<f64>,
    s: DVector<f64>,
    v: DMatrix<f64>,
}

const JACOBI_SWEEPS: usize = 80;

fn jacobi_svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut u = a.clone();
    let mut v = DMatrix::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dot(&u.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut u, &mut v] {
                    for i in 0..mat.nrows() {
                        let (xp, xq) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = c * xp - s * xq;
                        mat[(i, q)] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s = DVector::from_fn(n, |j, _| u.column(j).norm());
    for j in 0..n {
        if s[j] > 0.0 {
            let col = u.column(j) / s[j];
            u.set_column(j, &col);
        }
    }
    Svd { u, s, v }
}

/// Singular values of `g` in no particular order.
fn singular_values(g: &DMatrix<f64>) -> DVector<f64> {
    if g.nrows() >= g.ncols() {
        jacobi_svd(g).s
    } else {
        jacobi_svd(&g.transpose()).s
    }
}

/// Unchecked variant of [`least_squares_min_norm`] for internal callers.
pub(crate) fn pinv_solve(g: &DMatrix<f64>, b: &DVector<f64>, rank_tol: f64) -> DVector<f64> {
    let (m, n) = g.shape();
    if n == 0 || m == 0 {
        return DVector::zeros(n);
    }
    // For g = U S V^T: g^+ b = V S^+ U^T b. Wide matrices are factored as
    // g^T = U S V^T, so g^+ b = U S^+ V^T b.
    let (left, svd) = if m >= n { (false, jacobi_svd(g)) } else { (true, jacobi_svd(&g.transpose())) };
    let sigma_max = svd.s.max();
    if sigma_max == 0.0 {
        return DVector::zeros(n);
    }
    let cutoff = rank_tol * sigma_max;
    let (into, out) = if left { (&svd.v, &svd.u) } else { (&svd.u, &svd.v) };
    let mut coef = into.tr_mul(b);
    for (c, &s) in coef.iter_mut().zip(svd.s.iter()) {
        *c = if s > cutoff { *c / s } else { 0.0 };
    }
    out * coef
}

/// Numerical rank with the same relative cutoff as [`pinv_solve`].
pub fn rank(g: &DMatrix<f64>, rank_tol: f64) -> usize {
    if g.is_empty() {
        return 0;
    }
    let sv = singular_values(g);
    let cutoff = rank_tol * sv.max();
    sv.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}

/// Orthonormal basis of the null space of `g`, one column per dimension.
pub(crate) fn null_space(g: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let n = g.ncols();
    if g.nrows() == 0 || n == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to at least n rows so that V spans all of R^n.
    let padded = if g.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (g.nrows(), n)).copy_from(g);
        p
    } else {
        g.clone()
    };
    let svd = jacobi_svd(&padded);
    let sigma_max = svd.s.max();
    let cutoff = rank_tol * sigma_max;
    let null: Vec<usize> = (0..n).filter(|&k| sigma_max == 0.0 || svd.s[k] <= cutoff).collect();
    let mut basis = DMatrix::zeros(n, null.len());
    for (c, &k) in null.iter().enumerate() {
        basis.set_column(c, &svd.v.column(k));
    }
    basis
}

pub(crate) fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn l1_norm(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}
