//! Active-set least squares with a mix of free and nonnegative variables.
//!
//! Minimizes `||C x - b||_2` subject to `x_j >= 0` for `j >= n_free`.
//! Lawson-Hanson iteration with pseudoinverse subproblem solves, so
//! rank-deficient column sets are allowed. Entering variables are chosen by
//! the lowest eligible index rather than the largest gradient, which keeps
//! the pivot sequence deterministic and rules out cycling among ties.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::pinv_solve;

#[derive(Clone, Copy, Debug)]
pub(crate) struct NnlsSettings {
    pub rank_tol: f64,
    /// Relative threshold on the dual gradient for entering a variable.
    pub grad_tol: f64,
    pub max_iters: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct NnlsSolution {
    pub x: DVector<f64>,
}

struct Problem<'a> {
    c: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    rank_tol: f64,
}

impl Problem<'_> {
    /// Least squares over the columns in `passive`, zero elsewhere.
    fn subproblem(&self, passive: &[usize]) -> DVector<f64> {
        let mut z = DVector::zeros(self.c.ncols());
        if passive.is_empty() {
            return z;
        }
        let sub = self.c.select_columns(passive);
        let zp = pinv_solve(&sub, self.b, self.rank_tol);
        for (k, &j) in passive.iter().enumerate() {
            z[j] = zp[k];
        }
        z
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        self.b - self.c * x
    }
}

pub(crate) fn solve(
    c: &DMatrix<f64>,
    b: &DVector<f64>,
    n_free: usize,
    settings: &NnlsSettings,
) -> Result<NnlsSolution> {
    let n = c.ncols();
    let prob = Problem { c, b, rank_tol: settings.rank_tol };
    let col_norms: Vec<f64> = (0..n).map(|j| c.column(j).norm()).collect();
    let b_norm = b.norm();

    let mut passive: Vec<usize> = (0..n_free).collect();
    let mut x = prob.subproblem(&passive);
    let mut iterations = 0;

    loop {
        let grad = c.tr_mul(&prob.residual(&x));
        let mut rejected = vec![false; n];
        let entering = loop {
            let candidate = (n_free..n).find(|&j| {
                !rejected[j]
                    && !passive.contains(&j)
                    && grad[j] > settings.grad_tol * col_norms[j] * b_norm.max(f64::MIN_POSITIVE)
            });
            let Some(j) = candidate else { break None };
            let mut trial = passive.clone();
            trial.push(j);
            trial.sort_unstable();
            let z = prob.subproblem(&trial);
            // Round-off can make a barely eligible column come back with a
            // nonpositive coefficient; skip it for this sweep.
            if z[j] <= 0.0 {
                rejected[j] = true;
                continue;
            }
            break Some((trial, z));
        };
        let Some((trial, mut z)) = entering else {
            return Ok(NnlsSolution { x });
        };
        passive = trial;

        loop {
            iterations += 1;
            if iterations > settings.max_iters {
                let residual = prob.residual(&x).norm();
                return Err(Error::DirectionIterationCap {
                    iterations: settings.max_iters,
                    residual,
                    best: x.iter().copied().collect(),
                });
            }
            let blocking: Vec<usize> = passive.iter().copied().filter(|&j| j >= n_free && z[j] <= 0.0).collect();
            if blocking.is_empty() {
                x = z;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min)
                .clamp(0.0, 1.0);
            x += (&z - &x) * alpha;
            let x_scale = x.amax().max(f64::MIN_POSITIVE);
            passive.retain(|&j| j < n_free || x[j] > 1e-15 * x_scale);
            for j in n_free..n {
                if !passive.contains(&j) {
                    x[j] = 0.0;
                }
            }
            z = prob.subproblem(&passive);
        }
    }
}
