//! Seeded random instances.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::ProblemInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    /// `A_ij ~ N(0, 1/m)`, `f ~ N(0, I)`.
    Gaussian,
    /// `A_ij = ±1/sqrt(m)` with equal probability and `f = A u*` for a
    /// sparse `u*` with `±1` entries on `max(1, m/4)` random coordinates.
    Bernoulli,
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenKind::Gaussian => "gaussian",
            GenKind::Bernoulli => "bernoulli",
        })
    }
}

impl FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(GenKind::Gaussian),
            "bernoulli" => Ok(GenKind::Bernoulli),
            _ => Err(Error::InvalidArgument(format!("unknown generator {s:?}"))),
        }
    }
}

pub fn generate(kind: GenKind, m: usize, n: usize, seed: u64) -> Result<ProblemInstance> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("generated instances need m, n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let (a, f) = match kind {
        GenKind::Gaussian => {
            let a = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
            let f = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            (a, f)
        }
        GenKind::Bernoulli => {
            let a = DMatrix::from_fn(m, n, |_, _| if rng.random::<bool>() { scale } else { -scale });
            let k = (m / 4).clamp(1, n);
            let mut u = DVector::zeros(n);
            for i in sample(&mut rng, n, k) {
                u[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
            let f = &a * u;
            (a, f)
        }
    };
    ProblemInstance::new(DenseMatrix::new(a)?, DenseVector::new(f)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_shaped() {
        for kind in [GenKind::Gaussian, GenKind::Bernoulli] {
            let a = generate(kind, 4, 7, 11).unwrap();
            let b = generate(kind, 4, 7, 11).unwrap();
            assert_eq!((a.m(), a.n()), (4, 7));
            assert_eq!(a.a().as_inner(), b.a().as_inner());
            assert_eq!(a.f().as_inner(), b.f().as_inner());
            let c = generate(kind, 4, 7, 12).unwrap();
            assert_ne!(a.a().as_inner(), c.a().as_inner());
        }
    }

    #[test]
    fn bernoulli_entries_are_signs() {
        let inst = generate(GenKind::Bernoulli, 9, 5, 3).unwrap();
        assert!(inst.a().iter().all(|&v| (v.abs() - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn parse_kind() {
        assert_eq!("Gaussian".parse::<GenKind>().unwrap(), GenKind::Gaussian);
        assert!("uniform".parse::<GenKind>().is_err());
        assert!(generate(GenKind::Gaussian, 0, 3, 1).is_err());
    }
}
