//! Complete solution paths of l1-regularized least squares,
//!
//! `u(t) ∈ argmin_u 1/2 ||A u - f||^2 + t ||u||_1`  for all `t >= 0`,
//!
//! computed by a homotopy whose direction at each kink is the minimal-norm
//! solution of a sign-constrained nonnegative least squares problem. The
//! classical pseudoinverse homotopy and its subset-looping variant are
//! included for comparison, together with an independent proximal-gradient
//! oracle for verifying computed paths.

pub mod direction;
pub mod error;
pub mod fixtures;
pub mod gen;
pub mod homotopy;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod problem;

pub use error::{Error, Result};
pub use homotopy::{run, Algorithm, HomotopyConfig};
pub use linalg::{DenseMatrix, DenseVector, IndexSet};
pub use problem::{ProblemInstance, SolutionPath, Termination, Tolerances};
