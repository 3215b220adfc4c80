//! Python bindings. Matrices cross the boundary as lists of rows and vectors
//! as flat lists, so the module has no NumPy requirement.

use lassopath_core::fixtures::{self, FIXTURE_NAMES};
use lassopath_core::gen::{generate as gen_instance, GenKind};
use lassopath_core::io::PathFile;
use lassopath_core::oracle::{kkt_check as core_kkt, verify_path, VerifyOptions};
use lassopath_core::{run, Algorithm, Error, HomotopyConfig, ProblemInstance, SolutionPath, Termination, Tolerances};
use nalgebra::DVector;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(lassopath, LassoPathError, PyException, "Raised when a path computation fails.");
create_exception!(lassopath, CapExceeded, LassoPathError, "An iteration or enumeration cap was hit.");

fn to_py(e: Error) -> PyErr {
    let root = match &e {
        Error::AtKink { source, .. } => source.as_ref(),
        other => other,
    };
    match root {
        Error::LoopCapExceeded { .. } | Error::DirectionIterationCap { .. } => CapExceeded::new_err(e.to_string()),
        Error::Dimension(_)
        | Error::NonFinite(_)
        | Error::IndexOutOfRange { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidPath(_)
        | Error::Parse { .. } => PyValueError::new_err(e.to_string()),
        _ => LassoPathError::new_err(e.to_string()),
    }
}

/// Builds an instance from a list of rows and a right-hand side.
pub fn instance_from_rows(rows: &[Vec<f64>], f: &[f64]) -> Result<ProblemInstance, Error> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("rows have different lengths".into()));
    }
    let flat: Vec<f64> = rows.concat();
    ProblemInstance::from_rows(m, n, &flat, f)
}

pub fn parse_algorithm(name: &str) -> Result<Algorithm, Error> {
    match name {
        "generalized" => Ok(Algorithm::Generalized),
        "standard" => Ok(Algorithm::Standard),
        "looping" => Ok(Algorithm::Looping),
        _ => Err(Error::InvalidArgument(format!(
            "unknown algorithm {name:?}; expected generalized, standard or looping"
        ))),
    }
}

/// A Lasso problem `min 1/2 ||A u - f||^2 + t ||u||_1`.
#[pyclass(name = "Problem", module = "lassopath", frozen)]
struct PyProblem {
    inner: ProblemInstance,
}

#[pymethods]
impl PyProblem {
    #[new]
    fn new(a: Vec<Vec<f64>>, f: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: instance_from_rows(&a, &f).map_err(to_py)? })
    }

    /// Instance of a named fixture.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        Ok(Self { inner: fixtures::instance(name).map_err(to_py)? })
    }

    /// Random instance; `kind` is "gaussian" or "bernoulli".
    #[staticmethod]
    #[pyo3(signature = (kind, m, n, seed = 0))]
    fn generate(kind: &str, m: usize, n: usize, seed: u64) -> PyResult<Self> {
        let kind: GenKind = kind.parse().map_err(to_py)?;
        Ok(Self { inner: gen_instance(kind, m, n, seed).map_err(to_py)? })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// `||A^T f||_inf`, where the path starts.
    #[getter]
    fn t_max(&self) -> f64 {
        self.inner.t_max()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        let a = self.inner.a();
        (0..a.rows()).map(|i| a.row(i).iter().copied().collect()).collect()
    }

    #[getter]
    fn f(&self) -> Vec<f64> {
        self.inner.f().to_vec()
    }

    /// Optimality residual of `u` at `t`; zero means optimal.
    fn kkt_residual(&self, t: f64, u: Vec<f64>) -> PyResult<f64> {
        core_kkt(&self.inner, t, &DVector::from_vec(u), &Tolerances::default()).map_err(to_py)
    }

    /// Computes the solution path.
    #[pyo3(signature = (algorithm = "generalized", eq_tol = None, kkt_tol = None, max_iters = None, loop_cap = None))]
    fn solve(
        &self,
        algorithm: &str,
        eq_tol: Option<f64>,
        kkt_tol: Option<f64>,
        max_iters: Option<usize>,
        loop_cap: Option<usize>,
    ) -> PyResult<PyPath> {
        let mut cfg = HomotopyConfig::with_algorithm(parse_algorithm(algorithm).map_err(to_py)?);
        if let Some(v) = eq_tol {
            cfg.tolerances.eq_tol = v;
        }
        if let Some(v) = kkt_tol {
            cfg.tolerances.kkt_tol = v;
        }
        if let Some(v) = max_iters {
            cfg.tolerances.max_iters = v;
        }
        if let Some(v) = loop_cap {
            cfg.loop_cap = v;
        }
        Ok(PyPath { inner: run(&self.inner, &cfg).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("Problem(m={}, n={})", self.inner.m(), self.inner.n())
    }
}

/// A piecewise linear solution path.
#[pyclass(name = "Path", module = "lassopath", frozen)]
struct PyPath {
    inner: SolutionPath,
}

#[pymethods]
impl PyPath {
    /// Kink parameters, strictly decreasing.
    #[getter]
    fn ts(&self) -> Vec<f64> {
        self.inner.kink_ts()
    }

    /// Coefficients at each kink.
    #[getter]
    fn us(&self) -> Vec<Vec<f64>> {
        self.inner.kinks().iter().map(|k| k.u.iter().copied().collect()).collect()
    }

    /// "ReachedZero", "IterationCap" or "SignInconsistency(index=..,t=..)".
    #[getter]
    fn termination(&self) -> String {
        self.inner.termination().to_string()
    }

    /// `(index, t)` when the standard update stopped, else None.
    #[getter]
    fn sign_inconsistency(&self) -> Option<(usize, f64)> {
        match self.inner.termination() {
            Termination::SignInconsistency { index, t } => Some((index, t)),
            _ => None,
        }
    }

    /// Solution at `t` by linear interpolation between kinks.
    fn __call__(&self, t: f64) -> Vec<f64> {
        self.inner.eval(t).u.iter().copied().collect()
    }

    /// Compares the path against an independent solver at sampled values
    /// of `t`. Returns a dict with `pass`, `worst_t` and per-sample data.
    #[pyo3(signature = (samples = 100, kkt_tol = 1e-8, obj_tol = 1e-6, seed = 0))]
    fn verify<'py>(&self, py: Python<'py>, samples: usize, kkt_tol: f64, obj_tol: f64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let opts = VerifyOptions { kkt_tol, obj_tol, seed, ..Default::default() };
        let inst = self.inner.instance();
        let report = py.detach(|| verify_path(inst, &self.inner, samples, &opts)).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("pass", report.pass)?;
        out.set_item("worst_t", report.worst_t)?;
        out.set_item("seed", report.seed)?;
        let rows: Vec<(f64, f64, f64, Option<String>)> = report
            .samples
            .into_iter()
            .map(|s| (s.t, s.kkt_residual, s.objective_gap, s.note))
            .collect();
        out.set_item("samples", rows)?;
        Ok(out)
    }

    /// The JSON form written by `lassopath solve`.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&PathFile::from_path(&self.inner)).map_err(|e| to_py(e.into()))
    }

    fn __len__(&self) -> usize {
        self.inner.kinks().len()
    }

    fn __repr__(&self) -> String {
        format!("Path(kinks={}, termination={})", self.inner.kinks().len(), self.inner.termination())
    }
}

/// `(name, [(label, pass, detail)], kinks)`
type FixtureSummary = (String, Vec<(String, bool, String)>, Vec<f64>);

/// Runs a named fixture end to end.
#[pyfunction]
#[pyo3(signature = (name, max_kinks = None))]
fn run_fixture(name: &str, max_kinks: Option<usize>) -> PyResult<FixtureSummary> {
    let r = fixtures::run_fixture(name, max_kinks).map_err(to_py)?;
    let checks = r.checks.into_iter().map(|c| (c.label, c.pass, c.detail)).collect();
    Ok((r.name, checks, r.kinks))
}

#[pymodule]
fn lassopath(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyPath>()?;
    m.add_function(wrap_pyfunction!(run_fixture, m)?)?;
    m.add("FIXTURE_NAMES", FIXTURE_NAMES.to_vec())?;
    m.add("LassoPathError", m.py().get_type::<LassoPathError>())?;
    m.add("CapExceeded", m.py().get_type::<CapExceeded>())?;
    Ok(())
}
