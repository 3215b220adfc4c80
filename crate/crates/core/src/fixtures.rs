//! Small instances with known path structure.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::homotopy::{adversarial_demo, one_at_a_time_report, run_generalized, run_looping, run_standard, HomotopyConfig};
use crate::oracle::{kkt_check, tibshirani_beta, verify_path, VerifyOptions};
use crate::problem::{ProblemInstance, SolutionPath, Termination, Tolerances};

/// 3x3 invertible matrix on which the classical update picks a wrong sign at
/// the very first kink (`t = 192`).
pub fn loris() -> ProblemInstance {
    ProblemInstance::from_rows(
        3,
        3,
        &[-3.0, 4.0, 4.0, -5.0, 1.0, 4.0, 5.0, 1.0, -4.0],
        &[24.0, 17.0, -7.0],
    )
    .expect("valid fixture")
}

/// 3x4 sign matrix where all four correlations tie at `t = 2`.
pub fn tibshirani() -> ProblemInstance {
    ProblemInstance::from_rows(
        3,
        4,
        &[-1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0],
        &[-1.0, -3.0, -1.0],
    )
    .expect("valid fixture")
}

/// 2x4 matrix with three identical columns; the direction set is a simplex
/// at `t = 2` and a careless choice rule produces infinitely many kinks.
pub fn infinite_kinks() -> ProblemInstance {
    ProblemInstance::from_rows(2, 4, &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0], &[2.0, 1.0])
        .expect("valid fixture")
}

/// Names accepted by [`run_fixture`].
pub const FIXTURE_NAMES: [&str; 4] = ["loris", "tibshirani", "infinite-kinks", "infinite-kinks-adversarial"];

/// Default number of kinks replayed by the adversarial fixture.
pub const DEFAULT_ADVERSARIAL_KINKS: usize = 8;

/// Looks up a fixture instance by name. The adversarial fixture shares the
/// instance of `infinite-kinks`.
pub fn instance(name: &str) -> Result<ProblemInstance> {
    match name {
        "loris" => Ok(loris()),
        "tibshirani" => Ok(tibshirani()),
        "infinite-kinks" | "infinite-kinks-adversarial" => Ok(infinite_kinks()),
        _ => Err(Error::InvalidArgument(format!(
            "unknown fixture {name:?}; expected one of {}",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureCheck {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureReport {
    pub name: String,
    pub checks: Vec<FixtureCheck>,
    /// Kink parameters of the main path of the fixture.
    pub kinks: Vec<f64>,
}

impl FixtureReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn check(&mut self, label: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(FixtureCheck { label: label.into(), pass, detail: detail.into() });
    }
}

fn verified(inst: &ProblemInstance, path: &SolutionPath, samples: usize) -> (bool, String) {
    match verify_path(inst, path, samples, &VerifyOptions::default()) {
        Ok(r) => (r.pass, format!("{} samples, worst t = {}", r.samples.len(), r.worst_t)),
        Err(e) => (false, e.to_string()),
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Runs a named fixture end to end and records each expected property.
/// `max_kinks` only affects the adversarial replay.
pub fn run_fixture(name: &str, max_kinks: Option<usize>) -> Result<FixtureReport> {
    let inst = instance(name)?;
    let mut report = FixtureReport { name: name.to_string(), checks: Vec::new(), kinks: Vec::new() };
    let cfg = HomotopyConfig::default();
    let tol = Tolerances::default();
    match name {
        "loris" => {
            let path = run_generalized(&inst, &cfg)?;
            let ts = path.kink_ts();
            report.check("first kink at t = 192", ts[0] == 192.0, format!("t0 = {}", ts[0]));
            let t1 = ts.get(1).copied().unwrap_or(f64::NAN);
            report.check("second kink at t = 63", (t1 - 63.0).abs() <= 1e-9, format!("t1 = {t1}"));
            report.check("generalized path reaches t = 0", path.termination() == Termination::ReachedZero, path.termination().to_string());
            let (ok, detail) = verified(&inst, &path, 200);
            report.check("generalized path verified", ok, detail);
            let std = run_standard(&inst, &cfg)?;
            let stopped = matches!(std.termination(), Termination::SignInconsistency { t, .. } if (t - 192.0).abs() <= 1e-9);
            report.check("standard update is sign-inconsistent at t = 192", stopped, std.termination().to_string());
            let looping = run_looping(&inst, &cfg)?;
            let (ok, detail) = verified(&inst, &looping, 100);
            report.check("looping path verified", ok, detail);
            report.kinks = ts;
        }
        "tibshirani" => {
            let u = DVector::from_column_slice(&[0.0, 0.0, -1.0, 0.0]);
            let r = kkt_check(&inst, 2.0, &u, &tol)?;
            report.check("u = (0, 0, -1, 0) is optimal at t = 2", r <= 1e-12, format!("residual {r:e}"));
            let beta = tibshirani_beta(&inst, 2.0, &u, &tol)?;
            let b = beta.as_slice().to_vec();
            report.check("beta(2) = (-1/4, -1/4, -3/4, -1/4)", close(&b, &[-0.25, -0.25, -0.75, -0.25], 1e-10), format!("{b:?}"));
            let rb = kkt_check(&inst, 2.0, &beta, &tol)?;
            report.check("beta(2) is not optimal", rb >= 0.5, format!("residual {rb}"));
            let path = run_generalized(&inst, &cfg)?;
            let (ok, detail) = verified(&inst, &path, 100);
            report.check("generalized path verified", ok, detail);
            let one = one_at_a_time_report(&path);
            report.check("one-at-a-time condition fails", !one.holds, format!("{} kinks", one.records.len()));
            report.kinks = path.kink_ts();
        }
        "infinite-kinks" => {
            let path = run_generalized(&inst, &cfg)?;
            let ts = path.kink_ts();
            report.check("kinks at t = 2, 1, 0", close(&ts, &[2.0, 1.0, 0.0], 1e-10), format!("{ts:?}"));
            let u0 = path.kinks().last().unwrap().u.as_slice().to_vec();
            let two = 2.0 / 3.0;
            report.check("u(0) = (2/3, 2/3, 2/3, 1)", close(&u0, &[two, two, two, 1.0], 1e-10), format!("{u0:?}"));
            let (ok, detail) = verified(&inst, &path, 100);
            report.check("generalized path verified", ok, detail);
            report.kinks = ts;
        }
        "infinite-kinks-adversarial" => {
            let k = max_kinks.unwrap_or(DEFAULT_ADVERSARIAL_KINKS);
            let path = adversarial_demo(k)?;
            let ts = path.kink_ts();
            let expected: Vec<f64> = (0..k as i32).map(|j| 2.0 * 0.5f64.powi(j)).collect();
            report.check(
                "kinks at t = 2^-k",
                close(&ts, &expected, 1e-10),
                format!("{ts:?}"),
            );
            report.check("every replayed direction is admissible", true, format!("{} segments", ts.len().saturating_sub(1)));
            report.kinks = ts;
        }
        _ => unreachable!("instance() rejects unknown names"),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_pass() {
        for name in FIXTURE_NAMES {
            let report = run_fixture(name, None).unwrap();
            assert!(report.pass(), "{report:#?}");
        }
    }

    #[test]
    fn unknown_fixture() {
        assert!(run_fixture("nope", None).is_err());
    }

    #[test]
    fn adversarial_length() {
        let report = run_fixture("infinite-kinks-adversarial", Some(6)).unwrap();
        assert_eq!(report.kinks, vec![2.0, 1.0, 0.5, 0.25, 0.125, 0.0625]);
    }
}
