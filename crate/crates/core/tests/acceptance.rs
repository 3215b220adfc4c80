//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lassopath_core::direction::{
    direction_set_membership, min_norm_direction, minimal_direction, solve_direction, DirectionProblem,
};
use lassopath_core::fixtures;
use lassopath_core::gen::{generate, GenKind};
use lassopath_core::homotopy::{
    adversarial_demo, one_at_a_time_report, run_generalized, run_looping, run_standard, HomotopyConfig,
};
use lassopath_core::linalg::{columns, least_squares_min_norm, rank, IndexSet};
use lassopath_core::oracle::{kkt_check, tibshirani_beta, verify_path, VerifyOptions};
use lassopath_core::problem::PathPoint;
use lassopath_core::{ProblemInstance, SolutionPath, Termination, Tolerances};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("runtime {elapsed:?} exceeds {limit:?}"))
}

fn verify(inst: &ProblemInstance, path: &SolutionPath, samples: usize, kkt_tol: f64, obj_tol: f64) -> Result<(), String> {
    let opts = VerifyOptions { kkt_tol, obj_tol, ..Default::default() };
    let report = verify_path(inst, path, samples, &opts).map_err(|e| e.to_string())?;
    ensure(report.samples.len() >= samples, || format!("only {} samples", report.samples.len()))?;
    ensure(report.pass, || {
        let worst = report.samples.iter().find(|s| s.t == report.worst_t).unwrap();
        format!("verification failed at t = {}: {worst:?}", report.worst_t)
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let inst = fixtures::loris();
    let path = run_generalized(&inst, &HomotopyConfig::default()).map_err(|e| e.to_string())?;
    let ts = path.kink_ts();
    ensure(ts[0] == 192.0, || format!("t0 = {}", ts[0]))?;
    ensure(ts.len() > 1 && (ts[1] - 63.0).abs() <= 1e-9, || format!("t1 = {:?}", ts.get(1)))?;
    ensure(path.termination() == Termination::ReachedZero && *ts.last().unwrap() == 0.0, || {
        format!("terminated with {}", path.termination())
    })?;
    verify(&inst, &path, 200, 1e-8, 1e-6)?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("kinks {ts:?}, {:?}", start.elapsed()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let inst = fixtures::loris();
    let cfg = HomotopyConfig::default();
    let std = run_standard(&inst, &cfg).map_err(|e| e.to_string())?;
    let Termination::SignInconsistency { index, t } = std.termination() else {
        return Err(format!("standard terminated with {}", std.termination()));
    };
    ensure((t - 192.0).abs() <= 1e-9, || format!("inconsistency at t = {t}"))?;
    let looping = run_looping(&inst, &cfg).map_err(|e| e.to_string())?;
    ensure(looping.termination() == Termination::ReachedZero, || {
        format!("looping ended with {}", looping.termination())
    })?;
    verify(&inst, &looping, 100, 1e-8, 1e-6)?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("standard: index {index} at t = {t}; looping verified; {:?}", start.elapsed()))
}

fn criterion_3() -> Outcome {
    let inst = fixtures::tibshirani();
    let tol = Tolerances::default();
    let u = DVector::from_column_slice(&[0.0, 0.0, -1.0, 0.0]);
    let r = kkt_check(&inst, 2.0, &u, &tol).map_err(|e| e.to_string())?;
    ensure(r <= 1e-12, || format!("kkt residual of (0,0,-1,0) is {r:e}"))?;
    let beta = tibshirani_beta(&inst, 2.0, &u, &tol).map_err(|e| e.to_string())?;
    let expected = [-0.25, -0.25, -0.75, -0.25];
    let err = beta.iter().zip(expected).map(|(b, e)| (b - e).abs()).fold(0.0, f64::max);
    ensure(err <= 1e-10, || format!("beta = {:?}", beta.as_slice()))?;
    let rb = kkt_check(&inst, 2.0, &beta, &tol).map_err(|e| e.to_string())?;
    ensure(rb >= 0.5, || format!("beta kkt residual {rb}"))?;
    // The violation sits on the second component: active and negative with p = +1.
    let p = inst.a().tr_mul(&inst.residual(&beta)) / 2.0;
    ensure(beta[1] < 0.0 && (p[1] - 1.0).abs() < 1e-12, || format!("p = {:?}", p.as_slice()))?;
    Ok(format!("residuals {r:e} and {rb}"))
}

fn criterion_4() -> Outcome {
    let inst = fixtures::infinite_kinks();
    let tol = Tolerances::default();
    let path = run_generalized(&inst, &HomotopyConfig::default()).map_err(|e| e.to_string())?;
    let ts = path.kink_ts();
    ensure(ts.len() == 3, || format!("kinks {ts:?}"))?;
    ensure(ts.iter().zip([2.0, 1.0, 0.0]).all(|(a, b)| (a - b).abs() <= 1e-10), || format!("kinks {ts:?}"))?;
    let u0 = &path.kinks()[2].u;
    let two = 2.0 / 3.0;
    ensure(u0.iter().zip([two, two, two, 1.0]).all(|(a, b)| (a - b).abs() <= 1e-10), || {
        format!("u(0) = {:?}", u0.as_slice())
    })?;

    let demo = adversarial_demo(8).map_err(|e| e.to_string())?;
    let dts = demo.kink_ts();
    ensure(dts.len() == 8 && dts[0] == 2.0, || format!("adversarial kinks {dts:?}"))?;
    for k in 0..=6 {
        ensure((dts[k + 1] - 0.5f64.powi(k as i32)).abs() <= 1e-10, || format!("adversarial kinks {dts:?}"))?;
    }
    for w in demo.kinks().windows(2) {
        let d = (&w[1].u - &w[0].u) / (w[0].t - w[1].t);
        let report = direction_set_membership(&inst, w[0].t, &w[0].u, &d, &tol).map_err(|e| e.to_string())?;
        ensure(report.pass, || format!("segment from t = {} fails membership: {report:?}", w[0].t))?;
    }
    Ok(format!("kinks {ts:?}; adversarial {dts:?}"))
}

/// The seeded instances of the property suite.
fn suite() -> Vec<(GenKind, ProblemInstance)> {
    let mut out = Vec::new();
    for i in 0..50u64 {
        let (m, n) = (3 + (i as usize) % 6, 4 + (i as usize * 7) % 9);
        out.push((GenKind::Gaussian, generate(GenKind::Gaussian, m, n, 1000 + i).unwrap()));
    }
    for i in 0..50u64 {
        let (m, n) = if i % 10 == 9 { (20, 50) } else { (3 + (i as usize) % 6, 4 + (i as usize * 5) % 9) };
        out.push((GenKind::Bernoulli, generate(GenKind::Bernoulli, m, n, 2000 + i).unwrap()));
    }
    out
}

type SuitePaths = Vec<(GenKind, ProblemInstance, SolutionPath)>;

fn criterion_5(suite: &SuitePaths) -> Outcome {
    let start = Instant::now();
    for (k, (kind, inst, path)) in suite.iter().enumerate() {
        ensure(path.termination() == Termination::ReachedZero, || {
            format!("instance {k} ({kind}) ended with {}", path.termination())
        })?;
        verify(inst, path, 100, 1e-7, 1e-6).map_err(|e| format!("instance {k} ({kind}, {}x{}): {e}", inst.m(), inst.n()))?;
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{} instances verified in {:?}", suite.len(), start.elapsed()))
}

fn full_rank_along(path: &SolutionPath) -> bool {
    path.kinks().iter().filter(|k| k.t > 0.0).all(|k| {
        let a_e = columns(path.instance().a(), &k.equicorrelation).unwrap();
        rank(&a_e, 1e-10) == k.equicorrelation.len()
    })
}

fn criterion_6(suite: &SuitePaths) -> Outcome {
    let mut compared = 0;
    for (k, (kind, inst, path)) in suite.iter().enumerate() {
        if *kind != GenKind::Gaussian || !one_at_a_time_report(path).holds || !full_rank_along(path) {
            continue;
        }
        compared += 1;
        let std = run_standard(inst, &HomotopyConfig::default()).map_err(|e| e.to_string())?;
        let (a, b) = (path.kinks(), std.kinks());
        ensure(a.len() == b.len(), || {
            format!("instance {k}: {} vs {} kinks ({})", a.len(), b.len(), std.termination())
        })?;
        for (x, y) in a.iter().zip(b) {
            let du = (&x.u - &y.u).amax();
            ensure((x.t - y.t).abs() <= 1e-8 && du <= 1e-8, || {
                format!("instance {k}: kink t = {} vs {}, |du| = {du:e}", x.t, y.t)
            })?;
        }
    }
    ensure(compared > 0, || "no qualifying instance".into())?;
    Ok(format!("{compared} qualifying Gaussian instances coincide"))
}

/// `d_S = (A_S^T A_S)^+ p_S` for `S = A ∪ supp(d)`, `S ⊆ E(t^j) ∩ E(t^{j+1})`,
/// and maximality of the step.
fn structure_at(inst: &ProblemInstance, cur: &PathPoint, next: &PathPoint, tol: &Tolerances) -> Result<(), String> {
    let prob = DirectionProblem::at_point(inst, cur).map_err(|e| e.to_string())?;
    let d = minimal_direction(&prob, tol).map_err(|e| e.to_string())?.d;
    let scale = 1.0 + d.amax();
    let support: IndexSet = (0..inst.n()).filter(|&i| d[i].abs() > 1e-12 * scale).collect();
    let s = cur.active.union(&support);
    let a_s = columns(inst.a(), &s).unwrap();
    let p = cur.p.as_ref().unwrap();
    let p_s = DVector::from_iterator(s.len(), s.iter().map(|i| p[i]));
    let d_s = least_squares_min_norm(&(a_s.transpose() * &a_s), &p_s, 1e-12).map_err(|e| e.to_string())?;
    let mut err = 0.0f64;
    for (k, i) in s.iter().enumerate() {
        err = err.max((d_s[k] - d[i]).abs());
    }
    ensure(err <= 1e-8 * scale, || format!("identity off by {err:e} at t = {}", cur.t))?;
    ensure(s.is_subset(&cur.equicorrelation.intersection(&next.equicorrelation)), || {
        format!("S = {s} not inside both equicorrelation sets at t = {}", cur.t)
    })?;
    // The extended segment stays optimal just above the next kink and
    // breaks just below it.
    if next.t > 0.0 {
        let eps = 1e-6 * cur.t;
        let along = |t: f64| &cur.u + &d * (cur.t - t);
        let inside = kkt_check(inst, next.t + eps, &along(next.t + eps), tol).map_err(|e| e.to_string())?;
        let outside = kkt_check(inst, next.t - eps, &along(next.t - eps), tol).map_err(|e| e.to_string())?;
        ensure(inside <= tol.kkt_tol, || format!("residual {inside:e} just above the kink at t = {}", next.t))?;
        ensure(outside > tol.kkt_tol, || format!("residual {outside:e} just below the kink at t = {}", next.t))?;
    }
    Ok(())
}

fn criterion_7(suite: &SuitePaths) -> Outcome {
    let tol = Tolerances::default();
    let mut extra = Vec::new();
    for inst in [fixtures::loris(), fixtures::tibshirani(), fixtures::infinite_kinks()] {
        let path = run_generalized(&inst, &HomotopyConfig::default()).map_err(|e| e.to_string())?;
        extra.push((inst, path));
    }
    let all = suite.iter().map(|(_, i, p)| (i, p)).chain(extra.iter().map(|(i, p)| (i, p)));
    let mut segments = 0;
    for (k, (inst, path)) in all.enumerate() {
        for w in path.kinks().windows(2) {
            ensure(w[1].t < w[0].t, || format!("path {k}: t not decreasing at {}", w[0].t))?;
            structure_at(inst, &w[0], &w[1], &tol).map_err(|e| format!("path {k} ({}x{}): {e}", inst.m(), inst.n()))?;
            segments += 1;
        }
    }
    Ok(format!("{segments} segments checked"))
}

/// A random small direction problem, sometimes with a repeated column.
fn random_direction_problem(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DVector<f64>, IndexSet, Vec<(usize, f64)>) {
    let m = rng.random_range(1..=6);
    let n = rng.random_range(1..=6);
    let mut a = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    if n >= 2 && rng.random_bool(0.3) {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        let scale = if rng.random_bool(0.5) { 1.0 } else { -2.0 };
        let col = a.column(i) * scale;
        a.set_column(j, &col);
    }
    let target = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut free = Vec::new();
    let mut signs = Vec::new();
    for i in 0..n {
        match rng.random_range(0..4) {
            0 => free.push(i),
            1 | 2 => signs.push((i, if rng.random_bool(0.5) { 1.0 } else { -1.0 })),
            _ => {}
        }
    }
    (a, target, IndexSet::from_unsorted(free), signs)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tol = Tolerances::default();
    for case in 0..100 {
        let (a, target, free, signs) = random_direction_problem(&mut rng);
        let prob = DirectionProblem::new(&a, target.clone(), free.clone(), signs.clone()).map_err(|e| e.to_string())?;
        let any = solve_direction(&prob, &tol).map_err(|e| format!("case {case}: {e}"))?;
        let mn = min_norm_direction(&prob, &any.d, &tol).map_err(|e| format!("case {case}: {e}"))?;

        // Every support free ∪ T with its minimal-norm least squares solution.
        let k = signs.len();
        let mut candidates = Vec::new();
        for mask in 0u32..(1 << k) {
            let chosen: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| signs[b].0).collect();
            let s = free.union(&IndexSet::from_unsorted(chosen));
            let a_s = columns(&a, &s).unwrap();
            let x = least_squares_min_norm(&a_s, &target, 1e-12).map_err(|e| e.to_string())?;
            let mut d = DVector::zeros(a.ncols());
            for (j, i) in s.iter().enumerate() {
                d[i] = x[j];
            }
            let feasible = signs.iter().all(|&(i, sg)| d[i] * sg >= -1e-10 * (1.0 + d.amax()));
            if feasible {
                candidates.push((prob.objective(&d), d.norm()));
            }
        }
        let best = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let min_norm = candidates.iter().filter(|c| c.0 <= best + 1e-9).map(|c| c.1).fold(f64::INFINITY, f64::min);
        let obj = prob.objective(&any.d);
        ensure((obj - best).abs() <= 1e-8, || format!("case {case}: objective {obj} vs enumeration {best}"))?;
        ensure((prob.objective(&mn.d) - best).abs() <= 1e-8, || format!("case {case}: min-norm objective off"))?;
        ensure(mn.d.norm() <= min_norm + 1e-8, || format!("case {case}: norm {} vs enumeration {min_norm}", mn.d.norm()))?;
    }
    Ok("100 random problems match exhaustive enumeration".into())
}

fn main() -> ExitCode {
    // Flags passed by `cargo test` (filters, --nocapture) are ignored.
    let start = Instant::now();
    let suite: SuitePaths = suite()
        .into_iter()
        .map(|(kind, inst)| {
            let path = run_generalized(&inst, &HomotopyConfig::default())
                .unwrap_or_else(|e| panic!("generalized path failed on a {kind} {}x{} instance: {e}", inst.m(), inst.n()));
            (kind, inst, path)
        })
        .collect();
    let build = start.elapsed();

    let results: Vec<(&str, Outcome)> = vec![
        ("1 Loris generalized path", criterion_1()),
        ("2 Loris standard failure and looping recovery", criterion_2()),
        ("3 Tibshirani optimality and beta formula", criterion_3()),
        ("4 Infinite-kinks instance and adversarial replay", criterion_4()),
        ("5 Oracle equivalence on random instances", criterion_5(&suite)),
        ("6 Standard and generalized coincide", criterion_6(&suite)),
        ("7 Structural invariants", criterion_7(&suite)),
        ("8 Direction brute-force equivalence", criterion_8()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("random suite paths built in {build:?}");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
