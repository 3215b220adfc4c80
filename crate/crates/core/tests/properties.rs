use lassopath_core::direction::{min_norm_direction, solve_direction, DirectionProblem};
use lassopath_core::gen::{generate, GenKind};
use lassopath_core::io::{format_matrix_market, parse_matrix};
use lassopath_core::linalg::{least_squares_min_norm, IndexSet};
use lassopath_core::oracle::kkt_check;
use lassopath_core::{run, HomotopyConfig, Termination, Tolerances};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Small matrices with entries drawn from a few levels so that ties and
/// repeated columns show up often.
fn small_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=5, 1usize..=6).prop_flat_map(|(m, n)| {
        prop::collection::vec(prop::sample::select(vec![-2.0, -1.0, 0.0, 0.5, 1.0, 3.0]), m * n)
            .prop_map(move |v| DMatrix::from_row_slice(m, n, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pinv_solves_normal_equations(a in small_matrix(), seed in any::<u64>()) {
        let b = DVector::from_fn(a.nrows(), |i, _| ((seed >> (i % 60)) & 7) as f64 - 3.5);
        let x = least_squares_min_norm(&a, &b, 1e-10).unwrap();
        let normal = a.tr_mul(&(&a * &x - &b));
        prop_assert!(normal.amax() <= 1e-9 * (1.0 + b.norm()) * (1.0 + a.amax()).powi(2));
    }

    #[test]
    fn min_norm_direction_is_optimal_and_shortest(
        a in small_matrix(),
        roles in prop::collection::vec(0u8..4, 6),
        seed in any::<u64>(),
    ) {
        let n = a.ncols();
        let target = DVector::from_fn(a.nrows(), |i, _| ((seed >> (3 * i)) & 7) as f64 - 3.0);
        let free: IndexSet = (0..n).filter(|&i| roles[i] == 0).collect();
        let signs: Vec<(usize, f64)> = (0..n)
            .filter_map(|i| match roles[i] {
                1 => Some((i, 1.0)),
                2 => Some((i, -1.0)),
                _ => None,
            })
            .collect();
        let prob = DirectionProblem::new(&a, target, free, signs).unwrap();
        let tol = Tolerances::default();
        let any = solve_direction(&prob, &tol).unwrap();
        let best = min_norm_direction(&prob, &any.d, &tol).unwrap();
        prop_assert!(best.kkt.pass);
        let scale = 1.0 + prob.objective(&any.d).abs();
        prop_assert!((prob.objective(&best.d) - prob.objective(&any.d)).abs() <= 1e-9 * scale);
        prop_assert!(best.d.norm() <= any.d.norm() + 1e-9);
    }

    #[test]
    fn generated_paths_are_optimal_at_kinks(m in 2usize..7, n in 2usize..10, seed in 0u64..10_000, bern in any::<bool>()) {
        let kind = if bern { GenKind::Bernoulli } else { GenKind::Gaussian };
        let inst = generate(kind, m, n, seed).unwrap();
        let path = run(&inst, &HomotopyConfig::default()).unwrap();
        prop_assert_eq!(path.termination(), Termination::ReachedZero);
        let ts = path.kink_ts();
        prop_assert!(ts.windows(2).all(|w| w[1] < w[0]));
        let tol = Tolerances::default();
        // Rounding u alone moves A^T (f - A u) / t by about eps ||A||^2 ||u|| / t,
        // which dominates on nearly singular instances as t -> 0.
        let a_norm = inst.a().as_inner().norm();
        for k in path.kinks() {
            let floor = if k.t > 0.0 {
                64.0 * f64::EPSILON * a_norm * (inst.f().norm() + a_norm * k.u.norm()) / k.t
            } else {
                0.0
            };
            let residual = kkt_check(&inst, k.t, &k.u, &tol).unwrap();
            prop_assert!(residual <= 1e-8 + floor, "t = {:e}: {:e} (floor {:e})", k.t, residual, floor);
        }
    }

    #[test]
    fn matrix_market_round_trips(a in small_matrix(), scale in -1e3f64..1e3) {
        let a = a * scale;
        let back = parse_matrix(&format_matrix_market(&a, &[])).unwrap();
        prop_assert_eq!(back.as_inner(), &a);
    }
}
