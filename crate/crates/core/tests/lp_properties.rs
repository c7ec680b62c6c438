//! Randomized soundness checks for the LP engine on planted instances.

mod common;

use common::{check_sound, planted_feasible, planted_infeasible, random_matrix, scale_row};
use proptest::prelude::*;
use qrealism::lp::{check_certificate, minimize_linf_residual, solve_feasibility, BoxLp, FeasibilityResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_sound(lp: &BoxLp, r: &FeasibilityResult) {
    if let Err(e) = check_sound(lp, r) {
        panic!("{e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn planted_feasible_is_solved(seed in any::<u64>(), m in 1usize..=60, n in 1usize..=60, row in any::<prop::sample::Index>()) {
        let lp = planted_feasible(seed, m, n);
        let r = solve_feasibility(&lp);
        prop_assert!(r.is_feasible(), "{:?}", r);
        assert_sound(&lp, &r);

        let scaled = scale_row(&lp, row.index(m), 10.0);
        let rs = solve_feasibility(&scaled);
        prop_assert!(rs.is_feasible());
        assert_sound(&scaled, &rs);
    }

    #[test]
    fn planted_infeasible_is_certified(seed in any::<u64>(), m in 1usize..=60, n in 1usize..=60, row in any::<prop::sample::Index>()) {
        let (lp, planted) = planted_infeasible(seed, m, n, 0.1);
        // the planted vector itself certifies the instance
        prop_assert!(check_certificate(&lp, &planted) > 0.09);
        let r = solve_feasibility(&lp);
        prop_assert!(r.is_infeasible(), "{:?}", r);
        assert_sound(&lp, &r);

        let scaled = scale_row(&lp, row.index(m), 10.0);
        let rs = solve_feasibility(&scaled);
        prop_assert!(rs.is_infeasible());
        assert_sound(&scaled, &rs);
    }

    #[test]
    fn solves_are_deterministic(seed in any::<u64>(), m in 1usize..=30, n in 1usize..=30, feasible in any::<bool>()) {
        let lp = if feasible { planted_feasible(seed, m, n) } else { planted_infeasible(seed, m, n, 0.05).0 };
        let a = solve_feasibility(&lp);
        let b = solve_feasibility(&lp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn linf_residual_matches_planted_solution(seed in any::<u64>(), m in 0usize..=30, n in 1usize..=30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, m, n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        let b: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect();
        let (sol, t) = minimize_linf_residual(&a, &b, &vec![0.0; n], &vec![1.0; n]).unwrap();
        prop_assert!(t <= 1e-8);
        prop_assert!(sol.iter().all(|v| (-1e-9..=1.0 + 1e-9).contains(v)));
    }
}

/// Any box point gives an upper bound on the optimal `t`, and the optimum
/// is attained by the returned point.
#[test]
fn linf_optimum_beats_random_box_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (m, n) = (rng.random_range(1..12), rng.random_range(1..6));
        let a = random_matrix(&mut rng, m, n);
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (x, t) = minimize_linf_residual(&a, &b, &vec![-1.0; n], &vec![1.0; n]).unwrap();
        assert!(x.iter().all(|v| v.abs() <= 1.0 + 1e-9));
        for _ in 0..200 {
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let tz = (0..m)
                .map(|i| ((0..n).map(|j| a[i * n + j] * z[j]).sum::<f64>() - b[i]).abs())
                .fold(0.0, f64::max);
            assert!(t <= tz + 1e-8);
        }
    }
}
