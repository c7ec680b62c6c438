use num_complex::Complex64;
use proptest::prelude::*;

use qrealism::frames::{
    bloch_covariant_frame, frame_distribution, frame_distribution_of_density, husimi_frame, qubit_trine_frame, wigner_at,
    Frame,
};
use qrealism::model::{
    alternating_run, bohm_position_model, born_table, delta_model, model_residual, position_effects, random_bases,
    random_states, ClassicalModel,
};
use qrealism::quantum::{
    bloch_state, born_probability, coherent_state, min_eigenvalue, projector, HermitianOperator, Povm, PureState,
};
use qrealism::reconstruction::{husimi_number_moment, ontic_response, reconstruct_response, Reconstruction};

fn state(d: usize, seed: u64) -> PureState {
    random_states(1, d, seed).unwrap().remove(0)
}

fn mixture(p: f64, a: &PureState, b: &PureState) -> HermitianOperator {
    HermitianOperator::combination(a.dim(), [(p, &a.projector()), (1.0 - p, &b.projector())]).unwrap()
}

/// `Σ_k values_k w_k Â_k`.
fn resynthesize(frame: &Frame, values: &[f64]) -> HermitianOperator {
    let ops: Vec<HermitianOperator> = frame.points().iter().map(|p| p.operator.to_dense()).collect();
    HermitianOperator::combination(
        frame.dim(),
        frame.points().iter().zip(&ops).zip(values).map(|((p, op), v)| (v * p.weight, op)),
    )
    .unwrap()
}

prop_compose! {
    fn hermitian(d: usize)(coords in prop::collection::vec(-2.0f64..2.0, d * d)) -> HermitianOperator {
        HermitianOperator::from_real_embedding(d, &coords).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn born_probability_is_symmetric(d in 2usize..7, seed in any::<u64>()) {
        let s = random_states(2, d, seed).unwrap();
        let ab = born_probability(&s[0], &s[1]).unwrap();
        let ba = born_probability(&s[1], &s[0]).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
    }

    #[test]
    fn projectors_are_idempotent_with_unit_trace(d in 1usize..7, seed in any::<u64>()) {
        let p = projector(&state(d, seed));
        prop_assert!(p.squared().max_abs_diff(&p).unwrap() <= 1e-12);
        prop_assert!((p.trace() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn povm_probabilities_sum_to_one(d in 2usize..6, seed in any::<u64>()) {
        let (effects, _) = random_bases(1, d, seed).unwrap();
        let povm = Povm::new(effects).unwrap();
        let p = povm.probabilities(&state(d, seed ^ 0x55)).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn min_eigenvalue_shifts_with_identity(a in hermitian(4), t in -5.0f64..5.0) {
        let shifted = a.try_add(&HermitianOperator::identity(4).scaled(t)).unwrap();
        prop_assert!((min_eigenvalue(&shifted) - min_eigenvalue(&a) - t).abs() <= 1e-9);
    }

    #[test]
    fn trine_distribution_is_a_probability(theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..6.3) {
        let d = frame_distribution(&qubit_trine_frame(), &bloch_state(theta, phi).unwrap()).unwrap();
        prop_assert!(d.values.iter().all(|&v| v >= 0.0));
        prop_assert!((d.normalization() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ontic_response_lies_in_unit_interval(d in 2usize..5, seed in any::<u64>()) {
        let (effects, _) = random_bases(2, d, seed).unwrap();
        let net = random_states(12, d, seed.wrapping_add(1)).unwrap();
        for e in &effects {
            for v in ontic_response(e, &net).unwrap() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn coherent_wigner_is_nonnegative(re in -2.0f64..2.0, im in -2.0f64..2.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        // 60 levels keep the truncated tail far below the tolerance
        let psi = coherent_state(Complex64::new(re, im), 60).unwrap();
        prop_assert!(wigner_at(&psi, Complex64::new(x, y)) >= -1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn builtin_frames_are_positive(nt in 2usize..16, np in 2usize..16, trunc in 2usize..10) {
        prop_assert!(qubit_trine_frame().positivity().all_psd);
        prop_assert!(bloch_covariant_frame(nt, np).unwrap().positivity().all_psd);
        prop_assert!(husimi_frame(trunc, 3.0, 0.5).unwrap().positivity().all_psd);
    }

    #[test]
    fn bloch_vacuum_values_are_exact(nt in 2usize..30, np in 2usize..30) {
        let f = bloch_covariant_frame(nt, np).unwrap();
        let d = frame_distribution(&f, &bloch_state(0.0, 0.0).unwrap()).unwrap();
        for (s, v) in d.support.iter().zip(&d.values) {
            let theta = s.coords.unwrap()[0];
            let expected = (theta / 2.0).cos().powi(2) / (2.0 * std::f64::consts::PI);
            prop_assert!((v - expected).abs() <= 1e-15);
        }
    }

    #[test]
    fn frame_values_are_linear_in_the_density(p in 0.0f64..1.0, seed in any::<u64>()) {
        let frames = [qubit_trine_frame(), bloch_covariant_frame(8, 8).unwrap()];
        for f in &frames {
            let (a, b) = (state(2, seed), state(2, seed ^ 1));
            let mixed = frame_distribution_of_density(f, &mixture(p, &a, &b)).unwrap();
            let da = frame_distribution(f, &a).unwrap();
            let db = frame_distribution(f, &b).unwrap();
            for ((m, x), y) in mixed.values.iter().zip(&da.values).zip(&db.values) {
                prop_assert!((m - (p * x + (1.0 - p) * y)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn husimi_values_are_nonnegative(trunc in 2usize..12, seed in any::<u64>()) {
        let f = husimi_frame(trunc, 3.0, 0.25).unwrap();
        let d = frame_distribution(&f, &state(trunc, seed)).unwrap();
        prop_assert!(d.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn husimi_moment_is_linear_in_the_density(p in 0.0f64..1.0, seed in any::<u64>()) {
        let f = husimi_frame(8, 5.0, 0.25).unwrap();
        let (a, b) = (state(8, seed), state(8, seed ^ 3));
        let mixed = frame_distribution_of_density(&f, &mixture(p, &a, &b)).unwrap();
        let direct: f64 = f
            .points()
            .iter()
            .zip(&mixed.values)
            .map(|(pt, v)| {
                let [x, y] = pt.coords.unwrap();
                (x * x + y * y - 1.0) * v * pt.weight
            })
            .sum();
        let combined = p * husimi_number_moment(&a, &f).unwrap() + (1.0 - p) * husimi_number_moment(&b, &f).unwrap();
        prop_assert!((direct - combined).abs() <= 1e-10);
    }

    #[test]
    fn unbounded_responses_round_trip(e in hermitian(2), real in any::<bool>(), nt in 3usize..12, np in 3usize..12) {
        // the trine operators are real, so they only span real effects
        let e = if real {
            let re: Vec<Complex64> = e.entries().iter().map(|z| Complex64::new(z.re, 0.0)).collect();
            HermitianOperator::new(2, re).unwrap()
        } else {
            e
        };
        let real = e.get(0, 1).im == 0.0;
        for (f, spans) in [(qubit_trine_frame(), real), (bloch_covariant_frame(nt, np).unwrap(), true)] {
            match reconstruct_response(&f, &e, false).unwrap() {
                Reconstruction::Response(r) => {
                    prop_assert!(spans);
                    prop_assert!(resynthesize(&f, &r.values).max_abs_diff(&e).unwrap() <= 1e-8);
                }
                Reconstruction::Infeasible { margin, .. } => {
                    prop_assert!(!spans);
                    prop_assert!(margin > 1e-9);
                }
            }
        }
    }

    #[test]
    fn delta_model_is_exact(s in 1usize..31, bases in 1usize..6, d in 2usize..5, seed in any::<u64>()) {
        let bases = bases.min(20 / d);
        let states = random_states(s, d, seed).unwrap();
        let (effects, _) = random_bases(bases, d, seed.wrapping_mul(3)).unwrap();
        let m = delta_model(&states, &effects).unwrap();
        m.validate().unwrap();
        let r = model_residual(&m, &born_table(&states, &effects).unwrap()).unwrap();
        prop_assert!(r <= 1e-12);
    }

    #[test]
    fn bohm_model_is_deterministic_and_exact(s in 1usize..12, d in 2usize..6, seed in any::<u64>()) {
        let states = random_states(s, d, seed).unwrap();
        let m = bohm_position_model(&states).unwrap();
        m.validate().unwrap();
        prop_assert!(m.response.iter().flatten().all(|&v| v == 0.0 || v == 1.0));
        let r = model_residual(&m, &born_table(&states, &position_effects(d).unwrap()).unwrap()).unwrap();
        prop_assert!(r <= 1e-12);
    }

    #[test]
    fn alternating_half_steps_never_raise_the_residual(k in 1usize..5, seed in any::<u64>()) {
        let states = random_states(5, 2, seed).unwrap();
        let (effects, _) = random_bases(2, 2, seed ^ 9).unwrap();
        let table = born_table(&states, &effects).unwrap();
        let init = ClassicalModel {
            k,
            epistemic: vec![vec![1.0 / k as f64; k]; 5],
            response: (0..4).map(|j| (0..k).map(|o| ((j + o) % 3) as f64 / 2.0).collect()).collect(),
        };
        let run = alternating_run(&table, init, 20).unwrap();
        run.model.validate().unwrap();
        for w in run.trace.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }
}
