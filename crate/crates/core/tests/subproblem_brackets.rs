use arlda::verify::{brute_force_criticality, brute_force_model};
use arlda::{solve_criticality, solve_model, InexactSnapshot, Matrix, OuterFunction, OuterKind, SubproblemOptions};
use proptest::prelude::*;

fn outer(kind: usize, weight: f64, m: usize) -> OuterFunction<f64> {
    match OuterKind::ALL[kind] {
        OuterKind::WeightedL1 => OuterFunction::weighted_l1(weight, (0..m).map(|i| 1.0 + i as f64).collect()),
        k => OuterFunction::new(k, weight),
    }
}

fn instance() -> impl Strategy<Value = (usize, f64, Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (1usize..=3).prop_flat_map(|m| {
        (
            0usize..5,
            0.1f64..2.0,
            prop::collection::vec(-2.0f64..2.0, 2),
            prop::collection::vec(-1.0f64..1.0, m),
            prop::collection::vec(-2.0f64..2.0, 2 * m),
            0.3f64..5.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certified_brackets_contain_the_grid_optimum((kind, w, g, c, jd, sigma) in instance()) {
        let m = c.len();
        let h = outer(kind, w, m);
        let j = Matrix::from_row_major(m, 2, jd);
        let snap = InexactSnapshot::from_values(vec![0.0; 2], g.clone(), c.clone(), j.clone());
        let opts = SubproblemOptions::tight();

        let crit = solve_criticality(&snap, &h, &opts, None).unwrap();
        let bf = brute_force_criticality(&g, &c, &j, &h, 200).unwrap();
        prop_assert!(crit.phi_bar <= crit.phi_upper());
        prop_assert!(bf <= crit.certificate.dual_bound + 1e-6, "grid {bf} above dual {}", crit.certificate.dual_bound);
        prop_assert!(bf >= crit.certificate.primal_value - 1e-6, "grid {bf} below primal {}", crit.certificate.primal_value);
        prop_assert!(crit.direction.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12);

        let model = solve_model(&snap, &h, sigma, None, &opts, None).unwrap();
        let bf = brute_force_model(&g, &c, &j, &h, sigma, 200).unwrap();
        prop_assert!(bf <= model.certificate.dual_bound + 1e-6);
        prop_assert!(bf >= model.certificate.primal_value - 1e-6);
        // Δm ≥ 0 at the optimum, so Δℓ̄ ≥ σ/2 ‖s‖².
        prop_assert!(model.report.linearized_decrease + 1e-12 >= sigma / 2.0 * model.report.norm_v.powi(2));
    }

    #[test]
    fn zero_outer_gives_gradient_norm(g in prop::collection::vec(-5.0f64..5.0, 1..6), c0 in -1.0f64..1.0) {
        let n = g.len();
        let snap = InexactSnapshot::from_values(vec![0.0; n], g.clone(), vec![c0], Matrix::from_row_major(1, n, vec![1.0; n]));
        let sol = solve_criticality(&snap, &OuterFunction::zero(), &SubproblemOptions::default(), None).unwrap();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((sol.phi_bar - norm).abs() <= 1e-10 * (1.0 + norm));
    }
}
