mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sarcasm_core::meta_learner::{predict, train, Objective, TrainOptions, DEFAULT_LAMBDA_GRID};

fn opts(lambda: f64) -> TrainOptions {
    TrainOptions {
        lambda,
        ..TrainOptions::default()
    }
}

#[test]
fn objective_is_convex_along_random_chords() {
    let (rows, labels) = common::random_design(11, 60, 4);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for lambda in [0.0, 0.1] {
        let objective = Objective::new(&rows, &labels, lambda);
        for _ in 0..100 {
            let a: Vec<f64> = (0..5).map(|_| rng.random_range(-10.0..10.0)).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.random_range(-10.0..10.0)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
            let j = |t: &[f64]| objective.value(&t[..4], t[4]);
            assert!(j(&mid) <= (j(&a) + j(&b)) / 2.0 + 1e-9);
        }
    }
}

#[test]
fn weight_norm_shrinks_along_lambda_grid() {
    for seed in 0..5 {
        let (rows, labels) = common::random_design(seed, 300, 5);
        let matrix = common::matrix_from(rows, labels);
        let norms: Vec<f64> = DEFAULT_LAMBDA_GRID
            .iter()
            .map(|&l| train(&matrix, opts(l)).unwrap().weights.iter().map(|w| w * w).sum::<f64>().sqrt())
            .collect();
        for pair in norms.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "seed {seed}: {norms:?}");
        }
    }
}

#[test]
fn trained_objective_matches_grid_search() {
    for seed in [1, 2] {
        let (rows, labels) = common::random_design(100 + seed, 8, 1);
        let matrix = common::matrix_from(rows.clone(), labels.clone());
        let model = train(&matrix, opts(0.1)).unwrap();
        let objective = Objective::new(&rows, &labels, 0.1);
        let trained = objective.value(&model.weights, model.intercept);
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let ys: Vec<f64> = labels.iter().map(|l| f64::from(l.as_u8())).collect();
        let best = common::grid_minimum(&xs, &ys, 0.1);
        assert!(best >= trained - 1e-4, "grid {best} < trained {trained}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn gradient_matches_central_differences(seed: u64, lambda in 0.0..2.0f64) {
        let (rows, labels) = common::random_design(seed, 30, 3);
        let objective = Objective::new(&rows, &labels, lambda);
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (gw, gb) = objective.gradient(&theta[..3], theta[3]);
        let analytic: Vec<f64> = gw.into_iter().chain([gb]).collect();
        let h = 1e-5;
        for (k, &g) in analytic.iter().enumerate() {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (objective.value(&up[..3], up[3]) - objective.value(&down[..3], down[3])) / (2.0 * h);
            prop_assert!((fd - g).abs() <= 1e-5 * g.abs().max(1e-3), "coord {k}: fd {fd} vs {g}");
        }
    }

    #[test]
    fn raising_a_positive_weight_feature_never_lowers_p(seed: u64, j in 0usize..3, bump in 0.0..1.0f64) {
        let (rows, labels) = common::random_design(seed, 80, 3);
        let matrix = common::matrix_from(rows.clone(), labels.clone());
        let model = train(&matrix, opts(0.01)).unwrap();
        prop_assume!(model.weights[j] > 0.0);
        let mut raised = rows.clone();
        for row in &mut raised {
            row[j] = (row[j] + bump).min(1.0);
        }
        let before = predict(&model, &matrix).unwrap();
        let after = predict(&model, &common::matrix_from(raised, labels)).unwrap();
        for (a, b) in after.iter().zip(&before) {
            prop_assert!(a >= b);
        }
    }

    #[test]
    fn training_reaches_tolerance(seed: u64, lambda in 0.001..10.0f64) {
        let (rows, labels) = common::random_design(seed, 50, 4);
        let matrix = common::matrix_from(rows.clone(), labels.clone());
        let model = train(&matrix, opts(lambda)).unwrap();
        let (gw, gb) = Objective::new(&rows, &labels, lambda).gradient(&model.weights, model.intercept);
        let norm = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        prop_assert!(norm <= 1e-8);
    }
}
