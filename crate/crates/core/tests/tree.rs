use bsrf_core::data::make_folds;
use bsrf_core::rng::derive_seed;
use bsrf_core::tree::{
    best_scored_tree_cv_with_report, candidate_seed, evaluate_candidates_cv, label_partition,
    majority_label, split_budget,
};
use bsrf_core::{
    best_scored_tree_cv, best_scored_tree_regularized, fit_candidate, grow_partition, Dataset64,
    Label, Mode, Partition64, Tree64, TreeScore,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use Label::{Negative as N, Positive as P};

fn random_data(dim: usize, n: usize, seed: u64) -> Dataset64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let labels = (0..n).map(|_| if rng.gen() { P } else { N }).collect();
    Dataset64::from_rows(rows, labels).unwrap()
}

/// Smallest empirical risk over all `2^(p+1)` leaf labelings.
fn enumerated_min_risk(part: &Partition64, data: &Dataset64) -> f64 {
    let leaves = part.leaf_count();
    let leaf_of: Vec<usize> = data.rows().map(|x| part.locate(x).unwrap()).collect();
    (0u32..1 << leaves)
        .map(|mask| {
            let wrong = leaf_of
                .iter()
                .zip(data.labels())
                .filter(|(&leaf, &y)| {
                    let predicted = if mask >> leaf & 1 == 1 { P } else { N };
                    predicted != y
                })
                .count();
            wrong as f64 / data.len() as f64
        })
        .fold(f64::INFINITY, f64::min)
}

fn one_dim() -> Dataset64 {
    Dataset64::from_rows(
        vec![vec![0.1], vec![0.2], vec![0.8], vec![0.9]],
        vec![N, N, P, P],
    )
    .unwrap()
}

#[test]
fn majority_examples() {
    assert_eq!(majority_label([P, P, N]), Some(P));
    assert_eq!(majority_label([P, N]), Some(P));
    assert_eq!(majority_label([N, N, N, P]), Some(N));
    assert_eq!(majority_label(std::iter::empty::<Label>()), None);
}

#[test]
fn split_budget_is_largest_admissible_p() {
    assert_eq!(split_budget(1.0).unwrap(), 1);
    assert_eq!(split_budget(0.01).unwrap(), 10);
    assert_eq!(split_budget(0.25).unwrap(), 2);
    assert_eq!(split_budget(1e-4).unwrap(), 100);
    assert!(split_budget(0.0).is_err());
}

#[test]
fn pure_class_data_keeps_the_root() {
    let data = Dataset64::from_rows(vec![vec![0.1], vec![0.5], vec![0.7]], vec![P; 3]).unwrap();
    let (tree, curve) = fit_candidate(&data, 1.0, Mode::Pure, 0.5, 3).unwrap();
    assert_eq!(curve.p_max(), 1);
    assert_eq!(tree.p(), 0);
    assert_eq!(tree.score().criterion(), 0.0);
}

#[test]
fn forced_half_cut_separates_the_line() {
    let data = one_dim();
    let part = Partition64::replay(1, Mode::Pure, 0, 0.0, [(0, 0, 0.5)]).unwrap();
    let (labels, errors) = label_partition(&part, &data).unwrap();
    assert_eq!(errors, 0);
    assert_eq!(labels, vec![N, P]);
    assert_eq!(enumerated_min_risk(&part, &data), 0.0);

    // cut_width 0 forces every cut to the middle of its leaf
    let (tree, curve) = fit_candidate(&data, 0.01, Mode::Pure, 0.0, 11).unwrap();
    assert_eq!(tree.partition().history()[0].cut, 0.5);
    assert_eq!(curve.risks[1], 0.0);
    assert_eq!(curve.argmin, 1);
    assert!((curve.objectives[1] - 0.01).abs() < 1e-15);
    assert_eq!(tree.p(), 1);
    assert_eq!(tree.predict(&[0.15]).unwrap(), N);
    assert_eq!(tree.predict(&[0.85]).unwrap(), P);
}

#[test]
fn root_tree_predicts_its_label() {
    let part = Partition64::unit(2, Mode::Pure, 0, 0.5).unwrap();
    let tree = Tree64::from_parts(
        part,
        vec![P],
        TreeScore::Regularized {
            lambda: 0.1,
            risk: 0.0,
            objective: 0.0,
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..50 {
        assert_eq!(tree.predict(&[rng.gen(), rng.gen()]).unwrap(), P);
    }
}

#[test]
fn zero_risk_tree_reproduces_training_labels() {
    let data = random_data(2, 40, 6);
    // enough splits to isolate every point
    let (tree, _) =
        best_scored_tree_cv_with_report(&data, 1, 400, 2, Mode::Adaptive, 0.5, 3).unwrap();
    assert_eq!(tree.score().risk(), 0.0);
    for (x, &y) in data.rows().zip(data.labels()) {
        assert_eq!(tree.predict(x).unwrap(), y);
    }
}

#[test]
fn single_candidate_equals_fit_candidate() {
    let data = random_data(2, 60, 2);
    let (direct, _) =
        fit_candidate(&data, 1e-3, Mode::Adaptive, 0.5, candidate_seed(9, 0)).unwrap();
    let best = best_scored_tree_regularized(&data, 1, 1e-3, Mode::Adaptive, 0.5, 9).unwrap();
    assert_eq!(direct, best);
}

#[test]
fn selection_is_the_minimum_candidate_objective() {
    let data = random_data(3, 80, 12);
    for seed in 0..10 {
        let best = best_scored_tree_regularized(&data, 6, 2e-3, Mode::Adaptive, 0.4, seed).unwrap();
        let objectives: Vec<f64> = (0..6)
            .map(|l| {
                fit_candidate(&data, 2e-3, Mode::Adaptive, 0.4, candidate_seed(seed, l))
                    .unwrap()
                    .0
                    .score()
                    .criterion()
            })
            .collect();
        let min = objectives.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(best.score().criterion(), min);
    }
}

#[test]
fn larger_pools_never_score_worse() {
    let data = random_data(2, 100, 21);
    for seed in 0..20 {
        let one = best_scored_tree_regularized(&data, 1, 1e-3, Mode::Pure, 0.5, seed).unwrap();
        let five = best_scored_tree_regularized(&data, 5, 1e-3, Mode::Pure, 0.5, seed).unwrap();
        assert!(five.score().criterion() <= one.score().criterion());
    }
}

#[test]
fn cv_uses_ten_validation_sets_of_ten() {
    let data = random_data(2, 100, 5);
    let (tree, eval) =
        best_scored_tree_cv_with_report(&data, 4, 15, 10, Mode::Adaptive, 0.5, 8).unwrap();
    assert_eq!(eval.validation_sizes, vec![10; 10]);
    assert_eq!(eval.fold_errors.len(), 4);
    assert!(eval.fold_errors.iter().all(|f| f.len() == 10));
    let min = eval
        .mean_errors
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    assert_eq!(eval.mean_errors[eval.selected], min);
    assert!(eval
        .mean_errors
        .iter()
        .all(|&e| eval.mean_errors[eval.selected] <= e));
    match tree.score() {
        TreeScore::CrossValidated { cv_error, .. } => assert_eq!(*cv_error, min),
        other => panic!("unexpected score {other:?}"),
    }
}

#[test]
fn cv_single_candidate_is_that_partition_labeled_on_all_rows() {
    let data = random_data(2, 50, 14);
    let tree = best_scored_tree_cv(&data, 1, 7, 5, Mode::Adaptive, 0.5, 31).unwrap();
    let part = grow_partition(
        2,
        7,
        Mode::Adaptive,
        0.5,
        candidate_seed(31, 0),
        Some(&data),
    )
    .unwrap();
    assert_eq!(tree.partition(), &part);
    let (labels, _) = label_partition(&part, &data).unwrap();
    assert_eq!(tree.leaf_labels(), &labels[..]);
}

#[test]
fn cv_errors_match_a_direct_recount() {
    let data = random_data(2, 45, 3);
    let parts: Vec<Partition64> = (0..3)
        .map(|s| grow_partition(2, 6, Mode::Adaptive, 0.5, s, Some(&data)).unwrap())
        .collect();
    let plan = make_folds(45, 5, derive_seed(1, 2)).unwrap();
    let eval = evaluate_candidates_cv(&data, &parts, &plan).unwrap();
    for (c, part) in parts.iter().enumerate() {
        for f in 0..5 {
            let (tr, va) = plan.fold(f);
            let fold_train = data.subset(&tr);
            let global = majority_label(fold_train.labels().iter().copied()).unwrap();
            let wrong = va
                .iter()
                .filter(|&&i| {
                    let leaf = part.locate(data.row(i)).unwrap();
                    let in_leaf = tr
                        .iter()
                        .filter(|&&j| part.locate(data.row(j)).unwrap() == leaf)
                        .map(|&j| data.label(j));
                    let predicted = majority_label(in_leaf).unwrap_or(global);
                    predicted != data.label(i)
                })
                .count();
            assert_eq!(eval.fold_errors[c][f], wrong as f64 / va.len() as f64);
        }
    }
}

#[test]
fn f32_trees_fit() {
    let data = bsrf_core::ParityCube32::generate(2, 200, 1)
        .unwrap()
        .dataset;
    let tree = bsrf_core::best_scored_tree_cv(&data, 3, 10, 5, Mode::Adaptive, 0.5, 2).unwrap();
    assert_eq!(tree.p(), 10);
    assert!(tree.score().risk() <= 0.5f32);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn majority_labels_minimize_risk(
        n in 1usize..=8,
        dim in 1usize..=2,
        p in 0usize..=3,
        mode in prop_oneof![Just(Mode::Pure), Just(Mode::Adaptive)],
        seed in any::<u64>(),
    ) {
        let data = random_data(dim, n, seed);
        let part = grow_partition(dim, p, mode, 0.5, seed ^ 1, Some(&data)).unwrap();
        let (_, errors) = label_partition(&part, &data).unwrap();
        prop_assert_eq!(errors as f64 / n as f64, enumerated_min_risk(&part, &data));
    }

    #[test]
    fn risk_curve_is_recomputable(
        n in 1usize..=8,
        dim in 1usize..=2,
        lambda in 0.1f64..=1.0,
        seed in any::<u64>(),
    ) {
        let data = random_data(dim, n, seed);
        let (tree, curve) = fit_candidate(&data, lambda, Mode::Adaptive, 0.5, seed).unwrap();
        prop_assert!(curve.p_max() <= 3);
        prop_assert_eq!(curve.p_max(), split_budget(lambda).unwrap());
        // the tree keeps a prefix; regrow to cover the whole curve
        let full = grow_partition(dim, curve.p_max(), Mode::Adaptive, 0.5, seed, Some(&data)).unwrap();
        prop_assert_eq!(&full.prefix(tree.p()), tree.partition());
        for q in 0..=curve.p_max() {
            let prefix = full.prefix(q);
            let oracle = enumerated_min_risk(&prefix, &data);
            prop_assert_eq!(curve.risks[q], oracle);
            let objective = lambda * (q * q) as f64 + oracle;
            prop_assert!((curve.objectives[q] - objective).abs() < 1e-12);
        }
        let min = curve.objectives.iter().copied().fold(f64::INFINITY, f64::min);
        let first = curve.objectives.iter().position(|&o| o == min).unwrap();
        prop_assert_eq!(curve.argmin, first);
        prop_assert_eq!(tree.p(), first);
        prop_assert!(tree.score().criterion() <= 1.0);
    }

    #[test]
    fn split_budget_bounds_every_tree(
        lambda in 1e-4f64..=1.0,
        seed in any::<u64>(),
    ) {
        let data = random_data(2, 30, seed);
        let tree = best_scored_tree_regularized(&data, 3, lambda, Mode::Adaptive, 0.5, seed).unwrap();
        prop_assert!(tree.p() as f64 <= lambda.powf(-0.5).floor());
        prop_assert!(tree.score().criterion() <= 1.0);
    }
}
