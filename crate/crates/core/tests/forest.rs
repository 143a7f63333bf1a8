use bsrf_core::codec::{decode_forest, encode_forest, encode_partition, encode_tree};
use bsrf_core::forest::Votes;
use bsrf_core::{
    load_model, save_model, train_forest, Dataset64, Forest32, Forest64, ForestParams, Label, Mode,
    ParityCube32, ParityCube64, Strategy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(trees: usize, strategy: Strategy) -> ForestParams {
    ForestParams {
        trees,
        candidates: 3,
        strategy,
        mode: Mode::Adaptive,
        cut_width: 0.5,
        seed: 77,
    }
}

fn cv(splits: usize) -> Strategy {
    Strategy::CrossValidated { splits, folds: 5 }
}

fn probes(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen()).collect())
        .collect()
}

fn separable(n: usize) -> Dataset64 {
    bsrf_core::eval::separable_sample(n, 3, 4).unwrap()
}

#[test]
fn vote_examples() {
    let d = |positive, negative| Votes { positive, negative }.decision();
    assert_eq!(d(2, 1), Label::Positive);
    assert_eq!(d(3, 3), Label::Positive);
    assert_eq!(d(0, 4), Label::Negative);
}

#[test]
fn single_tree_forest_is_its_tree() {
    let data = separable(300);
    let forest = train_forest(&data, &params(1, cv(25))).unwrap();
    let tree = &forest.trees()[0];
    for x in probes(3, 10_000, 1) {
        assert_eq!(forest.predict(&x).unwrap(), tree.predict(&x).unwrap());
    }
}

#[test]
fn pure_class_forest_is_constant() {
    let data = Dataset64::from_rows(
        (0..20).map(|i| vec![i as f64 / 20.0, 0.5]).collect(),
        vec![Label::Positive; 20],
    )
    .unwrap();
    let forest = train_forest(&data, &params(3, Strategy::Regularized { lambda: 0.01 })).unwrap();
    for x in probes(2, 500, 2) {
        assert_eq!(forest.predict(&x).unwrap(), Label::Positive);
    }
}

#[test]
fn votes_add_up_to_the_tree_count() {
    let data = separable(200);
    for m in [1, 2, 4, 7] {
        let forest = train_forest(&data, &params(m, cv(10))).unwrap();
        for x in probes(3, 200, m as u64) {
            let v = forest.votes(&x).unwrap();
            assert_eq!(v.positive + v.negative, m);
        }
    }
}

#[test]
fn tree_order_does_not_matter() {
    let data = separable(200);
    let forest = train_forest(&data, &params(6, cv(12))).unwrap();
    let mut trees = forest.trees().to_vec();
    trees.reverse();
    trees.swap(0, 3);
    let shuffled =
        Forest64::from_parts(trees, *forest.params(), forest.train_size(), None).unwrap();
    for x in probes(3, 1000, 3) {
        assert_eq!(forest.predict(&x).unwrap(), shuffled.predict(&x).unwrap());
    }
}

#[test]
fn training_is_deterministic_and_thread_independent() {
    let data = separable(250);
    let p = params(5, Strategy::Regularized { lambda: 1e-3 });
    let a = train_forest(&data, &p).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| train_forest(&data, &p).unwrap());
    assert_eq!(encode_forest(&a), encode_forest(&single));
}

#[test]
fn model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = separable(300);
    for strategy in [cv(20), Strategy::Regularized { lambda: 2e-3 }] {
        let forest = train_forest(&data, &params(5, strategy)).unwrap();
        let path = dir.path().join("model.bsrf");
        save_model(&forest, &path).unwrap();
        let loaded: Forest64 = load_model(&path).unwrap();
        assert_eq!(loaded, forest);
        for x in probes(3, 1000, 5) {
            assert_eq!(loaded.predict(&x).unwrap(), forest.predict(&x).unwrap());
        }
    }
}

#[test]
fn encoding_is_byte_identical_across_runs() {
    let data = separable(300);
    let a = train_forest(&data, &params(4, cv(15))).unwrap();
    let b = train_forest(&data, &params(4, cv(15))).unwrap();
    assert_eq!(encode_forest(&a), encode_forest(&b));
    for (s, t) in a.trees().iter().zip(b.trees()) {
        assert_eq!(encode_tree(s), encode_tree(t));
        assert_eq!(
            encode_partition(s.partition()),
            encode_partition(t.partition())
        );
    }
    let decoded: Forest64 = decode_forest(&encode_forest(&a)).unwrap();
    assert_eq!(encode_forest(&decoded), encode_forest(&a));
}

#[test]
fn every_corrupted_byte_is_detected() {
    let data = separable(100);
    let forest = train_forest(&data, &params(2, cv(5))).unwrap();
    let bytes = encode_forest(&forest);
    for i in 0..bytes.len() {
        let mut bad = bytes.clone();
        bad[i] ^= 0x01;
        assert!(
            decode_forest::<f64>(&bad).is_err(),
            "flipping byte {i} went unnoticed"
        );
    }
    assert!(decode_forest::<f64>(&bytes[..bytes.len() - 1]).is_err());
    assert!(decode_forest::<f64>(&[]).is_err());
}

#[test]
fn corrupted_file_fails_to_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bsrf");
    let forest = train_forest(&separable(100), &params(2, cv(5))).unwrap();
    save_model(&forest, &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] = bytes[mid].wrapping_add(1);
    std::fs::write(&path, &bytes).unwrap();
    assert!(load_model::<f64>(&path).is_err());
    assert!(load_model::<f64>(dir.path().join("missing.bsrf")).is_err());
}

#[test]
fn precision_is_checked_on_load() {
    let cube = ParityCube32::generate(2, 200, 3).unwrap();
    let forest: Forest32 = train_forest(&cube.dataset, &params(3, cv(8))).unwrap();
    let bytes = encode_forest(&forest);
    assert_eq!(decode_forest::<f32>(&bytes).unwrap(), forest);
    assert!(decode_forest::<f64>(&bytes).is_err());
}

#[test]
fn xor_parity_is_learned() {
    let train = ParityCube64::generate(2, 1000, 10).unwrap().dataset;
    let test = ParityCube64::generate(2, 1000, 11).unwrap().dataset;
    let p = ForestParams {
        trees: 11,
        candidates: 5,
        strategy: Strategy::CrossValidated {
            splits: 20,
            folds: 10,
        },
        ..params(11, cv(20))
    };
    let forest = train_forest(&train, &p).unwrap();
    let predictions = forest.predict_dataset(&test).unwrap();
    let err = bsrf_core::eval::empirical_risk(&predictions, test.labels()).unwrap();
    assert!(err <= 0.05, "test error {err}");
}

#[test]
fn dimension_mismatch_is_reported() {
    let forest = train_forest(&separable(50), &params(1, cv(3))).unwrap();
    let err = forest.predict(&[0.5, 0.5]).unwrap_err();
    assert!(err.to_string().contains('3'), "{err}");
    let other = Dataset64::from_rows(vec![vec![0.1, 0.2]], vec![Label::Positive]).unwrap();
    assert!(forest.predict_dataset(&other).is_err());
}
