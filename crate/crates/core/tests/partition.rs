use bsrf_core::partition::{split_cell, Grower};
use bsrf_core::{grow_partition, Cell64, Dataset64, Label, Mode, Partition64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mode_strategy() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Pure), Just(Mode::Adaptive)]
}

fn random_data(dim: usize, n: usize, seed: u64) -> Dataset64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let labels = (0..n)
        .map(|_| {
            if rng.gen() {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    Dataset64::from_rows(rows, labels).unwrap()
}

fn interiors_overlap(a: &Cell64, b: &Cell64) -> bool {
    (0..a.dim()).all(|j| a.lower()[j].max(b.lower()[j]) < a.upper()[j].min(b.upper()[j]))
}

fn brute_force_leaf(part: &Partition64, x: &[f64]) -> Vec<usize> {
    part.cells()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.contains(x))
        .map(|(i, _)| i)
        .collect()
}

#[test]
fn split_cell_examples() {
    let (lo, hi) = split_cell(&Cell64::unit(2), 0, 0.5).unwrap();
    assert_eq!((lo.lower(), lo.upper()), (&[0.0, 0.0][..], &[0.5, 1.0][..]));
    assert_eq!((hi.lower(), hi.upper()), (&[0.5, 0.0][..], &[1.0, 1.0][..]));

    let (lo, hi) = split_cell(&Cell64::unit(2), 1, 0.25).unwrap();
    assert_eq!(lo.upper(), &[1.0, 0.25]);
    assert_eq!(hi.lower(), &[0.0, 0.25]);

    let cell = Cell64::new(vec![0.2, 0.0], vec![0.6, 1.0]).unwrap();
    let (lo, hi) = split_cell(&cell, 0, 0.5).unwrap();
    assert!((lo.upper()[0] - 0.4).abs() < 1e-15);
    assert_eq!(lo.upper()[0], hi.lower()[0]);
}

#[test]
fn zero_splits_is_the_unit_cube() {
    let part = grow_partition::<f64>(3, 0, Mode::Pure, 0.5, 1, None).unwrap();
    assert_eq!(part.cells(), &[Cell64::unit(3)]);
    assert_eq!(part.locate(&[0.9, 0.1, 1.0]).unwrap(), 0);
}

#[test]
fn three_splits_tile_the_square() {
    let part = grow_partition::<f64>(2, 3, Mode::Pure, 0.5, 17, None).unwrap();
    assert_eq!(part.leaf_count(), 4);
    assert!((part.total_volume() - 1.0).abs() < 1e-12);
    for i in 0..4 {
        for j in i + 1..4 {
            assert!(!interiors_overlap(&part.cells()[i], &part.cells()[j]));
        }
    }
}

#[test]
fn cut_point_belongs_to_upper_leaf() {
    let mut part = Partition64::unit(2, Mode::Pure, 0, 0.5).unwrap();
    part.split(0, 0, 0.5).unwrap();
    assert_eq!(part.locate(&[0.5, 0.3]).unwrap(), 1);
    assert_eq!(part.locate(&[0.4999, 0.3]).unwrap(), 0);
    assert_eq!(part.locate(&[1.0, 1.0]).unwrap(), 1);
}

#[test]
fn adaptive_splits_only_occupied_leaves() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|_| vec![rng.gen_range(0.0..0.5), rng.gen::<f64>()])
        .collect();
    let labels = vec![Label::Positive; 40];
    let data = Dataset64::from_rows(rows, labels).unwrap();
    for seed in 0..50 {
        let part = grow_partition(2, 5, Mode::Adaptive, 0.5, seed, Some(&data)).unwrap();
        for (i, rec) in part.history().iter().enumerate() {
            let before = part.prefix(i);
            let cell = &before.cells()[rec.leaf];
            assert!(
                data.rows().any(|x| cell.contains(x)),
                "seed {seed}: split {i} chose an empty leaf"
            );
        }
    }
}

#[test]
fn grower_reports_the_split_leaf() {
    let data = random_data(3, 30, 8);
    let mut grower = Grower::new(3, Mode::Adaptive, 0.3, 5, Some(&data)).unwrap();
    for _ in 0..10 {
        let leaf = grower.step().unwrap();
        assert_eq!(grower.partition().history().last().unwrap().leaf, leaf);
        let occ = grower.occupancy().unwrap();
        for (row, x) in data.rows().enumerate() {
            assert_eq!(occ.leaf_of(row), grower.partition().locate(x).unwrap());
        }
    }
}

#[test]
fn same_seed_same_partition() {
    let data = random_data(2, 50, 1);
    let a = grow_partition(2, 30, Mode::Adaptive, 0.5, 99, Some(&data)).unwrap();
    let b = grow_partition(2, 30, Mode::Adaptive, 0.5, 99, Some(&data)).unwrap();
    assert_eq!(a, b);
    let c = grow_partition(2, 30, Mode::Adaptive, 0.5, 100, Some(&data)).unwrap();
    assert_ne!(a.history(), c.history());
}

#[test]
fn f32_partitions_tile_too() {
    let part = bsrf_core::grow_partition::<f32>(3, 50, Mode::Pure, 0.5, 2, None).unwrap();
    assert!((part.total_volume() - 1.0).abs() < 1e-5);
    assert_eq!(part.leaf_count(), 51);
}

#[test]
fn adaptive_without_data_is_rejected() {
    assert!(grow_partition::<f64>(2, 3, Mode::Adaptive, 0.5, 1, None).is_err());
    assert!(grow_partition::<f64>(0, 3, Mode::Pure, 0.5, 1, None).is_err());
    assert!(grow_partition::<f64>(2, 3, Mode::Pure, 0.7, 1, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn partitions_are_valid(
        dim in 1usize..=5,
        p in 0usize..=200,
        mode in mode_strategy(),
        cut_width in 0.0f64..=0.5,
        seed in any::<u64>(),
    ) {
        let data = random_data(dim, 25, seed ^ 0x55);
        let part = grow_partition(dim, p, mode, cut_width, seed, Some(&data)).unwrap();
        prop_assert_eq!(part.leaf_count(), p + 1);
        prop_assert!((part.total_volume() - 1.0).abs() < 1e-9);

        let replayed = Partition64::replay(
            dim, mode, seed, cut_width,
            part.history().iter().map(|r| (r.leaf, r.dimension, r.fraction)),
        ).unwrap();
        prop_assert_eq!(replayed.cells(), part.cells());

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
            let hits = brute_force_leaf(&part, &x);
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!(part.locate(&x).unwrap(), hits[0]);
        }
    }

    #[test]
    fn cells_are_disjoint(
        dim in 1usize..=3,
        p in 0usize..=40,
        seed in any::<u64>(),
    ) {
        let part = grow_partition::<f64>(dim, p, Mode::Pure, 0.5, seed, None).unwrap();
        let cells = part.cells();
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                prop_assert!(!interiors_overlap(&cells[i], &cells[j]));
            }
        }
    }
}
