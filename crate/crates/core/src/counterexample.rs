//! Parity on the hypercube: a Bayes-risk-zero distribution on which forests
//! that may only split predefined axes stay at 50% error.
//!
//! Vertices `a in {-1, +1}^d` are mapped to `{0, 1}^d` by `a -> (a + 1) / 2`
//! and labeled `+1` exactly when the number of `+1` coordinates is even.

use rand::Rng;

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::eval::accuracy;
use crate::forest::{train_forest, ForestParams, Strategy};
use crate::partition::Mode;
use crate::rng::{derive_seed, stream, stream_rng};
use crate::scalar::Scalar;

/// Parity label of a vertex given as booleans (`true` = coordinate `+1`).
pub fn parity_label(vertex: &[bool]) -> Label {
    if vertex.iter().filter(|&&b| b).count() % 2 == 0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// `n` vertices drawn uniformly with replacement, with parity labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ParityCube<T> {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub dataset: Dataset<T>,
}

impl<T: Scalar> ParityCube<T> {
    pub fn generate(d: usize, n: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        if n == 0 {
            return Err(Error::param("n", "need at least one sample"));
        }
        let mut rng = stream_rng(seed);
        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        let mut vertex = vec![false; d];
        for _ in 0..n {
            for v in vertex.iter_mut() {
                *v = rng.gen::<bool>();
            }
            features.extend(vertex.iter().map(|&b| if b { T::one() } else { T::zero() }));
            labels.push(parity_label(&vertex));
        }
        Ok(ParityCube {
            d,
            n,
            seed,
            dataset: Dataset::from_flat(features, labels, d)?,
        })
    }
}

pub fn gen_parity_cube<T: Scalar>(d: usize, n: usize, seed: u64) -> Result<ParityCube<T>> {
    ParityCube::generate(d, n, seed)
}

fn upper_side<T: Scalar>(x: &[T], dim: usize) -> bool {
    x[dim] >= T::from_f64_lossy(0.5)
}

/// Classifier that sees only coordinate `dim`: it predicts `+1` on a side
/// of the cut at 0.5 iff the training labels on that side sum to a
/// positive number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SingleAxisClassifier {
    pub dim: usize,
    pub lower_label: Label,
    pub upper_label: Label,
}

impl SingleAxisClassifier {
    pub fn fit<T: Scalar>(train: &Dataset<T>, dim: usize) -> Result<Self> {
        if dim >= train.dim() {
            return Err(Error::param(
                "dimension",
                format!("{dim} is out of range for d = {}", train.dim()),
            ));
        }
        let (mut lower, mut upper) = (0i64, 0i64);
        for (x, label) in train.rows().zip(train.labels()) {
            if upper_side(x, dim) {
                upper += label.sign();
            } else {
                lower += label.sign();
            }
        }
        // a zero sum falls to -1
        let side = |s: i64| {
            if s > 0 {
                Label::Positive
            } else {
                Label::Negative
            }
        };
        Ok(SingleAxisClassifier {
            dim,
            lower_label: side(lower),
            upper_label: side(upper),
        })
    }

    pub fn predict<T: Scalar>(&self, x: &[T]) -> Label {
        if upper_side(x, self.dim) {
            self.upper_label
        } else {
            self.lower_label
        }
    }
}

pub fn single_axis_classifier<T: Scalar>(
    train: &Dataset<T>,
    dim: usize,
) -> Result<SingleAxisClassifier> {
    SingleAxisClassifier::fit(train, dim)
}

/// Weighted vote of single-axis classifiers; axis `j` carries weight equal
/// to its multiplicity in the requested multiset. Ties go to `+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedForest {
    members: Vec<(SingleAxisClassifier, usize)>,
}

impl RestrictedForest {
    pub fn fit<T: Scalar>(train: &Dataset<T>, dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::param("dims", "need at least one dimension"));
        }
        let mut weights = vec![0usize; train.dim()];
        for &j in dims {
            if j >= train.dim() {
                return Err(Error::param(
                    "dims",
                    format!("{j} is out of range for d = {}", train.dim()),
                ));
            }
            weights[j] += 1;
        }
        let members = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(j, &w)| Ok((SingleAxisClassifier::fit(train, j)?, w)))
            .collect::<Result<_>>()?;
        Ok(RestrictedForest { members })
    }

    pub fn members(&self) -> &[(SingleAxisClassifier, usize)] {
        &self.members
    }

    pub fn predict<T: Scalar>(&self, x: &[T]) -> Label {
        let sum: i64 = self
            .members
            .iter()
            .map(|(c, w)| c.predict(x).sign() * *w as i64)
            .sum();
        Label::from_sum(sum)
    }

    pub fn error<T: Scalar>(&self, test: &Dataset<T>) -> f64 {
        let predictions: Vec<Label> = test.rows().map(|x| self.predict(x)).collect();
        1.0 - accuracy(&predictions, test.labels()).expect("nonempty test set")
    }
}

pub fn restricted_forest<T: Scalar>(
    train: &Dataset<T>,
    dims: &[usize],
) -> Result<RestrictedForest> {
    RestrictedForest::fit(train, dims)
}

/// Settings of the restricted-versus-full comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ContrastConfig {
    /// Axes the restricted forest may split, with multiplicity.
    pub restricted_dims: Vec<usize>,
    /// Forest allowed to split every axis; its seed is overridden per run.
    pub full: ForestParams,
    /// Size of the independent test draw.
    pub n_test: usize,
}

impl ContrastConfig {
    /// Restricted forest on axis 0 only; full forest with `m = 11`, `k = 5`,
    /// `p = 20`, adaptive partitions and 10-fold candidate selection.
    pub fn standard(n_test: usize) -> Self {
        ContrastConfig {
            restricted_dims: vec![0],
            full: ForestParams {
                trees: 11,
                candidates: 5,
                strategy: Strategy::CrossValidated {
                    splits: 20,
                    folds: 10,
                },
                mode: Mode::Adaptive,
                cut_width: 0.5,
                seed: 0,
            },
            n_test,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContrastOutcome {
    pub restricted_error: f64,
    pub full_error: f64,
}

/// Trains both forests on one parity draw of size `n` and scores them on an
/// independent draw.
pub fn consistency_contrast<T: Scalar>(
    d: usize,
    n: usize,
    seed: u64,
    config: &ContrastConfig,
) -> Result<ContrastOutcome> {
    if d < 2 {
        return Err(Error::param(
            "d",
            "the contrast needs d >= 2; one axis determines parity when d = 1",
        ));
    }
    let train = ParityCube::<T>::generate(d, n, seed)?.dataset;
    let test =
        ParityCube::<T>::generate(d, config.n_test, derive_seed(seed, stream::TEST))?.dataset;
    let restricted = RestrictedForest::fit(&train, &config.restricted_dims)?;
    let params = ForestParams {
        seed: derive_seed(seed, stream::FINAL),
        ..config.full
    };
    let forest = train_forest(&train, &params)?;
    let full_error = 1.0 - accuracy(&forest.predict_dataset(&test)?, test.labels())?;
    Ok(ContrastOutcome {
        restricted_error: restricted.error(&test),
        full_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_of_square_vertices() {
        assert_eq!(parity_label(&[true, true]), Label::Positive);
        assert_eq!(parity_label(&[true, false]), Label::Negative);
        assert_eq!(parity_label(&[false, false]), Label::Positive);
    }

    #[test]
    fn features_are_vertices() {
        let cube = ParityCube::<f64>::generate(3, 50, 2).unwrap();
        for (x, &y) in cube.dataset.rows().zip(cube.dataset.labels()) {
            assert!(x.iter().all(|&v| v == 0.0 || v == 1.0));
            let bits: Vec<bool> = x.iter().map(|&v| v == 1.0).collect();
            assert_eq!(parity_label(&bits), y);
        }
    }

    #[test]
    fn one_dimensional_parity_is_learnable() {
        let cube = ParityCube::<f64>::generate(1, 200, 4).unwrap();
        let forest = RestrictedForest::fit(&cube.dataset, &[0]).unwrap();
        assert_eq!(forest.error(&cube.dataset), 0.0);
    }

    #[test]
    fn all_positive_training_predicts_positive() {
        let ds = Dataset::<f64>::from_rows(
            vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]],
            vec![Label::Positive; 3],
        )
        .unwrap();
        for j in 0..2 {
            let c = SingleAxisClassifier::fit(&ds, j).unwrap();
            // the upper side of axis 0 holds one point, the lower two
            assert_eq!(c.predict(&[1.0, 1.0]), Label::Positive);
            assert_eq!(c.predict(&[0.0, 0.0]), Label::Positive);
        }
    }

    #[test]
    fn argument_errors() {
        let cube = ParityCube::<f64>::generate(2, 10, 1).unwrap();
        assert!(SingleAxisClassifier::fit(&cube.dataset, 2).is_err());
        assert!(RestrictedForest::fit(&cube.dataset, &[]).is_err());
        assert!(RestrictedForest::fit(&cube.dataset, &[0, 5]).is_err());
        assert!(ParityCube::<f64>::generate(0, 10, 1).is_err());
        assert!(consistency_contrast::<f64>(1, 10, 1, &ContrastConfig::standard(10)).is_err());
    }
}
