//! Majority-vote ensembles of best-scored trees.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{Dataset, Label, MinMax};
use crate::error::{Error, Result};
use crate::partition::Mode;
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::tree::{best_scored_tree_cv, best_scored_tree_regularized, Tree};

/// Criterion used to pick each tree among its candidates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Strategy {
    /// Minimize `lambda * p^2 + risk`; each candidate picks its own `p`.
    Regularized { lambda: f64 },
    /// Fixed `splits`; minimize the mean `folds`-fold validation error.
    CrossValidated { splits: usize, folds: usize },
}

/// Strategy without its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Regularized,
    CrossValidated,
}

impl Strategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Regularized { .. } => StrategyKind::Regularized,
            Strategy::CrossValidated { .. } => StrategyKind::CrossValidated,
        }
    }
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Regularized => "regularized",
            StrategyKind::CrossValidated => "cv",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regularized" => Ok(StrategyKind::Regularized),
            "cv" => Ok(StrategyKind::CrossValidated),
            other => Err(Error::param(
                "strategy",
                format!("unknown strategy '{other}'"),
            )),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Regularized { lambda } => write!(f, "regularized(lambda={lambda})"),
            Strategy::CrossValidated { splits, folds } => {
                write!(f, "cv(p={splits}, folds={folds})")
            }
        }
    }
}

/// Hyperparameters of a forest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestParams {
    /// Number of trees `m`.
    pub trees: usize,
    /// Candidates per tree `k`.
    pub candidates: usize,
    pub strategy: Strategy,
    pub mode: Mode,
    /// Half-width `a` of the cut-factor distribution `Unif[0.5 - a, 0.5 + a]`.
    pub cut_width: f64,
    pub seed: u64,
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::param("trees", "m must be at least 1"));
        }
        if self.candidates == 0 {
            return Err(Error::param("candidates", "k must be at least 1"));
        }
        if !(0.0..=0.5).contains(&self.cut_width) {
            return Err(Error::param(
                "cut_width",
                format!("{} is not in [0, 0.5]", self.cut_width),
            ));
        }
        match self.strategy {
            Strategy::Regularized { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::param("lambda", format!("{lambda} is not positive")))
            }
            Strategy::CrossValidated { folds, .. } if folds < 2 => {
                Err(Error::param("folds", format!("{folds} < 2")))
            }
            _ => Ok(()),
        }
    }

    /// Seed of tree `t`.
    pub fn tree_seed(&self, t: usize) -> u64 {
        derive_seed(self.seed, t as u64)
    }
}

/// Vote counts `v+` and `v-` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Votes {
    pub positive: usize,
    pub negative: usize,
}

impl Votes {
    /// `+1` iff `v+ - v- >= 0`.
    pub fn decision(&self) -> Label {
        if self.positive >= self.negative {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forest<T> {
    trees: Vec<Tree<T>>,
    params: ForestParams,
    train_size: usize,
    scaling: Option<Vec<MinMax>>,
}

impl<T: Scalar> Forest<T> {
    pub fn from_parts(
        trees: Vec<Tree<T>>,
        params: ForestParams,
        train_size: usize,
        scaling: Option<Vec<MinMax>>,
    ) -> Result<Self> {
        let dim = trees
            .first()
            .ok_or_else(|| Error::Corrupt("forest without trees".into()))?
            .dim();
        if let Some(t) = trees.iter().find(|t| t.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: t.dim(),
            });
        }
        if let Some(s) = scaling.as_ref().filter(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.len(),
            });
        }
        Ok(Forest {
            trees,
            params,
            train_size,
            scaling,
        })
    }

    pub fn trees(&self) -> &[Tree<T>] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    /// Rows in the training set.
    pub fn train_size(&self) -> usize {
        self.train_size
    }

    pub fn dim(&self) -> usize {
        self.trees[0].dim()
    }

    /// Feature scaling of the training data, when it came from a file.
    pub fn scaling(&self) -> Option<&[MinMax]> {
        self.scaling.as_deref()
    }

    pub fn votes(&self, x: &[T]) -> Result<Votes> {
        // validates once; every tree shares the dimension
        self.trees[0].partition().locate(x)?;
        Ok(self.votes_unchecked(x))
    }

    fn votes_unchecked(&self, x: &[T]) -> Votes {
        let positive = self
            .trees
            .iter()
            .filter(|t| t.predict_unchecked(x) == Label::Positive)
            .count();
        Votes {
            positive,
            negative: self.trees.len() - positive,
        }
    }

    pub fn predict(&self, x: &[T]) -> Result<Label> {
        self.votes(x).map(|v| v.decision())
    }

    /// Predictions for every row, in row order.
    pub fn predict_dataset(&self, data: &Dataset<T>) -> Result<Vec<Label>> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.dim(),
            });
        }
        Ok((0..data.len())
            .into_par_iter()
            .map(|i| self.votes_unchecked(data.row(i)).decision())
            .collect())
    }
}

/// Trains `m` best-scored trees on the full training set.
pub fn train_forest<T: Scalar>(train: &Dataset<T>, params: &ForestParams) -> Result<Forest<T>> {
    params.validate()?;
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let seed = params.tree_seed(t);
            match params.strategy {
                Strategy::Regularized { lambda } => best_scored_tree_regularized(
                    train,
                    params.candidates,
                    lambda,
                    params.mode,
                    params.cut_width,
                    seed,
                ),
                Strategy::CrossValidated { splits, folds } => best_scored_tree_cv(
                    train,
                    params.candidates,
                    splits,
                    folds,
                    params.mode,
                    params.cut_width,
                    seed,
                ),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Forest::from_parts(
        trees,
        *params,
        train.len(),
        train.scaling().map(<[MinMax]>::to_vec),
    )
}

pub fn predict_forest<T: Scalar>(forest: &Forest<T>, x: &[T]) -> Result<Label> {
    forest.predict(x)
}
