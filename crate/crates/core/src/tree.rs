//! Best-scored trees.
//!
//! A candidate tree is a random partition whose cells are labeled by the
//! majority of the training labels they contain. Among `k` independent
//! candidates the best-scored tree is the one minimizing a selection
//! criterion: either the regularized empirical risk `lambda * p^2 + risk`,
//! where each candidate also picks its own split count `p`, or the mean
//! validation error under k-fold cross-validation at a fixed `p`.

use rayon::prelude::*;

use crate::data::{make_folds, Dataset, FoldPlan, Label};
use crate::error::{Error, Result};
use crate::partition::{grow_partition, Grower, Mode, Occupancy, Partition};
use crate::rng::{derive_seed, stream};
use crate::scalar::Scalar;

/// Sign of the label sum; ties go to `+1`. `None` for an empty multiset.
pub fn majority_label<I>(labels: I) -> Option<Label>
where
    I: IntoIterator<Item = Label>,
{
    let mut seen = false;
    let sum: i64 = labels
        .into_iter()
        .inspect(|_| seen = true)
        .map(Label::sign)
        .sum();
    seen.then(|| Label::from_sum(sum))
}

/// Largest `p` with `lambda * p^2 <= 1`, i.e. `floor(lambda^(-1/2))`.
///
/// Any tree with more splits has a penalty above 1 and cannot beat the
/// unsplit tree, whose objective is at most 1.
pub fn split_budget(lambda: f64) -> Result<usize> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", format!("{lambda} is not positive")));
    }
    let mut p = (1.0 / lambda.sqrt()).floor() as usize;
    while p > 0 && lambda * (p as f64) * (p as f64) > 1.0 {
        p -= 1;
    }
    while lambda * ((p + 1) as f64) * ((p + 1) as f64) <= 1.0 {
        p += 1;
    }
    Ok(p)
}

/// Seed of candidate `index` under `base`; independent of the pool size,
/// so a pool of `k` candidates contains every smaller pool.
pub fn candidate_seed(base: u64, index: usize) -> u64 {
    derive_seed(base, index as u64)
}

/// How a tree was selected, with the value it was selected on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TreeScore<T> {
    Regularized {
        lambda: f64,
        /// Empirical 0-1 risk on the training set.
        risk: T,
        /// `lambda * p^2 + risk`.
        objective: T,
    },
    CrossValidated {
        /// Mean validation error over the folds.
        cv_error: T,
        risk: T,
    },
}

impl<T: Scalar> TreeScore<T> {
    pub fn risk(&self) -> T {
        match *self {
            TreeScore::Regularized { risk, .. } | TreeScore::CrossValidated { risk, .. } => risk,
        }
    }

    /// The value minimized during selection.
    pub fn criterion(&self) -> T {
        match *self {
            TreeScore::Regularized { objective, .. } => objective,
            TreeScore::CrossValidated { cv_error, .. } => cv_error,
        }
    }
}

/// A labeled partition: the decision rule of one tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree<T> {
    partition: Partition<T>,
    leaf_labels: Vec<Label>,
    score: TreeScore<T>,
}

impl<T: Scalar> Tree<T> {
    pub fn from_parts(
        partition: Partition<T>,
        leaf_labels: Vec<Label>,
        score: TreeScore<T>,
    ) -> Result<Self> {
        if leaf_labels.len() != partition.leaf_count() {
            return Err(Error::Corrupt(format!(
                "{} labels for {} leaves",
                leaf_labels.len(),
                partition.leaf_count()
            )));
        }
        Ok(Tree {
            partition,
            leaf_labels,
            score,
        })
    }

    pub fn partition(&self) -> &Partition<T> {
        &self.partition
    }

    pub fn leaf_labels(&self) -> &[Label] {
        &self.leaf_labels
    }

    pub fn score(&self) -> &TreeScore<T> {
        &self.score
    }

    /// Number of splits.
    pub fn p(&self) -> usize {
        self.partition.split_count()
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn predict(&self, x: &[T]) -> Result<Label> {
        Ok(self.leaf_labels[self.partition.locate(x)?])
    }

    pub(crate) fn predict_unchecked(&self, x: &[T]) -> Label {
        self.leaf_labels[self.partition.leaf_of(x)]
    }
}

/// Label of the leaf containing `x`.
pub fn predict_tree<T: Scalar>(tree: &Tree<T>, x: &[T]) -> Result<Label> {
    tree.predict(x)
}

/// Empirical risk and regularized objective for every prefix `0..=p_max`
/// of one candidate's split sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskCurve<T> {
    pub lambda: f64,
    pub risks: Vec<T>,
    pub objectives: Vec<T>,
    pub argmin: usize,
}

impl<T: Scalar> RiskCurve<T> {
    pub fn p_max(&self) -> usize {
        self.risks.len() - 1
    }
}

/// Majority labels of the current leaves, maintained across splits.
///
/// A leaf left without training rows by a split keeps the label its parent
/// had just before the split.
struct Labeling {
    labels: Vec<Label>,
    positives: Vec<usize>,
    negatives: Vec<usize>,
    errors: usize,
}

impl Labeling {
    fn new<T: Scalar>(data: &Dataset<T>) -> Self {
        let positives = data
            .labels()
            .iter()
            .filter(|&&l| l == Label::Positive)
            .count();
        let negatives = data.len() - positives;
        let label = Label::from_sum(positives as i64 - negatives as i64);
        let mut labeling = Labeling {
            labels: vec![label],
            positives: vec![positives],
            negatives: vec![negatives],
            errors: 0,
        };
        labeling.errors = labeling.leaf_errors(0);
        labeling
    }

    fn leaf_errors(&self, leaf: usize) -> usize {
        match self.labels[leaf] {
            Label::Positive => self.negatives[leaf],
            Label::Negative => self.positives[leaf],
        }
    }

    fn count<T: Scalar>(rows: &[usize], data: &Dataset<T>) -> (usize, usize) {
        let pos = rows
            .iter()
            .filter(|&&i| data.label(i) == Label::Positive)
            .count();
        (pos, rows.len() - pos)
    }

    fn apply_split<T: Scalar>(
        &mut self,
        leaf: usize,
        new_leaf: usize,
        occupancy: &Occupancy,
        data: &Dataset<T>,
    ) {
        debug_assert_eq!(new_leaf, self.labels.len());
        let inherited = self.labels[leaf];
        self.errors -= self.leaf_errors(leaf);
        self.labels.push(inherited);
        self.positives.push(0);
        self.negatives.push(0);
        for l in [leaf, new_leaf] {
            let (pos, neg) = Self::count(occupancy.members(l), data);
            self.positives[l] = pos;
            self.negatives[l] = neg;
            self.labels[l] = if pos + neg == 0 {
                inherited
            } else {
                Label::from_sum(pos as i64 - neg as i64)
            };
            self.errors += self.leaf_errors(l);
        }
    }
}

/// Majority labels for every leaf of `partition` (with empty leaves
/// inheriting from their parent at split time) and the number of
/// misclassified training rows.
pub fn label_partition<T: Scalar>(
    partition: &Partition<T>,
    data: &Dataset<T>,
) -> Result<(Vec<Label>, usize)> {
    if data.dim() != partition.dim() {
        return Err(Error::DimensionMismatch {
            expected: partition.dim(),
            found: data.dim(),
        });
    }
    let mut replay = Partition::unit(
        partition.dim(),
        partition.mode(),
        partition.seed(),
        partition.cut_width(),
    )?;
    let mut occupancy = Occupancy::new(data.len());
    let mut labeling = Labeling::new(data);
    for record in partition.history() {
        let record = *replay.split(record.leaf, record.dimension, record.fraction)?;
        let new_leaf = replay.leaf_count() - 1;
        occupancy.apply_split(&record, new_leaf, data);
        labeling.apply_split(record.leaf, new_leaf, &occupancy, data);
    }
    Ok((labeling.labels, labeling.errors))
}

fn risk_of<T: Scalar>(errors: usize, n: usize) -> T {
    T::from_count(errors) / T::from_count(n)
}

/// Grows one candidate to `floor(lambda^(-1/2))` splits, records the risk
/// after every split and keeps the prefix minimizing `lambda * p^2 + risk`
/// (smallest `p` on ties).
pub fn fit_candidate<T: Scalar>(
    train: &Dataset<T>,
    lambda: f64,
    mode: Mode,
    cut_width: f64,
    seed: u64,
) -> Result<(Tree<T>, RiskCurve<T>)> {
    let p_max = split_budget(lambda)?;
    let n = train.len();
    let mut grower = Grower::new(train.dim(), mode, cut_width, seed, Some(train))?;
    let mut labeling = Labeling::new(train);
    let mut risks = Vec::with_capacity(p_max + 1);
    risks.push(risk_of::<T>(labeling.errors, n));
    for _ in 0..p_max {
        let leaf = grower.step()?;
        let new_leaf = grower.partition().leaf_count() - 1;
        let occupancy = grower.occupancy().expect("grower tracks the training set");
        labeling.apply_split(leaf, new_leaf, occupancy, train);
        risks.push(risk_of(labeling.errors, n));
    }

    let objectives: Vec<T> = risks
        .iter()
        .enumerate()
        .map(|(p, &risk)| T::from_f64_lossy(lambda * (p * p) as f64) + risk)
        .collect();
    let argmin =
        objectives.iter().enumerate().fold(
            0,
            |best, (p, &obj)| if obj < objectives[best] { p } else { best },
        );

    let partition = grower.partition().prefix(argmin);
    let (leaf_labels, errors) = label_partition(&partition, train)?;
    let risk = risk_of::<T>(errors, n);
    debug_assert_eq!(risk, risks[argmin]);
    let tree = Tree {
        partition,
        leaf_labels,
        score: TreeScore::Regularized {
            lambda,
            risk,
            objective: objectives[argmin],
        },
    };
    let curve = RiskCurve {
        lambda,
        risks,
        objectives,
        argmin,
    };
    Ok((tree, curve))
}

fn check_candidates(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::param("candidates", "k must be at least 1"))
    } else {
        Ok(())
    }
}

/// Index of the first minimum.
fn first_min<T: PartialOrd + Copy>(values: impl IntoIterator<Item = T>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Fits `k` candidates and keeps the one with the smallest regularized
/// objective (lowest candidate index on ties).
pub fn best_scored_tree_regularized<T: Scalar>(
    train: &Dataset<T>,
    k: usize,
    lambda: f64,
    mode: Mode,
    cut_width: f64,
    seed: u64,
) -> Result<Tree<T>> {
    check_candidates(k)?;
    let candidates: Vec<Tree<T>> = (0..k)
        .into_par_iter()
        .map(|l| {
            fit_candidate(train, lambda, mode, cut_width, candidate_seed(seed, l)).map(|r| r.0)
        })
        .collect::<Result<_>>()?;
    let best = first_min(candidates.iter().map(|t| t.score.criterion())).expect("k >= 1");
    Ok(candidates.into_iter().nth(best).expect("index in range"))
}

/// Cross-validated errors of a pool of candidate partitions.
#[derive(Clone, Debug, PartialEq)]
pub struct CvEvaluation<T> {
    /// `fold_errors[candidate][fold]`.
    pub fold_errors: Vec<Vec<T>>,
    pub validation_sizes: Vec<usize>,
    pub mean_errors: Vec<T>,
    pub selected: usize,
}

/// For every fold, labels each candidate's cells by the fold-training
/// majority and measures the error on the held-out rows. Cells without
/// fold-training rows take the overall fold-training majority.
pub fn evaluate_candidates_cv<T: Scalar>(
    train: &Dataset<T>,
    partitions: &[Partition<T>],
    plan: &FoldPlan,
) -> Result<CvEvaluation<T>> {
    if partitions.is_empty() {
        return Err(Error::param("candidates", "no candidate partitions"));
    }
    if plan.assignments().len() != train.len() {
        return Err(Error::param(
            "fold plan",
            format!(
                "plan covers {} rows, training set has {}",
                plan.assignments().len(),
                train.len()
            ),
        ));
    }
    for part in partitions {
        if part.dim() != train.dim() {
            return Err(Error::DimensionMismatch {
                expected: part.dim(),
                found: train.dim(),
            });
        }
    }
    let folds = plan.fold_count();
    let assignments = plan.assignments();
    let validation_sizes = plan.sizes();

    let fold_errors: Vec<Vec<T>> = partitions
        .par_iter()
        .map(|part| {
            let leaf_of: Vec<usize> = train.rows().map(|x| part.leaf_of(x)).collect();
            let leaves = part.leaf_count();
            (0..folds)
                .map(|fold| {
                    let mut sums = vec![0i64; leaves];
                    let mut counts = vec![0usize; leaves];
                    let mut global = 0i64;
                    for (i, &leaf) in leaf_of.iter().enumerate() {
                        if assignments[i] != fold {
                            let s = train.label(i).sign();
                            sums[leaf] += s;
                            counts[leaf] += 1;
                            global += s;
                        }
                    }
                    let fallback = Label::from_sum(global);
                    let wrong = leaf_of
                        .iter()
                        .enumerate()
                        .filter(|&(i, &leaf)| {
                            assignments[i] == fold && {
                                let predicted = if counts[leaf] > 0 {
                                    Label::from_sum(sums[leaf])
                                } else {
                                    fallback
                                };
                                predicted != train.label(i)
                            }
                        })
                        .count();
                    risk_of::<T>(wrong, validation_sizes[fold])
                })
                .collect()
        })
        .collect();

    let mean_errors: Vec<T> = fold_errors
        .iter()
        .map(|errs| errs.iter().copied().sum::<T>() / T::from_count(folds))
        .collect();
    let selected = first_min(mean_errors.iter().copied()).expect("nonempty pool");
    Ok(CvEvaluation {
        fold_errors,
        validation_sizes,
        mean_errors,
        selected,
    })
}

/// Grows `k` partitions with `p` splits each, keeps the one with the
/// smallest mean `folds`-fold validation error, and labels it on the whole
/// training set.
pub fn best_scored_tree_cv<T: Scalar>(
    train: &Dataset<T>,
    k: usize,
    p: usize,
    folds: usize,
    mode: Mode,
    cut_width: f64,
    seed: u64,
) -> Result<Tree<T>> {
    best_scored_tree_cv_with_report(train, k, p, folds, mode, cut_width, seed).map(|r| r.0)
}

/// [`best_scored_tree_cv`] together with the evaluation it selected on.
pub fn best_scored_tree_cv_with_report<T: Scalar>(
    train: &Dataset<T>,
    k: usize,
    p: usize,
    folds: usize,
    mode: Mode,
    cut_width: f64,
    seed: u64,
) -> Result<(Tree<T>, CvEvaluation<T>)> {
    check_candidates(k)?;
    let plan = make_folds(train.len(), folds, derive_seed(seed, stream::FOLDS))?;
    let partitions: Vec<Partition<T>> = (0..k)
        .into_par_iter()
        .map(|l| {
            grow_partition(
                train.dim(),
                p,
                mode,
                cut_width,
                candidate_seed(seed, l),
                Some(train),
            )
        })
        .collect::<Result<_>>()?;
    let evaluation = evaluate_candidates_cv(train, &partitions, &plan)?;
    let partition = partitions
        .into_iter()
        .nth(evaluation.selected)
        .expect("selected index in range");
    let (leaf_labels, errors) = label_partition(&partition, train)?;
    let tree = Tree {
        partition,
        leaf_labels,
        score: TreeScore::CrossValidated {
            cv_error: evaluation.mean_errors[evaluation.selected],
            risk: risk_of(errors, train.len()),
        },
    };
    Ok((tree, evaluation))
}
