//! Metrics, hyperparameter search, repeated benchmarks and baselines.

use std::fmt::Write as _;
use std::io;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::data::{make_folds, split_indices, Dataset, Label};
use crate::error::{Error, Result};
use crate::forest::{train_forest, ForestParams, Strategy, StrategyKind};
use crate::partition::Mode;
use crate::rng::{derive_seed, stream, stream_rng};
use crate::scalar::Scalar;

/// Fraction of mismatched labels.
pub fn empirical_risk(predictions: &[Label], truth: &[Label]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::param("predictions", "empty label vectors"));
    }
    let wrong = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p != t)
        .count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// `1 - empirical_risk`.
pub fn accuracy(predictions: &[Label], truth: &[Label]) -> Result<f64> {
    empirical_risk(predictions, truth).map(|r| 1.0 - r)
}

/// Candidate values for each tunable. The grid is the Cartesian product;
/// `lambdas` applies to the regularized strategy and `splits` to the
/// cross-validated one.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrid {
    pub trees: Vec<usize>,
    pub candidates: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub splits: Vec<usize>,
    pub cut_widths: Vec<f64>,
    pub modes: Vec<Mode>,
    pub strategies: Vec<StrategyKind>,
    /// Folds used inside each tree's candidate selection (cv strategy).
    pub selection_folds: usize,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            trees: vec![11, 51],
            candidates: vec![1, 5, 10],
            lambdas: vec![1e-3, 1e-4],
            splits: vec![50, 200],
            cut_widths: vec![0.3, 0.5],
            modes: vec![Mode::Adaptive],
            strategies: vec![StrategyKind::CrossValidated],
            selection_folds: 10,
        }
    }
}

impl ParamGrid {
    /// A grid holding exactly `params`.
    pub fn single(params: &ForestParams) -> Self {
        let (lambdas, splits, selection_folds) = match params.strategy {
            Strategy::Regularized { lambda } => (vec![lambda], vec![], 10),
            Strategy::CrossValidated { splits, folds } => (vec![], vec![splits], folds),
        };
        ParamGrid {
            trees: vec![params.trees],
            candidates: vec![params.candidates],
            lambdas,
            splits,
            cut_widths: vec![params.cut_width],
            modes: vec![params.mode],
            strategies: vec![params.strategy.kind()],
            selection_folds,
        }
    }

    /// Grid points in deterministic order, all with `seed`.
    pub fn points(&self, seed: u64) -> Vec<ForestParams> {
        let mut out = Vec::new();
        for &kind in &self.strategies {
            let strategies: Vec<Strategy> = match kind {
                StrategyKind::Regularized => self
                    .lambdas
                    .iter()
                    .map(|&lambda| Strategy::Regularized { lambda })
                    .collect(),
                StrategyKind::CrossValidated => self
                    .splits
                    .iter()
                    .map(|&splits| Strategy::CrossValidated {
                        splits,
                        folds: self.selection_folds,
                    })
                    .collect(),
            };
            for &mode in &self.modes {
                for &trees in &self.trees {
                    for &candidates in &self.candidates {
                        for &strategy in &strategies {
                            for &cut_width in &self.cut_widths {
                                out.push(ForestParams {
                                    trees,
                                    candidates,
                                    strategy,
                                    mode,
                                    cut_width,
                                    seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<Vec<ForestParams>> {
        let points = self.points(0);
        if points.is_empty() {
            return Err(Error::param("grid", "the parameter grid is empty"));
        }
        for p in &points {
            p.validate()?;
        }
        Ok(points)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPointScore {
    pub params: ForestParams,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearch {
    pub scores: Vec<GridPointScore>,
    /// Index of the first grid point with the highest mean accuracy.
    pub best: usize,
}

impl GridSearch {
    pub fn best_params(&self) -> &ForestParams {
        &self.scores[self.best].params
    }
}

/// Scores every grid point by the mean `folds`-fold validation accuracy of
/// a forest trained on the remaining folds.
pub fn grid_search<T: Scalar>(
    train: &Dataset<T>,
    grid: &ParamGrid,
    folds: usize,
    seed: u64,
) -> Result<GridSearch> {
    let points = grid.validate()?;
    let plan = make_folds(train.len(), folds, derive_seed(seed, stream::FOLDS))?;
    let fold_sets: Vec<(Dataset<T>, Dataset<T>)> = (0..folds)
        .map(|f| {
            let (tr, va) = plan.fold(f);
            (train.subset(&tr), train.subset(&va))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|g| (0..folds).map(move |f| (g, f)))
        .collect();
    let accs: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let params = ForestParams {
                seed: derive_seed(seed, g as u64),
                ..points[g]
            };
            let (fold_train, fold_valid) = &fold_sets[f];
            let forest = train_forest(fold_train, &params)?;
            accuracy(&forest.predict_dataset(fold_valid)?, fold_valid.labels())
        })
        .collect::<Result<_>>()?;

    let scores: Vec<GridPointScore> = points
        .iter()
        .enumerate()
        .map(|(g, params)| {
            let fold_accuracies = accs[g * folds..(g + 1) * folds].to_vec();
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / folds as f64;
            GridPointScore {
                params: *params,
                fold_accuracies,
                mean_accuracy,
            }
        })
        .collect();
    let best = scores.iter().enumerate().fold(0, |b, (i, s)| {
        if s.mean_accuracy > scores[b].mean_accuracy {
            i
        } else {
            b
        }
    });
    Ok(GridSearch { scores, best })
}

/// Settings of a repeated-split benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub repeats: usize,
    pub train_fraction: f64,
    /// Folds of the hyperparameter search on each training split.
    pub search_folds: usize,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            repeats: 10,
            train_fraction: 0.7,
            search_folds: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepeatResult {
    pub accuracy: f64,
    pub params: ForestParams,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub repeats: Vec<RepeatResult>,
}

impl EvalReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.repeats.iter().map(|r| r.accuracy).collect()
    }

    pub fn mean(&self) -> f64 {
        mean_std(&self.accuracies()).0
    }

    /// Population standard deviation over repeats.
    pub fn std(&self) -> f64 {
        mean_std(&self.accuracies()).1
    }

    /// One row per repeat. Wall-clock times are left out so that the file
    /// depends only on the inputs.
    pub fn write_repeats_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io_err = |e: csv::Error| Error::Corrupt(format!("writing CSV: {e}"));
        w.write_record([
            "dataset",
            "n",
            "d",
            "repeat",
            "accuracy",
            "trees",
            "candidates",
            "strategy",
            "lambda",
            "splits",
            "selection_folds",
            "mode",
            "cut_width",
        ])
        .map_err(io_err)?;
        for (i, r) in self.repeats.iter().enumerate() {
            let (lambda, splits, folds) = strategy_columns(&r.params.strategy);
            w.write_record([
                self.dataset.clone(),
                self.n.to_string(),
                self.d.to_string(),
                i.to_string(),
                format!("{:.6}", r.accuracy),
                r.params.trees.to_string(),
                r.params.candidates.to_string(),
                r.params.strategy.kind().to_string(),
                lambda,
                splits,
                folds,
                r.params.mode.to_string(),
                r.params.cut_width.to_string(),
            ])
            .map_err(io_err)?;
        }
        w.flush()
            .map_err(|e| Error::Corrupt(format!("writing CSV: {e}")))
    }

    pub fn write_summary_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io_err = |e: csv::Error| Error::Corrupt(format!("writing CSV: {e}"));
        w.write_record([
            "dataset",
            "n",
            "d",
            "repeats",
            "mean_accuracy",
            "std_accuracy",
        ])
        .map_err(io_err)?;
        w.write_record([
            self.dataset.clone(),
            self.n.to_string(),
            self.d.to_string(),
            self.repeats.len().to_string(),
            format!("{:.6}", self.mean()),
            format!("{:.6}", self.std()),
        ])
        .map_err(io_err)?;
        w.flush()
            .map_err(|e| Error::Corrupt(format!("writing CSV: {e}")))
    }

    /// Table in the "mean (±std)" layout, reporting accuracy.
    pub fn text_table(&self) -> String {
        let mut s = String::new();
        let shape = format!("({}, {})", self.n, self.d);
        let _ = writeln!(
            s,
            "Test accuracy, mean (±std) over {} repeats",
            self.repeats.len()
        );
        let _ = writeln!(s, "{:<12} {:<12} {:>10}", "Data set", "(n, d)", "BRF");
        let _ = writeln!(
            s,
            "{:<12} {:<12} {:>10.4}",
            self.dataset,
            shape,
            self.mean()
        );
        let _ = writeln!(
            s,
            "{:<12} {:<12} {:>10}",
            "",
            "",
            format!("(±{:.4})", self.std())
        );
        s
    }
}

fn strategy_columns(strategy: &Strategy) -> (String, String, String) {
    match *strategy {
        Strategy::Regularized { lambda } => (lambda.to_string(), String::new(), String::new()),
        Strategy::CrossValidated { splits, folds } => {
            (String::new(), splits.to_string(), folds.to_string())
        }
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Repeats: fresh train/test split, grid search on the training part,
/// refit of the winner on the whole training part, accuracy on the test part.
pub fn run_benchmark<T: Scalar>(
    ds: &Dataset<T>,
    name: &str,
    grid: &ParamGrid,
    config: &BenchmarkConfig,
) -> Result<EvalReport> {
    if config.repeats == 0 {
        return Err(Error::param("repeats", "need at least one repeat"));
    }
    grid.validate()?;
    let repeats = (0..config.repeats)
        .map(|r| {
            let started = Instant::now();
            let r = r as u64;
            let split = split_indices(
                ds.len(),
                config.train_fraction,
                derive_seed(derive_seed(config.seed, stream::SPLIT), r),
            )?;
            let train = ds.subset(&split.train);
            let test = ds.subset(&split.test);
            let search = grid_search(
                &train,
                grid,
                config.search_folds,
                derive_seed(derive_seed(config.seed, stream::SEARCH), r),
            )?;
            let params = ForestParams {
                seed: derive_seed(derive_seed(config.seed, stream::FINAL), r),
                ..*search.best_params()
            };
            let forest = train_forest(&train, &params)?;
            let accuracy = accuracy(&forest.predict_dataset(&test)?, test.labels())?;
            Ok(RepeatResult {
                accuracy,
                params,
                seconds: started.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        dataset: name.to_string(),
        n: ds.len(),
        d: ds.dim(),
        repeats,
    })
}

/// Euclidean k-nearest-neighbour labels; distance ties go to the lower
/// training index and vote ties to `+1`.
pub fn knn_predict<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    k_neighbors: usize,
) -> Result<Vec<Label>> {
    if k_neighbors == 0 || k_neighbors > train.len() {
        return Err(Error::param(
            "k_neighbors",
            format!("{k_neighbors} not in 1..={}", train.len()),
        ));
    }
    if test.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: test.dim(),
        });
    }
    Ok((0..test.len())
        .into_par_iter()
        .map(|q| {
            let x = test.row(q);
            let mut dist: Vec<(T, usize)> = train
                .rows()
                .enumerate()
                .map(|(i, row)| {
                    let d2 = row
                        .iter()
                        .zip(x)
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum::<T>();
                    (d2, i)
                })
                .collect();
            dist.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });
            let sum: i64 = dist[..k_neighbors]
                .iter()
                .map(|&(_, i)| train.label(i).sign())
                .sum();
            Label::from_sum(sum)
        })
        .collect())
}

/// Test accuracy of [`knn_predict`].
pub fn knn_baseline<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    k_neighbors: usize,
) -> Result<f64> {
    accuracy(&knn_predict(train, test, k_neighbors)?, test.labels())
}

/// Test accuracy of a forest whose trees each have a single candidate,
/// i.e. a plain random forest without best-scoring.
pub fn prf_baseline<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    params: &ForestParams,
) -> Result<f64> {
    let params = ForestParams {
        candidates: 1,
        ..*params
    };
    let forest = train_forest(train, &params)?;
    accuracy(&forest.predict_dataset(test)?, test.labels())
}

/// Uniform points in `[0, 1]^d` labeled `+1` iff their coordinate sum
/// exceeds `d / 2`. Noise-free, so the Bayes risk is zero.
pub fn separable_sample<T: Scalar>(n: usize, dim: usize, seed: u64) -> Result<Dataset<T>> {
    let mut rng = stream_rng(derive_seed(seed, stream::TEST));
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = row.iter().sum();
        labels.push(if s > dim as f64 / 2.0 {
            Label::Positive
        } else {
            Label::Negative
        });
        features.extend(row.into_iter().map(T::from_f64_lossy));
    }
    Dataset::from_flat(features, labels, dim)
}
