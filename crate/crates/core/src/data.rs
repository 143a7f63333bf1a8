//! Datasets in canonical form: features scaled into `[0, 1]^d`, labels in
//! `{-1, +1}`; plus deterministic train/test splits and fold plans.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{permutation, stream_rng};
use crate::scalar::Scalar;

/// Binary class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> i64 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    /// `+1` when `sum >= 0`; zero resolves to the positive class.
    pub fn from_sum(sum: i64) -> Label {
        if sum >= 0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign())
    }
}

/// Min-max scaling of one raw feature column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Option<MinMax> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(MinMax { min: v, max: v }),
            Some(m) => Some(MinMax {
                min: m.min.min(v),
                max: m.max.max(v),
            }),
        })
    }

    /// Maps a raw value into `[0, 1]`; constant columns map to `0.5`.
    pub fn apply(&self, raw: f64) -> f64 {
        if self.max > self.min {
            ((raw - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }
}

/// The sample `D_n`: `n` rows of `d` features in `[0, 1]` with binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    features: Vec<T>,
    labels: Vec<Label>,
    dim: usize,
    feature_names: Option<Vec<String>>,
    scaling: Option<Vec<MinMax>>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from already-scaled rows.
    pub fn from_rows(rows: Vec<Vec<T>>, labels: Vec<Label>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let features = rows.into_iter().flatten().collect();
        Self::from_flat(features, labels, dim)
    }

    /// Builds a dataset from a row-major feature buffer.
    pub fn from_flat(features: Vec<T>, labels: Vec<Label>, dim: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidDataset("no rows".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature values for {} rows of dimension {}",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if let Some(pos) = features.iter().position(|v| !in_unit(*v)) {
            return Err(Error::InvalidDataset(format!(
                "feature value {} at row {}, column {} is outside [0, 1]",
                features[pos],
                pos / dim,
                pos % dim
            )));
        }
        Ok(Dataset {
            features,
            labels,
            dim,
            feature_names: None,
            scaling: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Scaling recorded at ingestion, one entry per feature.
    pub fn scaling(&self) -> Option<&[MinMax]> {
        self.scaling.as_deref()
    }

    /// Rows at `indices`, in that order. Names and scaling are inherited.
    pub fn subset(&self, indices: &[usize]) -> Dataset<T> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            dim: self.dim,
            feature_names: self.feature_names.clone(),
            scaling: self.scaling.clone(),
        }
    }

    /// Sum of label signs; its sign is the dataset-wide majority.
    pub fn label_sum(&self) -> i64 {
        self.labels.iter().map(|l| l.sign()).sum()
    }
}

fn in_unit<T: Scalar>(v: T) -> bool {
    v >= T::zero() && v <= T::one()
}

/// Which CSV column holds the class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Integers select by zero-based index, anything else by header name.
    pub fn parse(spec: &str) -> LabelColumn {
        match spec.trim().parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(spec.trim().to_string()),
        }
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Name(n) => write!(f, "'{n}'"),
            LabelColumn::Index(i) => write!(f, "#{i}"),
        }
    }
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "?" | "NA" | "NaN" | "nan" | "null")
}

/// Reads a comma-separated file with a header row.
///
/// Every column except the label must be numeric; each is min-max scaled
/// over the whole file. `positive_label` names the raw value mapped to `+1`;
/// without it, the larger of the two observed values (numerically when both
/// parse as numbers) is the positive class.
pub fn ingest_csv<T: Scalar>(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    positive_label: Option<&str>,
) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, path, label_column, positive_label)
}

/// As [`ingest_csv`], over any reader; `origin` is used in diagnostics.
pub fn read_csv<T: Scalar, R: std::io::Read>(
    reader: R,
    origin: &Path,
    label_column: &LabelColumn,
    positive_label: Option<&str>,
) -> Result<Dataset<T>> {
    let table = read_table(reader, origin, Some(label_column))?;
    let raw_labels = table.labels.as_deref().expect("label column requested");
    let label_name = table.label_name.clone().unwrap_or_default();
    let positive =
        resolve_positive(raw_labels, positive_label).map_err(|message| Error::LabelValues {
            path: origin.to_path_buf(),
            column: label_name,
            message,
        })?;
    let labels: Vec<Label> = raw_labels
        .iter()
        .map(|l| {
            if *l == positive {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();

    let dim = table.dim;
    let scaling: Vec<MinMax> = (0..dim)
        .map(|j| MinMax::fit(table.values.iter().skip(j).step_by(dim).copied()).expect("nonempty"))
        .collect();
    let features = table.scaled(&scaling)?;
    let mut ds =
        Dataset::from_flat(features, labels, dim)?.with_feature_names(table.feature_names)?;
    ds.scaling = Some(scaling);
    Ok(ds)
}

/// Unscaled contents of a CSV file: numeric features plus, optionally, the
/// raw label strings.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    /// Row-major raw feature values.
    pub values: Vec<f64>,
    pub dim: usize,
    pub label_name: Option<String>,
    pub labels: Option<Vec<String>>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies a fitted scaling column by column; values outside the fitted
    /// range are clamped into `[0, 1]`.
    pub fn scaled<T: Scalar>(&self, scaling: &[MinMax]) -> Result<Vec<T>> {
        if scaling.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: scaling.len(),
                found: self.dim,
            });
        }
        Ok(self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| T::from_f64_lossy(scaling[i % self.dim].apply(v)))
            .collect())
    }
}

pub fn read_table_file(
    path: impl AsRef<Path>,
    label_column: Option<&LabelColumn>,
) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_table(file, path, label_column)
}

/// Parses a headed CSV. Without a label column every column is a feature.
pub fn read_table<R: std::io::Read>(
    reader: R,
    origin: &Path,
    label_column: Option<&LabelColumn>,
) -> Result<RawTable> {
    let csv_err = |row: usize, e: csv::Error| Error::Csv {
        path: origin.to_path_buf(),
        row,
        message: e.to_string(),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(0, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::EmptyFile {
            path: origin.to_path_buf(),
        });
    }
    let missing_column = |column: &LabelColumn| Error::MissingColumn {
        path: origin.to_path_buf(),
        column: column.to_string(),
    };
    let label_idx = match label_column {
        None => None,
        Some(c @ LabelColumn::Index(i)) => Some(
            Some(*i)
                .filter(|&i| i < headers.len())
                .ok_or_else(|| missing_column(c))?,
        ),
        Some(c @ LabelColumn::Name(name)) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| missing_column(c))?,
        ),
    };
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| Some(c) != label_idx)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::InvalidDataset(format!(
            "{}: no feature columns besides the label",
            origin.display()
        )));
    }

    let mut values: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        // 1-based data row number, header excluded
        let row = r + 1;
        let record = record.map_err(|e| csv_err(row, e))?;
        for &c in &feature_cols {
            let field = record.get(c).unwrap_or("");
            if is_missing(field) {
                return Err(Error::MissingValue {
                    path: origin.to_path_buf(),
                    row,
                    column: headers[c].clone(),
                });
            }
            let value: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    path: origin.to_path_buf(),
                    row,
                    column: headers[c].clone(),
                    value: field.to_string(),
                })?;
            values.push(value);
        }
        if let Some(li) = label_idx {
            let label = record.get(li).unwrap_or("");
            if is_missing(label) {
                return Err(Error::MissingValue {
                    path: origin.to_path_buf(),
                    row,
                    column: headers[li].clone(),
                });
            }
            raw_labels.push(label.to_string());
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyFile {
            path: origin.to_path_buf(),
        });
    }
    Ok(RawTable {
        feature_names: feature_cols.iter().map(|&c| headers[c].clone()).collect(),
        values,
        dim: feature_cols.len(),
        label_name: label_idx.map(|i| headers[i].clone()),
        labels: label_idx.map(|_| raw_labels),
    })
}

fn resolve_positive(raw_labels: &[String], declared: Option<&str>) -> Result<String, String> {
    let mut distinct: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for l in raw_labels {
        if seen.insert(l.as_str()) {
            distinct.push(l);
        }
    }
    if distinct.len() > 2 {
        return Err(format!(
            "expected two label values, found {}: {}",
            distinct.len(),
            distinct
                .iter()
                .take(5)
                .cloned()
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    match declared {
        Some(pos) => {
            if distinct.len() == 2 && !distinct.contains(&pos) {
                return Err(format!(
                    "positive label '{pos}' not among observed values {} and {}",
                    distinct[0], distinct[1]
                ));
            }
            Ok(pos.to_string())
        }
        None if distinct.len() == 2 => {
            let (a, b) = (distinct[0], distinct[1]);
            let a_is_larger = match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => x > y,
                _ => a > b,
            };
            Ok(if a_is_larger { a } else { b }.to_string())
        }
        None => Err(format!(
            "single label value '{}'; declare the positive label explicitly",
            distinct[0]
        )),
    }
}

/// Row indices of a train/test split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` and cuts off `round(train_fraction * n)` rows for
/// training. Both sides are returned in ascending row order.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param(
            "train_fraction",
            format!("{train_fraction} is not in (0, 1)"),
        ));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::param(
            "train_fraction",
            format!("{train_fraction} of {n} rows leaves one side empty"),
        ));
    }
    let mut rng = stream_rng(seed);
    let order = permutation(&mut rng, n);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn train_test_split<T: Scalar>(
    ds: &Dataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    let idx = split_indices(ds.len(), train_fraction, seed)?;
    Ok((ds.subset(&idx.train), ds.subset(&idx.test)))
}

/// Assignment of `n` rows to `fold_count` folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    fold_count: usize,
    assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    /// `(training rows, validation rows)` for fold `fold`.
    pub fn fold(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (valid, train): (Vec<usize>, Vec<usize>) =
            (0..self.assignments.len()).partition(|&i| self.assignments[i] == fold);
        (train, valid)
    }
}

/// Random fold plan: a seeded permutation dealt round-robin into folds, so
/// fold sizes differ by at most one.
pub fn make_folds(n: usize, fold_count: usize, seed: u64) -> Result<FoldPlan> {
    if fold_count < 2 || fold_count > n {
        return Err(Error::param(
            "fold_count",
            format!("{fold_count} folds for {n} rows (need 2 <= folds <= n)"),
        ));
    }
    let mut rng = stream_rng(seed);
    let order = permutation(&mut rng, n);
    let mut assignments = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        assignments[row] = pos % fold_count;
    }
    Ok(FoldPlan {
        fold_count,
        assignments,
    })
}
