//! Optional TOML run file. Keys mirror the long flag names with `-`
//! replaced by `_`; anything given on the command line wins.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

/// A key that takes either a single value or a list.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub label_column: Option<String>,
    pub positive_label: Option<String>,
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,

    pub trees: Option<OneOrMany<usize>>,
    pub candidates: Option<OneOrMany<usize>>,
    pub lambda: Option<OneOrMany<f64>>,
    pub splits: Option<OneOrMany<usize>>,
    pub cut_width: Option<OneOrMany<f64>>,
    pub mode: Option<OneOrMany<String>>,
    pub strategy: Option<OneOrMany<String>>,
    pub folds: Option<usize>,

    pub repeats: Option<usize>,
    pub search_folds: Option<usize>,
    pub train_fraction: Option<f64>,

    pub dim: Option<usize>,
    pub samples: Option<usize>,
    pub test_samples: Option<usize>,
    pub trials: Option<usize>,
    pub restricted_dims: Option<Vec<usize>>,
    pub grid: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

/// Flag value if given, else the file value, else the default.
pub fn list<T>(flag: Vec<T>, file: Option<OneOrMany<T>>, default: &[T]) -> Vec<T>
where
    T: Clone,
{
    if !flag.is_empty() {
        flag
    } else if let Some(v) = file {
        v.into_vec()
    } else {
        default.to_vec()
    }
}

/// Single-valued variant of [`list`]; more than one value is an error.
pub fn single<T>(name: &str, flag: Vec<T>, file: Option<OneOrMany<T>>, default: T) -> Result<T>
where
    T: Clone,
{
    let mut values = list(flag, file, std::slice::from_ref(&default));
    match values.len() {
        1 => Ok(values.remove(0)),
        0 => anyhow::bail!("--{name} needs a value"),
        n => anyhow::bail!("--{name} takes one value here, got {n}"),
    }
}
