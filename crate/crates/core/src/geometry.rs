//! Monte Carlo estimates of how fast purely random cells shrink.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::{grow_partition, Mode};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// Cell geometry over independent pure-mode partitions with `split_count`
/// splits each.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryReport<T> {
    pub dim: usize,
    pub split_count: usize,
    pub trials: usize,
    /// Largest L1 cell diameter, one entry per trial.
    pub max_diameters: Vec<T>,
    /// Longest side per dimension, one `dim`-vector per trial.
    pub max_sides: Vec<Vec<T>>,
}

impl<T: Scalar> GeometryReport<T> {
    pub fn mean_max_diameter(&self) -> f64 {
        mean(self.max_diameters.iter().map(|v| v.to_f64_lossy()))
    }

    pub fn mean_max_side(&self, dimension: usize) -> f64 {
        mean(self.max_sides.iter().map(|s| s[dimension].to_f64_lossy()))
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

/// One report per entry of `split_grid`, each from `trials` partitions.
pub fn measure_geometry<T: Scalar>(
    dim: usize,
    split_grid: &[usize],
    trials: usize,
    cut_width: f64,
    seed: u64,
) -> Result<Vec<GeometryReport<T>>> {
    if split_grid.is_empty() {
        return Err(Error::param("split grid", "grid is empty"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    if let Some(&p) = split_grid.iter().find(|&&p| p == 0) {
        return Err(Error::param("split grid", format!("split count {p} < 1")));
    }
    split_grid
        .iter()
        .enumerate()
        .map(|(g, &p)| {
            let grid_seed = derive_seed(seed, g as u64);
            let samples: Vec<(T, Vec<T>)> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let part = grow_partition::<T>(
                        dim,
                        p,
                        Mode::Pure,
                        cut_width,
                        derive_seed(grid_seed, t as u64),
                        None,
                    )?;
                    let sides = (0..dim).map(|j| part.max_side(j)).collect();
                    Ok((part.max_diameter(), sides))
                })
                .collect::<Result<_>>()?;
            let (max_diameters, max_sides) = samples.into_iter().unzip();
            Ok(GeometryReport {
                dim,
                split_count: p,
                trials,
                max_diameters,
                max_sides,
            })
        })
        .collect()
}
