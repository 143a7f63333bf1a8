//! Best-scored random forests.
//!
//! Each tree of the forest is the best of `k` random candidate trees built
//! on axis-parallel partitions of `[0, 1]^d`. Partitions are grown either
//! purely at random or adaptively (splitting the cell of a randomly drawn
//! training point). Candidates are scored by the regularized empirical risk
//! `lambda * p^2 + risk` or by cross-validation, and the forest predicts by
//! majority vote.
//!
//! All numerical types are generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` and `*32` aliases below fix the precision.
//!
//! ```
//! use bsrf_core::{train_forest, ForestParams, Mode, ParityCube64, Strategy};
//!
//! let cube = ParityCube64::generate(2, 400, 7).unwrap();
//! let params = ForestParams {
//!     trees: 5,
//!     candidates: 3,
//!     strategy: Strategy::CrossValidated { splits: 12, folds: 5 },
//!     mode: Mode::Adaptive,
//!     cut_width: 0.5,
//!     seed: 1,
//! };
//! let forest = train_forest(&cube.dataset, &params).unwrap();
//! assert_eq!(forest.trees().len(), 5);
//! ```

pub mod codec;
pub mod counterexample;
pub mod data;
pub mod error;
pub mod eval;
pub mod forest;
pub mod geometry;
pub mod partition;
pub mod rng;
pub mod scalar;
pub mod tree;

pub use codec::{load_model, save_model};
pub use counterexample::{consistency_contrast, ContrastConfig, ContrastOutcome, ParityCube};
pub use data::{
    ingest_csv, make_folds, train_test_split, Dataset, FoldPlan, Label, LabelColumn, MinMax,
};
pub use error::{Error, Result};
pub use eval::{run_benchmark, BenchmarkConfig, EvalReport, ParamGrid};
pub use forest::{predict_forest, train_forest, Forest, ForestParams, Strategy, StrategyKind};
pub use geometry::{measure_geometry, GeometryReport};
pub use partition::{grow_partition, Cell, Mode, Partition, SplitRecord};
pub use scalar::Scalar;
pub use tree::{
    best_scored_tree_cv, best_scored_tree_regularized, fit_candidate, RiskCurve, Tree, TreeScore,
};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Cell64 = Cell<f64>;
pub type Cell32 = Cell<f32>;
pub type Partition64 = Partition<f64>;
pub type Partition32 = Partition<f32>;
pub type Tree64 = Tree<f64>;
pub type Tree32 = Tree<f32>;
pub type Forest64 = Forest<f64>;
pub type Forest32 = Forest<f32>;
pub type ParityCube64 = ParityCube<f64>;
pub type ParityCube32 = ParityCube<f32>;
pub type GeometryReport64 = GeometryReport<f64>;
