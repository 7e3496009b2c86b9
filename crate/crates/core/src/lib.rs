//! Fast conditional independence testing with regression trees.
//!
//! The test compares how well a decision tree predicts `Y` from `(X, Z)`
//! against how well it predicts `Y` from `Z` alone, over repeated random
//! train/test splits, and turns the per-split MSE differences into a
//! one-tailed t-test p-value. Small p-values indicate that `X` carries
//! information about `Y` beyond `Z`.
//!
//! ```
//! use fcit::datasets::{gen_lingauss, LingaussSpec};
//! use fcit::fit::{fit_test, FitConfig};
//!
//! let data = gen_lingauss(&LingaussSpec { dim: 1, dependent: true, n: 500, seed: 3 }).unwrap();
//! let outcome = fit_test(&data.x, &data.y, &data.z, &FitConfig::with_seed(1)).unwrap();
//! assert!((0.0..=1.0).contains(&outcome.p_value));
//! ```

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod datasets;
pub mod deadline;
pub mod dtree;
pub mod error;
pub mod fit;
mod kernels;
pub mod matrix;
pub mod seed;
pub mod stats;

pub use dataset::{Dataset, Setting};
pub use deadline::Deadline;
pub use dtree::{cross_validate, fit_tree, predict, CvResult, RegressionTree, TreeParams};
pub use error::{Error, Result};
pub use fit::{auto_test, fit_test, fit_test_unconditional, FitConfig, TestMode, TestOutcome};
pub use matrix::SampleMatrix;
pub use seed::SeedStream;
