// SPDX-License-Identifier: MIT OR Apache-2.0

//! Piecewise-constant signal estimation with transfer from higher-frequency
//! sources.
//!
//! A target `y` of length `n0` and sources `y^(k)` of length `n_k` observe
//! the same step signal on different grids. [`alignment`] moves vectors
//! between grids, [`solvers`] fits fused-lasso and ℓ0 segmentations exactly,
//! [`estimators`] combines the two, [`selection`] screens out sources that
//! drift from the target, and [`tuning`] picks penalty levels and
//! thresholds from the data. [`simulation`] runs seeded benchmarks.
//!
//! ```
//! use steptransfer::alignment::expand;
//! use steptransfer::estimators::EstimatorKind;
//! use steptransfer::PenaltySpec;
//!
//! let f = [1.0, 1.0, 3.0, 3.0];
//! let source = expand(&f, 10).unwrap();
//! let est = EstimatorKind::Unisource
//!     .estimate(&f, &[source], PenaltySpec::l0(1e-6).unwrap())
//!     .unwrap();
//! assert_eq!(est.values(), &f);
//! ```

pub mod alignment;
pub mod error;
pub mod estimators;
pub mod selection;
pub mod signal;
pub mod simulation;
pub mod solvers;
pub mod tuning;

pub use error::{Error, Result};
pub use estimators::{theoretical_lambda, EstimatorKind, LeftInverseMatrix, Sparsity};
pub use selection::{detect_informative, InformativeSet, SelectionConfig};
pub use signal::{
    changepoints_of, difference_apply, mse_loss, ChangepointSet, PenaltyKind, PenaltySpec, Signal,
    SourceDataset,
};
pub use solvers::{solve, solve_l0, solve_l1};
