// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by signal construction, alignment, estimation and tuning.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A method's applicability condition does not hold for the supplied data.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("signal must contain at least one value")]
    Empty,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
