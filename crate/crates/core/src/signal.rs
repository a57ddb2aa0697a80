// SPDX-License-Identifier: MIT OR Apache-2.0

//! Value types shared across the crate: signals, changepoint sets, source
//! datasets, penalties and the evaluation loss.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Default tolerance used when reading changepoints off solver output.
pub const DEFAULT_CHANGEPOINT_TOL: f64 = 1e-9;

/// A finite, non-empty real vector.
///
/// Carries target data, source data, signal truths, noise and discrepancy
/// vectors alike. Immutable once built; every operation returns a fresh value.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    /// Constant signal of length `n`.
    pub fn constant(value: f64, n: usize) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Adds `c` to every entry.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v + c).collect())
    }

    pub fn mean(&self) -> f64 {
        exact_mean(&self.0)
    }
}

impl Deref for Signal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Signal {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Signal {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<Signal> for Vec<f64> {
    fn from(s: Signal) -> Self {
        s.0
    }
}

/// Mean computed as an offset from the first entry, so a block of identical
/// values averages back to that value exactly.
pub(crate) fn exact_mean(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let first = values[0];
    let dev: f64 = values[1..].iter().map(|v| v - first).sum();
    first + dev / values.len() as f64
}

/// Changepoint locations of a signal of length `n`.
///
/// Index `i` (1-based, `1 <= i <= n - 1`) marks a change between the `i`-th and
/// `(i + 1)`-th entries, i.e. it is the number of points left of the boundary.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChangepointSet {
    indices: Vec<usize>,
}

impl ChangepointSet {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidArgument(
                    "changepoint indices must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i >= n) {
            return Err(Error::InvalidArgument(format!(
                "changepoint {bad} outside 1..={}",
                n.saturating_sub(1)
            )));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// One source study: its observations, its 1-based position among the
/// sources, and (for simulations only) the underlying source signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDataset {
    data: Signal,
    index: usize,
    truth: Option<Signal>,
}

impl SourceDataset {
    pub fn new(data: Signal, index: usize) -> Result<Self> {
        if index == 0 {
            return Err(Error::InvalidArgument("source index starts at 1".into()));
        }
        Ok(Self {
            data,
            index,
            truth: None,
        })
    }

    pub fn with_truth(data: Signal, index: usize, truth: Signal) -> Result<Self> {
        if truth.len() != data.len() {
            return Err(Error::Dimension(format!(
                "source truth has length {} but data has length {}",
                truth.len(),
                data.len()
            )));
        }
        let mut s = Self::new(data, index)?;
        s.truth = Some(truth);
        Ok(s)
    }

    pub fn data(&self) -> &Signal {
        &self.data
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn truth(&self) -> Option<&Signal> {
        self.truth.as_ref()
    }

    /// Number of observations `n_k`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl AsRef<[f64]> for SourceDataset {
    fn as_ref(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PenaltyKind {
    /// Total-variation (fused lasso) penalty `lambda * ||D theta||_1`.
    L1,
    /// Changepoint-count penalty `lambda * ||D theta||_0`.
    L0,
}

impl PenaltyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PenaltyKind::L1 => "l1",
            PenaltyKind::L0 => "l0",
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(PenaltyKind::L1),
            "l0" => Ok(PenaltyKind::L0),
            other => Err(Error::InvalidArgument(format!("unknown penalty '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    kind: PenaltyKind,
    lambda: f64,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tuning parameter must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self { kind, lambda })
    }

    pub fn l1(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::L1, lambda)
    }

    pub fn l0(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::L0, lambda)
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Mean squared error `(1/n) * sum (estimate_i - truth_i)^2`.
pub fn mse_loss(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "estimate has length {} but truth has length {}",
            estimate.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Empty);
    }
    let sse: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sse / truth.len() as f64)
}

/// Indices `i` with `|theta_i - theta_{i+1}| > tol`.
pub fn changepoints_of(theta: &[f64], tol: f64) -> ChangepointSet {
    let indices = theta
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] - w[1]).abs() > tol)
        .map(|(i, _)| i + 1)
        .collect();
    ChangepointSet { indices }
}

/// First differences `(theta_1 - theta_2, ..., theta_{n-1} - theta_n)`.
pub fn difference_apply(theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() < 2 {
        return Err(Error::Dimension(format!(
            "difference operator needs length >= 2, got {}",
            theta.len()
        )));
    }
    Ok(theta.windows(2).map(|w| w[0] - w[1]).collect())
}
