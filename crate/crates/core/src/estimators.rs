// SPDX-License-Identifier: MIT OR Apache-2.0

//! Transferred estimators. Each one builds a length-`n0` input vector from the
//! target and/or source data with the alignment operators and hands it to one
//! of the exact solvers.

use std::collections::BTreeSet;

use crate::alignment::{average, average_multi, interleave_all, interleave_pair};
use crate::error::{Error, Result};
use crate::signal::{PenaltyKind, PenaltySpec, Signal};
use crate::solvers::{solve, solve_l0};

/// Which transferred estimator to run.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    /// Target data only, the fallback when no source is informative.
    TargetOnly,
    /// The first supplied source alone, averaged onto the target grid.
    Unisource,
    /// The mean of the averaged sources whose 1-based indices are listed.
    Multisource(BTreeSet<usize>),
    /// A user-supplied left inverse applied to the first source (ℓ0 only).
    Affine(LeftInverseMatrix),
    /// Target merged with the first source before averaging (ℓ0 only).
    TargetUnisource,
    /// Target merged with every supplied source before averaging (ℓ0 only).
    TargetMultisource,
}

impl EstimatorKind {
    pub fn multisource<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidArgument(
                "multisource estimator needs a nonempty source set".into(),
            ));
        }
        if set.contains(&0) {
            return Err(Error::InvalidArgument("source indices start at 1".into()));
        }
        Ok(EstimatorKind::Multisource(set))
    }

    /// Whether the estimator is only defined with an ℓ0 penalty.
    pub fn l0_only(&self) -> bool {
        matches!(
            self,
            EstimatorKind::Affine(_)
                | EstimatorKind::TargetUnisource
                | EstimatorKind::TargetMultisource
        )
    }

    /// The length-`n0` vector the solver is fed, built from the target `y`
    /// and `sources` (indexed 1-based in list order).
    pub fn aligned_input<S: AsRef<[f64]>>(&self, y: &[f64], sources: &[S]) -> Result<Vec<f64>> {
        let n0 = y.len();
        if n0 == 0 {
            return Err(Error::Empty);
        }
        let first = || {
            sources.first().map(|s| s.as_ref()).ok_or_else(|| {
                Error::InvalidArgument("estimator needs at least one source".into())
            })
        };
        match self {
            EstimatorKind::TargetOnly => Ok(y.to_vec()),
            EstimatorKind::Unisource => unisource_input(first()?, n0),
            EstimatorKind::Multisource(set) => {
                let mut picked = Vec::with_capacity(set.len());
                for &k in set {
                    let s = sources.get(k - 1).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "source index {k} out of range (have {})",
                            sources.len()
                        ))
                    })?;
                    picked.push(s.as_ref());
                }
                multisource_input(&picked, n0)
            }
            EstimatorKind::Affine(a) => {
                if a.rows() != n0 {
                    return Err(Error::Dimension(format!(
                        "left inverse has {} rows but target length is {n0}",
                        a.rows()
                    )));
                }
                a.apply(first()?)
            }
            EstimatorKind::TargetUnisource => average(&interleave_pair(y, first()?)?, n0),
            EstimatorKind::TargetMultisource => target_multisource_input(y, sources),
        }
    }

    /// Runs the estimator end to end.
    pub fn estimate<S: AsRef<[f64]>>(
        &self,
        y: &[f64],
        sources: &[S],
        penalty: PenaltySpec,
    ) -> Result<Signal> {
        if self.l0_only() && penalty.kind() != PenaltyKind::L0 {
            return Err(Error::InvalidArgument(
                "affine and target-incorporating estimators are defined for the l0 penalty only"
                    .into(),
            ));
        }
        let input = self.aligned_input(y, sources)?;
        Signal::new(solve(&input, penalty)?)
    }
}

fn unisource_input(y1: &[f64], n0: usize) -> Result<Vec<f64>> {
    if y1.len() < n0 {
        return Err(Error::Precondition(format!(
            "source length {} is shorter than target length {n0}; \
             use the target-unisource estimator, which allows n1 < n0",
            y1.len()
        )));
    }
    average(y1, n0)
}

fn multisource_input(sources: &[&[f64]], n0: usize) -> Result<Vec<f64>> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument(
            "multisource estimator needs at least one source".into(),
        ));
    }
    if let Some(short) = sources.iter().position(|s| s.len() < n0) {
        return Err(Error::Precondition(format!(
            "source {} has length {} < target length {n0}; \
             use the target-multisource estimator, which allows shorter sources",
            short + 1,
            sources[short].len()
        )));
    }
    let averaged = sources
        .iter()
        .map(|s| average(s, n0))
        .collect::<Result<Vec<_>>>()?;
    // offset from the first source keeps identical inputs bit-exact
    let k = averaged.len() as f64;
    Ok((0..n0)
        .map(|i| {
            let base = averaged[0][i];
            base + averaged[1..].iter().map(|a| a[i] - base).sum::<f64>() / k
        })
        .collect())
}

fn target_multisource_input<S: AsRef<[f64]>>(y: &[f64], sources: &[S]) -> Result<Vec<f64>> {
    let n0 = y.len();
    let merged = interleave_all(y, sources)?;
    let mut blocks = Vec::with_capacity(sources.len() + 1);
    blocks.push(n0);
    blocks.extend(sources.iter().map(|s| s.as_ref().len()));
    average_multi(&merged, n0, &blocks)
}

/// Source-only estimate from a single source with `n1 >= n0`.
pub fn estimate_unisource(y1: &[f64], n0: usize, penalty: PenaltySpec) -> Result<Signal> {
    if n0 == 0 {
        return Err(Error::InvalidArgument("target length must be positive".into()));
    }
    Signal::new(solve(&unisource_input(y1, n0)?, penalty)?)
}

/// Solver applied to the mean of the per-source averages.
pub fn estimate_multisource<S: AsRef<[f64]>>(
    sources: &[S],
    n0: usize,
    penalty: PenaltySpec,
) -> Result<Signal> {
    if n0 == 0 {
        return Err(Error::InvalidArgument("target length must be positive".into()));
    }
    let refs: Vec<&[f64]> = sources.iter().map(|s| s.as_ref()).collect();
    Signal::new(solve(&multisource_input(&refs, n0)?, penalty)?)
}

/// ℓ0 estimate from `A~ y1` for a left inverse `A~` of the source map.
pub fn estimate_affine(y1: &[f64], a_left: &LeftInverseMatrix, lambda: f64) -> Result<Signal> {
    Signal::new(solve_l0(&a_left.apply(y1)?, lambda)?)
}

/// ℓ0 estimate from the target and one source merged and averaged back to
/// the target grid. Works for any source length.
pub fn estimate_target_unisource(y: &[f64], y1: &[f64], lambda: f64) -> Result<Signal> {
    let input = average(&interleave_pair(y, y1)?, y.len())?;
    Signal::new(solve_l0(&input, lambda)?)
}

/// ℓ0 estimate from the target and all sources merged block by block.
pub fn estimate_target_multisource<S: AsRef<[f64]>>(
    y: &[f64],
    sources: &[S],
    lambda: f64,
) -> Result<Signal> {
    Signal::new(solve_l0(&target_multisource_input(y, sources)?, lambda)?)
}

pub fn estimate_target_only(y: &[f64], penalty: PenaltySpec) -> Result<Signal> {
    Signal::new(solve(y, penalty)?)
}

/// Dense `n0 x n1` matrix `A~` used by the affine estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftInverseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl LeftInverseMatrix {
    /// `entries` are row-major.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("matrix dimensions must be positive".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Builds `A~` and checks `A~ A = I` for the declared `A` (`cols x rows`,
    /// row-major) within `1e-10`.
    pub fn with_forward(rows: usize, cols: usize, entries: Vec<f64>, forward: &[f64]) -> Result<Self> {
        let m = Self::new(rows, cols, entries)?;
        m.verify(forward)?;
        Ok(m)
    }

    /// Explicit block-averaging matrix from an `n1`-grid to an `n0`-grid.
    pub fn averaging(n0: usize, n1: usize) -> Result<Self> {
        if n1 < n0 {
            return Err(Error::Dimension(format!(
                "averaging matrix needs n1 >= n0, got {n1} < {n0}"
            )));
        }
        let spec = crate::alignment::AlignmentSpec::new(n0, n1)?;
        let mut entries = vec![0.0; n0 * n1];
        for i in 0..n0 {
            let b = spec.block(i);
            let w = 1.0 / b.len() as f64;
            for j in b {
                entries[i * n1 + j] = w;
            }
        }
        Self::new(n0, n1, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn verify(&self, forward: &[f64]) -> Result<()> {
        let (n0, n1) = (self.rows, self.cols);
        if forward.len() != n1 * n0 {
            return Err(Error::Dimension(format!(
                "forward matrix must be {n1}x{n0}, got {} entries",
                forward.len()
            )));
        }
        for i in 0..n0 {
            for j in 0..n0 {
                let dot: f64 = (0..n1)
                    .map(|l| self.entries[i * n1 + l] * forward[l * n0 + j])
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not a left inverse: entry ({i}, {j}) of the product is {dot}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, y1: &[f64]) -> Result<Vec<f64>> {
        if y1.len() != self.cols {
            return Err(Error::Dimension(format!(
                "left inverse expects a source of length {}, got {}",
                self.cols,
                y1.len()
            )));
        }
        Ok(self
            .entries
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(y1).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &xi) in self.entries.chunks_exact(self.cols).zip(x) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
        out
    }

    /// Spectral norm, by power iteration on `A~^T A~`.
    pub fn operator_norm(&self) -> f64 {
        let mut x = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut sigma_sq = 0.0;
        for _ in 0..10_000 {
            let y = self.apply_transpose(&self.apply(&x).expect("length matches"));
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            x = y.into_iter().map(|v| v / norm).collect();
            let converged = (norm - sigma_sq).abs() <= 1e-14 * norm;
            sigma_sq = norm;
            if converged {
                break;
            }
        }
        sigma_sq.sqrt()
    }
}

/// Whether tuning formulas should use a known changepoint count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sparsity {
    Known(usize),
    /// Drops the dependence on the changepoint count (`lambda ~ n^-1/2` for ℓ1,
    /// `(1 + log n0) / n` for ℓ0).
    Unknown,
}

impl Sparsity {
    fn s0(self) -> usize {
        match self {
            Sparsity::Known(s) => s,
            Sparsity::Unknown => 0,
        }
    }
}

/// Closed-form tuning parameter from the error-bound analysis, with absolute
/// constant `c` and natural logarithms.
///
/// `source_lens` lists every available source length (`n_1, ..., n_K`);
/// unisource forms use the first entry, multisource forms the listed subset.
pub fn theoretical_lambda(
    kind: &EstimatorKind,
    penalty: PenaltyKind,
    sparsity: Sparsity,
    n0: usize,
    source_lens: &[usize],
    c: f64,
) -> Result<f64> {
    if n0 == 0 || source_lens.contains(&0) {
        return Err(Error::InvalidArgument("lengths must be positive".into()));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("constant must be positive, got {c}")));
    }
    let s1 = (sparsity.s0() + 1) as f64;
    let log_term = 1.0 + (n0 as f64 / s1).ln();
    let first = || {
        source_lens
            .first()
            .map(|&n| n as f64)
            .ok_or_else(|| Error::InvalidArgument("no source lengths given".into()))
    };
    let value = match (kind, penalty) {
        (EstimatorKind::TargetOnly, PenaltyKind::L1) => (s1 * n0 as f64).powf(-0.5),
        (EstimatorKind::TargetOnly, PenaltyKind::L0) => log_term / n0 as f64,
        (EstimatorKind::Unisource, PenaltyKind::L1) => (s1 * first()?).powf(-0.5),
        (EstimatorKind::Unisource, PenaltyKind::L0) => log_term / first()?,
        (EstimatorKind::Multisource(set), pen) => {
            let mut inv_sum = 0.0;
            for &k in set {
                let n = source_lens.get(k - 1).ok_or_else(|| {
                    Error::InvalidArgument(format!("source index {k} has no length"))
                })?;
                inv_sum += 1.0 / *n as f64;
            }
            let a = set.len() as f64;
            match pen {
                PenaltyKind::L1 => (inv_sum / s1).sqrt() / a,
                PenaltyKind::L0 => log_term * inv_sum / (a * a),
            }
        }
        (EstimatorKind::Affine(m), PenaltyKind::L0) => {
            let norm = m.operator_norm();
            log_term * norm * norm / n0 as f64
        }
        (EstimatorKind::TargetUnisource, PenaltyKind::L0) => log_term / (first()? + n0 as f64),
        (EstimatorKind::TargetMultisource, PenaltyKind::L0) => {
            let eff: usize = std::iter::once(n0)
                .chain(source_lens.iter().copied())
                .filter(|&n| n >= n0)
                .sum();
            log_term / eff as f64
        }
        (k, PenaltyKind::L1) => {
            return Err(Error::InvalidArgument(format!(
                "no l1 tuning rule for estimator {k:?}"
            )))
        }
    };
    Ok(c * value)
}
