// SPDX-License-Identifier: MIT OR Apache-2.0

//! Data-driven tuning: k-fold cross-validation of the penalty level and the
//! permutation-calibrated detection threshold.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::selection::{deviation, screened_statistic};
use crate::signal::{PenaltyKind, PenaltySpec};
use crate::solvers::{solve, solve_l1};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_GRID_POINTS: usize = 30;
pub const DEFAULT_GRID_SPAN: (f64, f64) = (1e-4, 1e2);

/// Cross-validation folds and candidate penalty levels.
///
/// Fold `f` holds out the indices `i` with `i % folds == f`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSpec {
    folds: usize,
    grid: Vec<f64>,
}

impl CvSpec {
    pub fn new(folds: usize, grid: Vec<f64>) -> Result<Self> {
        if folds < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
        }
        if grid.is_empty() {
            return Err(Error::InvalidArgument("lambda grid is empty".into()));
        }
        if grid.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidArgument(
                "lambda grid values must be finite and nonnegative".into(),
            ));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("lambda grid must be increasing".into()));
        }
        Ok(Self { folds, grid })
    }

    /// Default folds with a log-spaced grid scaled to `v`.
    pub fn for_signal(v: &[f64]) -> Result<Self> {
        Self::new(DEFAULT_FOLDS, default_grid(grid_scale(v), DEFAULT_GRID_POINTS))
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
}

/// Sample variance of first differences, or 1 when that is zero or undefined.
pub fn grid_scale(v: &[f64]) -> f64 {
    if v.len() < 3 {
        return 1.0;
    }
    let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (d.len() - 1) as f64;
    if var > 0.0 && var.is_finite() {
        var
    } else {
        1.0
    }
}

/// `points` log-spaced values over `[1e-4, 1e2] * scale`.
pub fn default_grid(scale: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = DEFAULT_GRID_SPAN;
    let (a, b) = ((lo * scale).ln(), (hi * scale).ln());
    match points {
        0 => Vec::new(),
        1 => vec![lo * scale],
        _ => (0..points)
            .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
            .collect(),
    }
}

/// Total held-out squared error for every grid value.
pub fn cv_scores(v: &[f64], kind: PenaltyKind, spec: &CvSpec) -> Result<Vec<f64>> {
    let n = v.len();
    if n < spec.folds {
        return Err(Error::InvalidArgument(format!(
            "signal of length {n} cannot be split into {} folds",
            spec.folds
        )));
    }
    let mut scores = vec![0.0; spec.grid.len()];
    for fold in 0..spec.folds {
        let train: Vec<usize> = (0..n).filter(|i| i % spec.folds != fold).collect();
        let held: Vec<usize> = (0..n).filter(|i| i % spec.folds == fold).collect();
        let train_values: Vec<f64> = train.iter().map(|&i| v[i]).collect();
        let nearest: Vec<usize> = held.iter().map(|&i| nearest_position(&train, i)).collect();
        for (score, &lambda) in scores.iter_mut().zip(&spec.grid) {
            let fit = solve(&train_values, PenaltySpec::new(kind, lambda)?)?;
            *score += held
                .iter()
                .zip(&nearest)
                .map(|(&i, &p)| (v[i] - fit[p]) * (v[i] - fit[p]))
                .sum::<f64>();
        }
    }
    Ok(scores)
}

/// Position in sorted `train` of the index closest to `i`; ties go left.
fn nearest_position(train: &[usize], i: usize) -> usize {
    match train.binary_search(&i) {
        Ok(p) => p,
        Err(0) => 0,
        Err(p) if p == train.len() => p - 1,
        Err(p) => {
            if i - train[p - 1] <= train[p] - i {
                p - 1
            } else {
                p
            }
        }
    }
}

/// Grid value with the smallest cross-validated error (smallest value on ties).
pub fn cv_select_lambda(v: &[f64], kind: PenaltyKind, spec: &CvSpec) -> Result<f64> {
    let scores = cv_scores(v, kind, spec)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(spec.grid[best])
}

/// A smoother used to split a source into fit and residual.
pub trait Smoother: Send + Sync {
    fn smooth(&self, v: &[f64]) -> Result<Vec<f64>>;
}

impl<F> Smoother for F
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync,
{
    fn smooth(&self, v: &[f64]) -> Result<Vec<f64>> {
        self(v)
    }
}

/// Fused-lasso fit with its penalty chosen by default cross-validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CvFusedLasso;

impl Smoother for CvFusedLasso {
    fn smooth(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() < DEFAULT_FOLDS {
            return Ok(v.to_vec());
        }
        let spec = CvSpec::for_signal(v)?;
        let lambda = cv_select_lambda(v, PenaltyKind::L1, &spec)?;
        solve_l1(v, lambda)
    }
}

/// Settings of the permutation threshold calibration.
#[derive(Clone)]
pub struct PermutationSpec {
    replicates: usize,
    quantile: f64,
    fit: Arc<dyn Smoother>,
    rng_seed: u64,
}

impl fmt::Debug for PermutationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PermutationSpec")
            .field("replicates", &self.replicates)
            .field("quantile", &self.quantile)
            .field("rng_seed", &self.rng_seed)
            .finish_non_exhaustive()
    }
}

impl PermutationSpec {
    /// Uses [`CvFusedLasso`] as the smoother.
    pub fn new(replicates: usize, quantile: f64, rng_seed: u64) -> Result<Self> {
        Self::with_smoother(replicates, quantile, rng_seed, Arc::new(CvFusedLasso))
    }

    pub fn with_smoother(
        replicates: usize,
        quantile: f64,
        rng_seed: u64,
        fit: Arc<dyn Smoother>,
    ) -> Result<Self> {
        if replicates < 1 {
            return Err(Error::InvalidArgument("need at least one permutation".into()));
        }
        if !(quantile > 0.0 && quantile < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quantile level must lie in (0, 1), got {quantile}"
            )));
        }
        Ok(Self {
            replicates,
            quantile,
            fit,
            rng_seed,
        })
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn quantile(&self) -> f64 {
        self.quantile
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }
}

/// Generator for permutation replicate `b`: one ChaCha stream per replicate
/// under the same key, so replicates do not depend on scheduling or on `B`.
fn replicate_rng(seed: u64, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    rng
}

/// The permutation statistics `tau^1, ..., tau^B` in replicate order.
///
/// The reference source is the one whose full deviation from the target has
/// the smallest squared norm (lowest index on ties).
pub fn permutation_replicates<S: AsRef<[f64]> + Sync>(
    y: &[f64],
    sources: &[S],
    widths: &[usize],
    spec: &PermutationSpec,
) -> Result<Vec<f64>> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument(
            "permutation threshold needs at least one source".into(),
        ));
    }
    if widths.len() != sources.len() {
        return Err(Error::InvalidArgument(format!(
            "{} screening widths for {} sources",
            widths.len(),
            sources.len()
        )));
    }
    let mut best = (0, f64::INFINITY);
    for (k, s) in sources.iter().enumerate() {
        let norm: f64 = deviation(y, s.as_ref())?.iter().map(|d| d * d).sum();
        if norm < best.1 {
            best = (k, norm);
        }
    }
    let k_hat = best.0;
    let source = sources[k_hat].as_ref();
    let width = widths[k_hat];

    let fitted = spec.fit.smooth(source)?;
    if fitted.len() != source.len() {
        return Err(Error::Dimension(format!(
            "smoother returned {} values for a source of length {}",
            fitted.len(),
            source.len()
        )));
    }
    let residual: Vec<f64> = source.iter().zip(&fitted).map(|(a, b)| a - b).collect();

    (0..spec.replicates)
        .into_par_iter()
        .map(|b| {
            let mut r = residual.clone();
            r.shuffle(&mut replicate_rng(spec.rng_seed, b));
            let rebuilt: Vec<f64> = fitted.iter().zip(&r).map(|(f, e)| f + e).collect();
            Ok(screened_statistic(&deviation(y, &rebuilt)?, width))
        })
        .collect()
}

/// Empirical `q`-quantile of the permutation statistics, taken as the
/// `ceil(q B)`-th order statistic.
pub fn permutation_threshold<S: AsRef<[f64]> + Sync>(
    y: &[f64],
    sources: &[S],
    widths: &[usize],
    spec: &PermutationSpec,
) -> Result<f64> {
    let mut taus = permutation_replicates(y, sources, widths, spec)?;
    taus.sort_by(f64::total_cmp);
    Ok(taus[order_statistic_index(spec.quantile, taus.len())])
}

/// 0-based index of the `ceil(q n)`-th order statistic; guards against
/// `q n` landing a rounding error above an integer.
pub(crate) fn order_statistic_index(q: f64, n: usize) -> usize {
    let rank = (q * n as f64 - 1e-9).ceil().max(1.0) as usize;
    rank.min(n) - 1
}
