// SPDX-License-Identifier: MIT OR Apache-2.0

//! Informative-source detection by screened deviation statistics, its
//! theoretical tuning rules, the optional harmonic-mean subset refinement and
//! the frequency-curve diagnostic.

use std::collections::BTreeSet;

use crate::alignment::expand;
use crate::error::{Error, Result};

/// Largest `|A-hat|` accepted by [`refine_subset`] by default.
pub const DEFAULT_REFINE_CAP: usize = 20;

/// Per-source screening widths and thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    screen_widths: Vec<usize>,
    thresholds: Vec<f64>,
}

impl SelectionConfig {
    pub fn new(screen_widths: Vec<usize>, thresholds: Vec<f64>) -> Result<Self> {
        if screen_widths.len() != thresholds.len() {
            return Err(Error::InvalidArgument(format!(
                "{} screening widths but {} thresholds",
                screen_widths.len(),
                thresholds.len()
            )));
        }
        if screen_widths.contains(&0) {
            return Err(Error::InvalidArgument("screening widths must be >= 1".into()));
        }
        if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "thresholds must be positive, got {t}"
            )));
        }
        Ok(Self {
            screen_widths,
            thresholds,
        })
    }

    /// The same width and threshold for each of `k` sources.
    pub fn uniform(k: usize, width: usize, threshold: f64) -> Result<Self> {
        Self::new(vec![width; k], vec![threshold; k])
    }

    pub fn screen_widths(&self) -> &[usize] {
        &self.screen_widths
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

/// A set of 1-based source indices, possibly empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InformativeSet(BTreeSet<usize>);

impl InformativeSet {
    pub fn new<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Self(indices.into_iter().collect())
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_set(&self) -> &BTreeSet<usize> {
        &self.0
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.contains(&k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::fmt::Display for InformativeSet {
    /// Comma-separated indices, or `EMPTY`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return f.write_str("EMPTY");
        }
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Normalised deviation `n_k^{-1/2} (y_k - P y)` of a source from the
/// expanded target.
pub fn deviation(y: &[f64], source: &[f64]) -> Result<Vec<f64>> {
    let expanded = expand(y, source.len())?;
    let scale = (source.len() as f64).sqrt();
    Ok(source
        .iter()
        .zip(&expanded)
        .map(|(s, e)| (s - e) / scale)
        .collect())
}

/// Sum of squares of the `width` largest-magnitude entries. Ties at the cut
/// keep lower indices.
pub fn screened_statistic(delta: &[f64], width: usize) -> f64 {
    let mut order: Vec<usize> = (0..delta.len()).collect();
    order.sort_by(|&a, &b| delta[b].abs().total_cmp(&delta[a].abs()).then(a.cmp(&b)));
    order
        .iter()
        .take(width.min(delta.len()))
        .map(|&i| delta[i] * delta[i])
        .sum()
}

/// Screened statistic of every source against the target.
pub fn screened_statistics<S: AsRef<[f64]> + Sync>(
    y: &[f64],
    sources: &[S],
    widths: &[usize],
) -> Result<Vec<f64>> {
    if widths.len() != sources.len() {
        return Err(Error::InvalidArgument(format!(
            "{} screening widths for {} sources",
            widths.len(),
            sources.len()
        )));
    }
    sources
        .iter()
        .zip(widths)
        .map(|(s, &w)| Ok(screened_statistic(&deviation(y, s.as_ref())?, w)))
        .collect()
}

/// Keeps source `k` iff its screened statistic is at most `tau_k`.
pub fn detect_informative<S: AsRef<[f64]> + Sync>(
    y: &[f64],
    sources: &[S],
    config: &SelectionConfig,
) -> Result<InformativeSet> {
    if y.is_empty() {
        return Err(Error::Empty);
    }
    if config.len() != sources.len() {
        return Err(Error::InvalidArgument(format!(
            "selection config covers {} sources but {} were given",
            config.len(),
            sources.len()
        )));
    }
    let stats = screened_statistics(y, sources, config.screen_widths())?;
    Ok(InformativeSet::new(
        stats
            .iter()
            .zip(config.thresholds())
            .enumerate()
            .filter(|(_, (s, t))| s <= t)
            .map(|(k, _)| k + 1),
    ))
}

fn sparsity_term(s0: usize, n0: usize) -> f64 {
    let s1 = (s0 + 1) as f64;
    s1 * (1.0 + (n0 as f64 / s1).ln())
}

/// Screening width from the detection-consistency analysis, rounded up and
/// clamped to `[1, n_k]`.
pub fn theoretical_screen_width(s0: usize, n0: usize, n_k: usize, c: f64) -> Result<usize> {
    check_positive(n0, n_k, c)?;
    let log_max = (n0.max(n_k) as f64).ln();
    let ratio = if log_max > 0.0 {
        sparsity_term(s0, n0) / log_max
    } else {
        // n0 = n_k = 1: the sparsity term dominates without bound
        f64::INFINITY
    };
    let raw = c * n_k as f64 / (8.0 * n0 as f64) * (ratio + 1.0);
    let width = if raw.is_finite() { raw.ceil() } else { n_k as f64 };
    Ok((width as usize).clamp(1, n_k))
}

/// Detection threshold `c * {(s0+1)(1 + log(n0/(s0+1))) + log(max(n0, n_k))} / n0`.
pub fn theoretical_threshold(s0: usize, n0: usize, n_k: usize, c: f64) -> Result<f64> {
    check_positive(n0, n_k, c)?;
    Ok(c * (sparsity_term(s0, n0) + (n0.max(n_k) as f64).ln()) / n0 as f64)
}

fn check_positive(n0: usize, n_k: usize, c: f64) -> Result<()> {
    if n0 == 0 || n_k == 0 {
        return Err(Error::InvalidArgument("lengths must be positive".into()));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("constant must be positive, got {c}")));
    }
    Ok(())
}

/// `(sum_{k in A} 1/n_k) / |A|^2`, the inverse of sources times harmonic mean.
fn fluctuation(subset: &[usize], source_lens: &[usize]) -> f64 {
    let inv: f64 = subset.iter().map(|&k| 1.0 / source_lens[k - 1] as f64).sum();
    inv / (subset.len() * subset.len()) as f64
}

/// Exhaustive search for the nonempty subset of `a_hat` with the smallest
/// fluctuation term; ties go to the larger subset, then the lexicographically
/// smaller one.
pub fn refine_subset(
    a_hat: &InformativeSet,
    source_lens: &[usize],
    cap: usize,
) -> Result<InformativeSet> {
    if a_hat.is_empty() {
        return Err(Error::InvalidArgument("cannot refine an empty source set".into()));
    }
    if a_hat.len() > cap {
        return Err(Error::InvalidArgument(format!(
            "exhaustive refinement is capped at {cap} sources, got {}; \
             a greedy search is not provided",
            a_hat.len()
        )));
    }
    let members: Vec<usize> = a_hat.indices().collect();
    if let Some(&k) = members.iter().find(|&&k| k == 0 || k > source_lens.len()) {
        return Err(Error::InvalidArgument(format!("source index {k} has no length")));
    }
    if members.iter().any(|&k| source_lens[k - 1] == 0) {
        return Err(Error::InvalidArgument("source lengths must be positive".into()));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 1u64..(1u64 << members.len()) {
        let subset: Vec<usize> = members
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &k)| k)
            .collect();
        let value = fluctuation(&subset, source_lens);
        let better = match &best {
            None => true,
            Some((bv, bs)) => {
                let tol = 1e-12 * bv.abs();
                value < bv - tol
                    || (value <= bv + tol
                        && (subset.len() > bs.len() || (subset.len() == bs.len() && subset < *bs)))
            }
        };
        if better {
            best = Some((value, subset));
        }
    }
    Ok(InformativeSet::new(best.expect("nonempty search").1))
}

/// `K^2 / sum_{k <= K} 1/n_k`: number of sources times the harmonic mean of
/// their lengths, for the first `k` entries of `source_lens`.
pub fn frequency_curve(source_lens: &[usize], k: usize) -> Result<f64> {
    if k == 0 || k > source_lens.len() {
        return Err(Error::InvalidArgument(format!(
            "K must lie in 1..={}, got {k}",
            source_lens.len()
        )));
    }
    if source_lens[..k].contains(&0) {
        return Err(Error::InvalidArgument("source lengths must be positive".into()));
    }
    let inv: f64 = source_lens[..k].iter().map(|&n| 1.0 / n as f64).sum();
    Ok((k * k) as f64 / inv)
}
