// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact solvers for the two penalised least-squares problems
//!
//! ```text
//! min_theta (1/(2 n)) ||v - theta||^2 + lambda ||D theta||_1
//! min_theta (1/(2 n)) ||v - theta||^2 + lambda ||D theta||_0
//! ```
//!
//! The 1/(2n) scaling stays inside the solver so tuning values computed on the
//! objective's own scale can be passed through unchanged.

use crate::error::{Error, Result};
use crate::signal::{exact_mean, PenaltyKind, PenaltySpec};

/// Relative tolerance under which two ℓ0 partitions count as tied.
const TIE_TOL: f64 = 1e-12;

/// Fused-lasso / total-variation denoising.
///
/// Runs the direct (taut-string style) linear-time algorithm, then re-derives
/// each segment value from its stationarity condition so that a segment's value
/// is its data mean shifted by `n * lambda * (left sign - right sign) / len`.
pub fn solve_l1(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_input(v, lambda)?;
    let n = v.len();
    let scaled = n as f64 * lambda;
    if scaled == 0.0 || n == 1 {
        return Ok(v.to_vec());
    }
    let raw = tv_direct(v, scaled);
    Ok(polish_segments(v, &raw, scaled))
}

fn check_input(v: &[f64], lambda: f64) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tuning parameter must be finite and nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

/// Direct TV denoising of `min 0.5 ||y - x||^2 + lam ||Dx||_1` (Condat's
/// algorithm). Segment values are accumulated incrementally and may carry
/// rounding error; callers polish them afterwards.
fn tv_direct(input: &[f64], lam: f64) -> Vec<f64> {
    let width = input.len();
    let mut out = vec![0.0; width];
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let (mut umin, mut umax) = (lam, -lam);
    let mut vmin = input[0] - lam;
    let mut vmax = input[0] + lam;
    let twolam = 2.0 * lam;

    macro_rules! flush {
        ($value:expr, $upto:expr) => {
            loop {
                out[k0] = $value;
                k0 += 1;
                if k0 > $upto {
                    break;
                }
            }
        };
    }

    loop {
        while k == width - 1 {
            if umin < 0.0 {
                flush!(vmin, kminus);
                k = k0;
                kminus = k0;
                vmin = input[k0];
                umin = lam;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                flush!(vmax, kplus);
                k = k0;
                kplus = k0;
                vmax = input[k0];
                umax = -lam;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                flush!(vmin, k);
                return out;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < -lam {
            flush!(vmin, kminus);
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = input[k0];
            vmax = vmin + twolam;
            umin = lam;
            umax = -lam;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lam {
            flush!(vmax, kplus);
            k = k0;
            kminus = k0;
            kplus = k0;
            vmax = input[k0];
            vmin = vmax - twolam;
            umin = lam;
            umax = -lam;
        } else {
            k += 1;
            if umin >= lam {
                kminus = k;
                vmin += (umin - lam) / (kminus - k0 + 1) as f64;
                umin = lam;
            }
            if umax <= -lam {
                kplus = k;
                vmax += (umax + lam) / (kplus - k0 + 1) as f64;
                umax = -lam;
            }
        }
    }
}

/// Maximal runs of identical values, as half-open ranges.
fn runs(theta: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=theta.len() {
        if i == theta.len() || theta[i] != theta[start] {
            out.push((start, i));
            start = i;
        }
    }
    out
}

fn polish_segments(v: &[f64], raw: &[f64], lam: f64) -> Vec<f64> {
    let segs = runs(raw);
    let sign = |a: f64, b: f64| if a > b { 1.0 } else { -1.0 };
    let mut out = vec![0.0; v.len()];
    for (s, &(a, b)) in segs.iter().enumerate() {
        let left = if s == 0 { 0.0 } else { sign(raw[a - 1], raw[a]) };
        let right = if s + 1 == segs.len() {
            0.0
        } else {
            sign(raw[a], raw[b])
        };
        let value = exact_mean(&v[a..b]) + lam * (left - right) / (b - a) as f64;
        out[a..b].fill(value);
    }
    out
}

/// Prefix sums over a centred copy of the data, giving O(1) segment costs.
struct SegmentCosts {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl SegmentCosts {
    fn new(v: &[f64]) -> Self {
        let centre = exact_mean(v);
        let mut sum = Vec::with_capacity(v.len() + 1);
        let mut sum_sq = Vec::with_capacity(v.len() + 1);
        let (mut s, mut q) = (0.0, 0.0);
        sum.push(0.0);
        sum_sq.push(0.0);
        for &x in v {
            let d = x - centre;
            s += d;
            q += d * d;
            sum.push(s);
            sum_sq.push(q);
        }
        Self { sum, sum_sq }
    }

    /// Residual sum of squares of `v[a..b]` about its mean.
    fn cost(&self, a: usize, b: usize) -> f64 {
        let s = self.sum[b] - self.sum[a];
        let q = self.sum_sq[b] - self.sum_sq[a];
        (q - s * s / (b - a) as f64).max(0.0)
    }
}

/// ℓ0-penalised least squares by optimal partitioning.
///
/// Minimises `RSS + 2 n lambda * (#changepoints)` exactly over all partitions.
/// Candidate last-changepoints that can no longer be optimal are pruned. Ties
/// within a relative 1e-12 prefer fewer changepoints, then the lexicographically
/// smallest changepoint set. The output holds the data mean on each segment.
pub fn solve_l0(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_input(v, lambda)?;
    let cps = l0_changepoints(v, lambda);
    Ok(segment_means(v, &cps))
}

/// Optimal 0-based segment starts (excluding 0) for the ℓ0 problem.
pub(crate) fn l0_changepoints(v: &[f64], lambda: f64) -> Vec<usize> {
    let n = v.len();
    let beta = 2.0 * n as f64 * lambda;
    let costs = SegmentCosts::new(v);
    let eps_base = TIE_TOL * 2.0 * n as f64;

    let mut best = vec![0.0f64; n + 1];
    let mut count = vec![0usize; n + 1];
    let mut prev = vec![0usize; n + 1];
    best[0] = -beta;
    let mut candidates: Vec<usize> = vec![0];

    for t in 1..=n {
        let mut arg = candidates[0];
        let mut val = best[arg] + costs.cost(arg, t) + beta;
        let mut cnt = if arg == 0 { 0 } else { count[arg] + 1 };
        for &s in &candidates[1..] {
            let cand = best[s] + costs.cost(s, t) + beta;
            let cand_cnt = count[s] + 1;
            let eps = eps_base.max(TIE_TOL * val.abs());
            let better = if cand < val - eps {
                true
            } else if cand <= val + eps {
                cand_cnt < cnt
                    || (cand_cnt == cnt && lex_less(&prev, s, arg))
            } else {
                false
            };
            if better {
                arg = s;
                val = cand;
                cnt = cand_cnt;
            }
        }
        best[t] = val;
        count[t] = cnt;
        prev[t] = arg;

        // A start that already loses at t, with margin, loses at every later t
        // because splitting a segment never increases its residual cost.
        let margin = 1e-9 * (1.0 + val.abs());
        candidates.retain(|&s| best[s] + costs.cost(s, t) <= val + margin);
        candidates.push(t);
    }

    let mut cps = Vec::with_capacity(count[n]);
    let mut t = n;
    while t > 0 {
        let s = prev[t];
        if s > 0 {
            cps.push(s);
        }
        t = s;
    }
    cps.reverse();
    cps
}

/// Whether the partition ending with a segment starting at `a` has a
/// lexicographically smaller changepoint set than the one starting at `b`.
fn lex_less(prev: &[usize], a: usize, b: usize) -> bool {
    let path = |mut s: usize| {
        let mut out = Vec::new();
        while s > 0 {
            out.push(s);
            s = prev[s];
        }
        out.reverse();
        out
    };
    path(a) < path(b)
}

/// Piecewise-constant fit taking the data mean between consecutive 0-based
/// segment starts.
pub(crate) fn segment_means(v: &[f64], starts: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut bounds = Vec::with_capacity(starts.len() + 2);
    bounds.push(0);
    bounds.extend_from_slice(starts);
    bounds.push(v.len());
    for w in bounds.windows(2) {
        let m = exact_mean(&v[w[0]..w[1]]);
        out.extend(std::iter::repeat_n(m, w[1] - w[0]));
    }
    out
}

/// Dispatches on the penalty kind.
pub fn solve(v: &[f64], penalty: PenaltySpec) -> Result<Vec<f64>> {
    match penalty.kind() {
        PenaltyKind::L1 => solve_l1(v, penalty.lambda()),
        PenaltyKind::L0 => solve_l0(v, penalty.lambda()),
    }
}

/// `(1/(2 n0)) ||v - theta||^2 + lambda * ||D theta||_{1 or 0}`.
///
/// The ℓ0 count uses exact comparison of neighbouring entries.
pub fn objective_value(v: &[f64], theta: &[f64], penalty: PenaltySpec, n0: usize) -> Result<f64> {
    if v.len() != n0 || theta.len() != n0 {
        return Err(Error::Dimension(format!(
            "objective needs v and theta of length {n0}, got {} and {}",
            v.len(),
            theta.len()
        )));
    }
    if n0 == 0 {
        return Err(Error::Empty);
    }
    let rss: f64 = v.iter().zip(theta).map(|(a, b)| (a - b) * (a - b)).sum();
    let pen: f64 = match penalty.kind() {
        PenaltyKind::L1 => theta.windows(2).map(|w| (w[0] - w[1]).abs()).sum(),
        PenaltyKind::L0 => theta.windows(2).filter(|w| w[0] != w[1]).count() as f64,
    };
    Ok(rss / (2.0 * n0 as f64) + penalty.lambda() * pen)
}
