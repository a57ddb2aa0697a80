// SPDX-License-Identifier: MIT OR Apache-2.0

//! Ceiling-block alignment between a length-`n` target grid and longer
//! source grids.
//!
//! Target coordinate `j` (1-based) owns the source rows
//! `ceil((j-1) m / n) + 1 ..= ceil(j m / n)`. Expansion replicates each target
//! value over its rows; averaging takes the mean over them. Everything is
//! computed from integer index arithmetic; no matrix is ever materialised.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::signal::exact_mean;

#[inline]
pub(crate) fn ceil_div(a: usize, b: usize) -> usize {
    debug_assert!(b > 0);
    a.div_ceil(b)
}

/// Alignment between a target of length `n` and a single source of length `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentSpec {
    target_len: usize,
    source_len: usize,
}

impl AlignmentSpec {
    pub fn new(target_len: usize, source_len: usize) -> Result<Self> {
        if target_len == 0 || source_len == 0 {
            return Err(Error::InvalidArgument(
                "alignment lengths must be positive".into(),
            ));
        }
        Ok(Self {
            target_len,
            source_len,
        })
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    /// 0-based source rows owned by 0-based target coordinate `j`.
    pub fn block(&self, j: usize) -> Range<usize> {
        let (n, m) = (self.target_len, self.source_len);
        ceil_div(j * m, n)..ceil_div((j + 1) * m, n)
    }
}

/// Alignment between a target of length `n` and a concatenation of blocks of
/// lengths `m_0, ..., m_h`, interleaved coordinate by coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiAlignmentSpec {
    target_len: usize,
    block_lens: Vec<usize>,
}

impl MultiAlignmentSpec {
    pub fn new(target_len: usize, block_lens: Vec<usize>) -> Result<Self> {
        if target_len == 0 {
            return Err(Error::InvalidArgument("target length must be positive".into()));
        }
        if block_lens.is_empty() || block_lens.contains(&0) {
            return Err(Error::InvalidArgument(
                "block lengths must be a nonempty list of positive integers".into(),
            ));
        }
        Ok(Self {
            target_len,
            block_lens,
        })
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub fn block_lens(&self) -> &[usize] {
        &self.block_lens
    }

    pub fn total_len(&self) -> usize {
        self.block_lens.iter().sum()
    }

    fn offset(&self, j: usize) -> usize {
        self.block_lens
            .iter()
            .map(|&m| ceil_div(j * m, self.target_len))
            .sum()
    }

    /// 0-based rows of the concatenated vector owned by target coordinate `j`.
    pub fn block(&self, j: usize) -> Range<usize> {
        self.offset(j)..self.offset(j + 1)
    }
}

/// Replicates each of the `n` entries of `v` over its block of an
/// `m`-long grid.
pub fn expand(v: &[f64], m: usize) -> Result<Vec<f64>> {
    let spec = AlignmentSpec::new(v.len(), m)?;
    let mut out = Vec::with_capacity(m);
    for (j, &x) in v.iter().enumerate() {
        let b = spec.block(j);
        out.extend(std::iter::repeat_n(x, b.len()));
    }
    debug_assert_eq!(out.len(), m);
    Ok(out)
}

/// Block means of `v` (length `m`) on an `n`-long grid; requires `m >= n`.
pub fn average(v: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = v.len();
    let spec = AlignmentSpec::new(n, m)?;
    if m < n {
        return Err(Error::Dimension(format!(
            "averaging needs source length >= target length, got {m} < {n}"
        )));
    }
    Ok((0..n).map(|i| exact_mean(&v[spec.block(i)])).collect())
}

/// Multi-block expansion; output length is the sum of `block_lens`.
pub fn expand_multi(v: &[f64], block_lens: &[usize]) -> Result<Vec<f64>> {
    let spec = MultiAlignmentSpec::new(v.len(), block_lens.to_vec())?;
    let mut out = Vec::with_capacity(spec.total_len());
    for (j, &x) in v.iter().enumerate() {
        out.extend(std::iter::repeat_n(x, spec.block(j).len()));
    }
    Ok(out)
}

/// Multi-block averaging onto an `n`-long grid; requires `max m_k >= n`.
pub fn average_multi(v: &[f64], n: usize, block_lens: &[usize]) -> Result<Vec<f64>> {
    let spec = MultiAlignmentSpec::new(n, block_lens.to_vec())?;
    if v.len() != spec.total_len() {
        return Err(Error::Dimension(format!(
            "input has length {} but blocks sum to {}",
            v.len(),
            spec.total_len()
        )));
    }
    let max_block = block_lens.iter().copied().max().unwrap_or(0);
    if max_block < n {
        return Err(Error::Dimension(format!(
            "multi-block averaging needs some block length >= {n}, largest is {max_block}"
        )));
    }
    Ok((0..n).map(|i| exact_mean(&v[spec.block(i)])).collect())
}

/// Merges target `y` (length `n0`) and one source `y1` (length `n1`) into a
/// vector of length `n0 + n1`: `y_j` sits at 1-based position
/// `ceil(j n1 / n0) + j`, source entries fill the remaining positions in order.
pub fn interleave_pair(y: &[f64], y1: &[f64]) -> Result<Vec<f64>> {
    let n0 = y.len();
    if n0 == 0 {
        return Err(Error::Empty);
    }
    let n1 = y1.len();
    let mut out = Vec::with_capacity(n0 + n1);
    for (j, &yj) in y.iter().enumerate() {
        out.extend_from_slice(&y1[ceil_div(j * n1, n0)..ceil_div((j + 1) * n1, n0)]);
        out.push(yj);
    }
    Ok(out)
}

/// Merges the target and `K >= 1` sources coordinate by coordinate: for each
/// target index `j` the output holds `y_j`, then the block of source 1 aligned
/// with `j`, then that of source 2, and so on.
///
/// The result is laid out so that `average_multi(_, n0, [n0, n_1, ..., n_K])`
/// averages `y_j` together with exactly the source entries aligned with `j`.
pub fn interleave_all<S: AsRef<[f64]>>(y: &[f64], sources: &[S]) -> Result<Vec<f64>> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument(
            "target-multisource interleaving needs at least one source".into(),
        ));
    }
    let n0 = y.len();
    if n0 == 0 {
        return Err(Error::Empty);
    }
    let total = n0 + sources.iter().map(|s| s.as_ref().len()).sum::<usize>();
    let mut out = Vec::with_capacity(total);
    for (j, &yj) in y.iter().enumerate() {
        out.push(yj);
        for s in sources {
            let s = s.as_ref();
            let nk = s.len();
            out.extend_from_slice(&s[ceil_div(j * nk, n0)..ceil_div((j + 1) * nk, n0)]);
        }
    }
    debug_assert_eq!(out.len(), total);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ceil_f(num: usize, den: usize) -> usize {
        // independent of `ceil_div`: repeated subtraction
        let mut q = 0;
        let mut r = num;
        while r > 0 {
            q += 1;
            r = r.saturating_sub(den);
        }
        q
    }

    /// Dense `m x n` expansion matrix straight from the indicator definition.
    fn dense_expansion(m: usize, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |r, c| {
            let (i, j) = (r + 1, c + 1);
            if ceil_f((j - 1) * m, n) < i && i <= ceil_f(j * m, n) {
                1.0
            } else {
                0.0
            }
        })
    }

    fn dense_averaging(n: usize, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |r, c| {
            let (i, j) = (r + 1, c + 1);
            let lo = ceil_f((i - 1) * m, n);
            let hi = ceil_f(i * m, n);
            if lo < j && j <= hi {
                1.0 / (hi - lo) as f64
            } else {
                0.0
            }
        })
    }

    #[test]
    fn expand_examples() {
        let (a, b, c) = (1.5, -2.0, 7.0);
        assert_eq!(expand(&[a, b], 4).unwrap(), vec![a, a, b, b]);
        assert_eq!(expand(&[a, b], 3).unwrap(), vec![a, a, b]);
        assert_eq!(expand(&[a, b, c], 3).unwrap(), vec![a, b, c]);
    }

    #[test]
    fn average_examples() {
        let y = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(average(&y, 2).unwrap(), vec![1.5, 6.0]);
        assert_eq!(average(&y[..3], 2).unwrap(), vec![1.5, 4.0]);
        assert_eq!(average(&y[..2], 2).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(average(&y[..1], 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn multi_examples() {
        let v = [3.0, -1.0];
        assert_eq!(expand_multi(&v, &[5]).unwrap(), expand(&v, 5).unwrap());
        assert_eq!(
            expand_multi(&v, &[2, 2]).unwrap(),
            vec![3.0, 3.0, -1.0, -1.0]
        );
        assert_eq!(expand_multi(&[4.0], &[1, 1, 1]).unwrap(), vec![4.0; 3]);

        let w = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(
            average_multi(&w, 3, &[5]).unwrap(),
            average(&w, 3).unwrap()
        );
        assert_eq!(
            average_multi(&w[..4], 2, &[2, 2]).unwrap(),
            vec![1.5, 3.5]
        );
        assert_eq!(average_multi(&w, 1, &[2, 3]).unwrap(), vec![3.0]);
        assert!(average_multi(&w, 4, &[2, 3]).is_err());
        assert!(average_multi(&w[..4], 1, &[2, 3]).is_err());
    }

    #[test]
    fn interleave_pair_examples() {
        let y = [10.0, 20.0];
        let y1 = [1.0, 2.0];
        assert_eq!(interleave_pair(&y, &y1).unwrap(), vec![1.0, 10.0, 2.0, 20.0]);
        assert_eq!(
            interleave_pair(&[10.0], &y1).unwrap(),
            vec![1.0, 2.0, 10.0]
        );
        assert_eq!(interleave_pair(&y, &[]).unwrap(), vec![10.0, 20.0]);
    }

    /// Literal index-shift definition of the pair interleaving.
    fn interleave_pair_literal(y: &[f64], y1: &[f64]) -> Vec<f64> {
        let (n0, n1) = (y.len(), y1.len());
        let targets: Vec<usize> = (1..=n0).map(|j| ceil_f(j * n1, n0) + j).collect();
        (1..=n0 + n1)
            .map(|i| match targets.iter().position(|&p| p == i) {
                Some(j) => y[j],
                None => {
                    let shift = targets.iter().filter(|&&p| p <= i).count();
                    y1[i - shift - 1]
                }
            })
            .collect()
    }

    #[test]
    fn interleave_pair_matches_literal_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n0 = rng.random_range(1..15);
            let n1 = rng.random_range(0..40);
            let y: Vec<f64> = (0..n0).map(|i| 100.0 + i as f64).collect();
            let y1: Vec<f64> = (0..n1).map(|i| -(i as f64) - 1.0).collect();
            assert_eq!(interleave_pair(&y, &y1).unwrap(), interleave_pair_literal(&y, &y1));
        }
    }

    #[test]
    fn interleave_all_examples() {
        assert_eq!(
            interleave_all(&[9.0], &[vec![1.0], vec![2.0]]).unwrap(),
            vec![9.0, 1.0, 2.0]
        );
        let out = interleave_all(&[10.0, 20.0], &[vec![1.0, 2.0]]).unwrap();
        assert_eq!(out, vec![10.0, 1.0, 20.0, 2.0]);
        assert!(interleave_all::<Vec<f64>>(&[1.0], &[]).is_err());
    }

    /// Positions from the block-offset formula with target first in each
    /// block: `J(j, k) = sum_{l<k} ceil(j n_l/n0) + sum_{l>=k} ceil((j-1) n_l/n0)`.
    #[test]
    fn interleave_all_matches_offset_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n0 = rng.random_range(1..10);
            let k = rng.random_range(1..4);
            let lens: Vec<usize> = (0..k).map(|_| rng.random_range(1..25)).collect();
            let mut all = vec![n0];
            all.extend(&lens);
            let y: Vec<f64> = (0..n0).map(|i| 1000.0 + i as f64).collect();
            let sources: Vec<Vec<f64>> = lens
                .iter()
                .enumerate()
                .map(|(s, &n)| (0..n).map(|i| (s * 100 + i) as f64).collect())
                .collect();
            let out = interleave_all(&y, &sources).unwrap();
            let jt = |j: usize, kk: usize| -> usize {
                (0..kk).map(|l| ceil_f(j * all[l], n0)).sum::<usize>()
                    + (kk..all.len()).map(|l| ceil_f((j - 1) * all[l], n0)).sum::<usize>()
            };
            for j in 1..=n0 {
                assert_eq!(out[jt(j, 1) - 1], y[j - 1]);
                for kk in 1..=k {
                    let src_off = ceil_f((j - 1) * all[kk], n0);
                    for i in jt(j, kk) + 1..=jt(j, kk + 1) {
                        assert_eq!(out[i - 1], sources[kk - 1][src_off + i - jt(j, kk) - 1]);
                    }
                }
            }
        }
    }

    #[test]
    fn index_code_matches_dense_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=12 {
            for m in n..=24 {
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                let w: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
                let p = dense_expansion(m, n);
                let pt = dense_averaging(n, m);
                let pv = &p * DMatrix::from_column_slice(n, 1, &v);
                let ptw = &pt * DMatrix::from_column_slice(m, 1, &w);
                assert_eq!(expand(&v, m).unwrap(), pv.as_slice());
                for (a, b) in average(&w, n).unwrap().iter().zip(ptw.iter()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gram_eigenvalues_are_sandwiched() {
        for n in 1..=12 {
            for m in n..=12 {
                let p = dense_expansion(m, n);
                let gram = p.transpose() * &p;
                let eig = gram.symmetric_eigenvalues();
                let hi = ceil_f(m, n) as f64;
                for &e in eig.iter().filter(|e| e.abs() > 1e-9) {
                    assert!(e >= hi - 1.0 - 1e-9 && e <= hi + 1e-9, "n={n} m={m} e={e}");
                }
            }
        }
    }

    #[test]
    fn averaging_contracts_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(1..50);
            let m = rng.random_range(n..400);
            let v: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lhs: f64 = average(&v, n).unwrap().iter().map(|x| x * x).sum();
            let rhs: f64 = 2.0 * v.iter().map(|x| x * x).sum::<f64>() / (m as f64 / n as f64);
            assert!(lhs <= rhs + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn left_inverse_exact(v in prop::collection::vec(-1e6f64..1e6, 1..40), extra in 0usize..200) {
            let m = v.len() + extra;
            prop_assert_eq!(average(&expand(&v, m).unwrap(), v.len()).unwrap(), v);
        }

        #[test]
        fn multi_left_inverse_exact(
            v in prop::collection::vec(-1e3f64..1e3, 1..20),
            blocks in prop::collection::vec(1usize..60, 1..5),
        ) {
            let n = v.len();
            let mut blocks = blocks;
            if blocks.iter().all(|&m| m < n) {
                blocks[0] = n;
            }
            let e = expand_multi(&v, &blocks).unwrap();
            prop_assert_eq!(e.len(), blocks.iter().sum::<usize>());
            prop_assert_eq!(average_multi(&e, n, &blocks).unwrap(), v);
        }

        #[test]
        fn blocks_partition_and_are_nonempty(n in 1usize..60, extra in 0usize..300) {
            let m = n + extra;
            let spec = AlignmentSpec::new(n, m).unwrap();
            let mut next = 0;
            for j in 0..n {
                let b = spec.block(j);
                prop_assert_eq!(b.start, next);
                prop_assert!(!b.is_empty());
                next = b.end;
            }
            prop_assert_eq!(next, m);
        }

        #[test]
        fn interleavings_are_permutations(
            y in prop::collection::vec(-100i32..100, 1..12),
            s1 in prop::collection::vec(-100i32..100, 0..30),
            s2 in prop::collection::vec(-100i32..100, 1..30),
        ) {
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let s1: Vec<f64> = s1.into_iter().map(f64::from).collect();
            let s2: Vec<f64> = s2.into_iter().map(f64::from).collect();
            let sorted = |mut v: Vec<f64>| { v.sort_by(f64::total_cmp); v };

            let pair = interleave_pair(&y, &s1).unwrap();
            prop_assert_eq!(sorted(pair), sorted([y.clone(), s1.clone()].concat()));

            let mut sources = vec![s2.clone()];
            if !s1.is_empty() { sources.push(s1.clone()); }
            let all = interleave_all(&y, &sources).unwrap();
            let mut concat = y.clone();
            for s in &sources { concat.extend(s); }
            prop_assert_eq!(sorted(all), sorted(concat));
        }
    }
}
