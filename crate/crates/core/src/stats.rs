//! Order statistics, inequality and diversity indices used for contextual
//! characters.
//!
//! Quantiles use linear interpolation between order statistics
//! (Hyndman & Fan type 7): for sorted `x` of length `n` the `p`-quantile is
//! `x[h] + (h - floor(h)) * (x[h+1] - x[h])` with `h = (n - 1) p`.

use alloc::vec::Vec;

use crate::graph::ContiguityGraph;
use crate::math::{floor, ln};

/// Name of the quantile convention, recorded in output metadata.
pub const QUANTILE_METHOD: &str = "linear interpolation (type 7)";

/// Sorts a copy of `values` ascending.
pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Type-7 quantile of already sorted values. `None` on empty input.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = floor(h) as usize;
    if lo + 1 >= n {
        return Some(sorted[n - 1]);
    }
    Some(sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo]))
}

pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    quantile_sorted(&sorted(values), p)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Mean of the values lying between the first and third quartile
/// (inclusive). Falls back to the plain mean when no value qualifies.
pub fn interquartile_mean_sorted(sorted: &[f64]) -> Option<f64> {
    let q1 = quantile_sorted(sorted, 0.25)?;
    let q3 = quantile_sorted(sorted, 0.75)?;
    let (sum, count) = sorted.iter().filter(|x| **x >= q1 && **x <= q3).fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        mean(sorted)
    } else {
        Some(sum / count as f64)
    }
}

pub fn interquartile_mean(values: &[f64]) -> Option<f64> {
    interquartile_mean_sorted(&sorted(values))
}

/// `Q3 - Q1`.
pub fn interquartile_range_sorted(sorted: &[f64]) -> Option<f64> {
    Some(quantile_sorted(sorted, 0.75)? - quantile_sorted(sorted, 0.25)?)
}

pub fn interquartile_range(values: &[f64]) -> Option<f64> {
    interquartile_range_sorted(&sorted(values))
}

/// Theil index `sum (x_i / S) ln(N x_i / S)` of non-negative values.
/// Zero terms contribute nothing; an all-zero list has index 0.
pub fn theil(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        return Some(0.0);
    }
    let n = values.len() as f64;
    let t = values
        .iter()
        .filter(|x| **x > 0.0)
        .map(|x| {
            let share = x / total;
            share * ln(n * share)
        })
        .sum::<f64>();
    Some(t.max(0.0))
}

/// Result of [`interdecile_theil`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheilOutcome {
    pub value: f64,
    /// Whether non-positive values forced a shift before evaluation.
    pub shifted: bool,
}

/// Theil index after winsorising to the first and ninth decile.
///
/// Non-positive values left after clipping are shifted by
/// `|min| + 1e-9 * range` so that every share is positive.
pub fn interdecile_theil_sorted(sorted: &[f64]) -> Option<TheilOutcome> {
    let d1 = quantile_sorted(sorted, 0.1)?;
    let d9 = quantile_sorted(sorted, 0.9)?;
    let mut clipped: Vec<f64> = sorted.iter().map(|x| x.clamp(d1, d9)).collect();
    let min = clipped.iter().copied().fold(f64::INFINITY, f64::min);
    let max = clipped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Some(TheilOutcome { value: 0.0, shifted: false });
    }
    let mut shifted = false;
    if min <= 0.0 {
        let shift = -min + 1e-9 * (max - min);
        clipped.iter_mut().for_each(|x| *x += shift);
        shifted = true;
    }
    Some(TheilOutcome { value: theil(&clipped)?, shifted })
}

pub fn interdecile_theil(values: &[f64]) -> Option<TheilOutcome> {
    interdecile_theil_sorted(&sorted(values))
}

/// Bin edges of one character over the whole study area.
///
/// `edges` is strictly increasing; the first and last entries are the
/// observed minimum and maximum. A constant column has a single edge and one
/// bin.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnBins {
    pub edges: Vec<f64>,
}

impl ColumnBins {
    /// Equal-count bins: edges at the `i / n_bins` quantiles, duplicates
    /// removed.
    pub fn equal_count(values: &[f64], n_bins: usize) -> Self {
        let sorted = sorted(values);
        let n_bins = n_bins.max(1);
        let mut edges: Vec<f64> = Vec::with_capacity(n_bins + 1);
        for i in 0..=n_bins {
            if let Some(q) = quantile_sorted(&sorted, i as f64 / n_bins as f64) {
                if edges.last().is_none_or(|last| q > *last) {
                    edges.push(q);
                }
            }
        }
        Self { edges }
    }

    /// Number of bins (richness).
    pub fn richness(&self) -> usize {
        self.edges.len().saturating_sub(1).max(1)
    }

    /// Bin index of `x`: bins are `[e_i, e_{i+1})`, the last one closed.
    /// Values outside the observed range go to the nearest end bin.
    pub fn bin_of(&self, x: f64) -> usize {
        if self.edges.len() <= 2 {
            return 0;
        }
        let interior = &self.edges[1..self.edges.len() - 1];
        interior.partition_point(|e| *e <= x)
    }
}

/// Simpson's diversity `sum n_i (n_i - 1) / (N (N - 1))` of the values
/// classified by `bins`. A single value has diversity 1.
pub fn simpson_diversity(values: &[f64], bins: &ColumnBins) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    if n == 1 {
        return Some(1.0);
    }
    let mut counts = alloc::vec![0usize; bins.richness()];
    for v in values {
        counts[bins.bin_of(*v)] += 1;
    }
    let same: f64 = counts.iter().map(|c| (c * c.saturating_sub(1)) as f64).sum();
    Some(same / (n as f64 * (n - 1) as f64))
}

/// Moran's I with binary contiguity weights. `None` when the graph has no
/// edges or the values have no variance.
pub fn morans_i(values: &[f64], graph: &ContiguityGraph) -> Option<f64> {
    let n = values.len();
    if n != graph.len() || n == 0 {
        return None;
    }
    let m = mean(values)?;
    let z: Vec<f64> = values.iter().map(|v| v - m).collect();
    let denom: f64 = z.iter().map(|x| x * x).sum();
    let weight_sum: usize = (0..n).map(|i| graph.degree(i)).sum();
    if denom == 0.0 || weight_sum == 0 {
        return None;
    }
    let cross: f64 = (0..n).map(|i| z[i] * graph.neighbors(i).iter().map(|&j| z[j]).sum::<f64>()).sum();
    Some(n as f64 / weight_sum as f64 * cross / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn quartiles_of_one_to_eight() {
        let v: Vec<f64> = (1..=8).map(f64::from).collect();
        assert!(close(quantile(&v, 0.25).unwrap(), 2.75, 1e-12));
        assert!(close(quantile(&v, 0.75).unwrap(), 6.25, 1e-12));
        assert!(close(interquartile_mean(&v).unwrap(), 4.5, 1e-12));
        assert!(close(interquartile_range(&v).unwrap(), 3.5, 1e-12));
    }

    #[test]
    fn constant_list() {
        let v = [5.0, 5.0, 5.0];
        assert_eq!(interquartile_mean(&v), Some(5.0));
        assert_eq!(interquartile_range(&v), Some(0.0));
        assert_eq!(interdecile_theil(&v).unwrap().value, 0.0);
    }

    #[test]
    fn empty_lists_are_missing() {
        assert_eq!(interquartile_mean(&[]), None);
        assert_eq!(interquartile_range(&[]), None);
        assert_eq!(interdecile_theil(&[]), None);
        assert_eq!(simpson_diversity(&[], &ColumnBins { edges: vec![0.0, 1.0] }), None);
    }

    #[test]
    fn raw_theil_of_one_one_two() {
        let expected = 0.5 * libm::log(0.75) + 0.5 * libm::log(1.5);
        assert!(close(theil(&[1.0, 1.0, 2.0]).unwrap(), expected, 1e-15));
        assert!(close(expected, 0.0589, 5e-5));
    }

    #[test]
    fn theil_of_zeros_is_zero() {
        assert_eq!(theil(&[0.0, 0.0]), Some(0.0));
    }

    #[test]
    fn interdecile_theil_shifts_nonpositive_values() {
        let out = interdecile_theil(&[-3.0, -1.0, 0.0, 2.0, 4.0, 9.0]).unwrap();
        assert!(out.shifted);
        assert!(out.value >= 0.0);
        let positive = interdecile_theil(&[1.0, 2.0, 3.0]).unwrap();
        assert!(!positive.shifted);
    }

    #[test]
    fn simpson_counts_three_two_one() {
        let bins = ColumnBins { edges: vec![0.0, 1.0, 2.0, 3.0] };
        let v = [0.5, 0.5, 0.5, 1.5, 1.5, 2.5];
        assert!(close(simpson_diversity(&v, &bins).unwrap(), 8.0 / 30.0, 1e-15));
    }

    #[test]
    fn simpson_extremes() {
        let bins = ColumnBins { edges: vec![0.0, 1.0, 2.0, 3.0] };
        assert_eq!(simpson_diversity(&[0.1, 0.2, 0.3], &bins), Some(1.0));
        assert_eq!(simpson_diversity(&[0.5, 1.5, 2.5], &bins), Some(0.0));
        assert_eq!(simpson_diversity(&[7.0], &bins), Some(1.0));
    }

    #[test]
    fn equal_count_bins_are_strictly_increasing() {
        let v: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let bins = ColumnBins::equal_count(&v, 10);
        assert!(bins.edges.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(bins.edges[0], 0.0);
        assert_eq!(*bins.edges.last().unwrap(), 6.0);
        let constant = ColumnBins::equal_count(&[2.0; 5], 10);
        assert_eq!(constant.edges, vec![2.0]);
        assert_eq!(constant.richness(), 1);
    }

    #[test]
    fn bin_edges_are_half_open() {
        let bins = ColumnBins { edges: vec![0.0, 1.0, 2.0, 3.0] };
        assert_eq!(bins.bin_of(0.0), 0);
        assert_eq!(bins.bin_of(1.0), 1);
        assert_eq!(bins.bin_of(3.0), 2);
        assert_eq!(bins.bin_of(-4.0), 0);
    }
}
