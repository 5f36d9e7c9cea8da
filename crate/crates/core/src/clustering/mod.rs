//! Detection of urban form types: imputation, standardisation, optional PCA
//! whitening, Gaussian mixtures fitted by EM and BIC-based model selection.

mod gmm;
mod prep;
mod select;

pub use gmm::{assign_labels, bic, fit_gmm, parameter_count, CovarianceType, GmmModel, GmmOptions, Labeling};
pub use prep::{impute_median, standardize, ColumnImputation, Imputation, Pca, Standardization};
pub use select::{elbow, select_k, BicPoint, Elbow, Selection};

use alloc::vec::Vec;

use crate::math::floor;

/// Adjusted Rand index between two labelings of the same items.
///
/// Returns 1 for identical partitions (up to relabeling) and about 0 for
/// independent ones. Two single-cluster partitions compare as 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = alloc::vec![0u64; ka * kb];
    for (x, y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
    }
    let pairs = |c: u64| (c * c.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().map(|&c| pairs(c)).sum();
    let rows: Vec<u64> = (0..ka).map(|i| table[i * kb..(i + 1) * kb].iter().sum()).collect();
    let cols: Vec<u64> = (0..kb).map(|j| (0..ka).map(|i| table[i * kb + j]).sum()).collect();
    let sum_rows: f64 = rows.iter().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(n as u64);
    let expected = sum_rows * sum_cols / total;
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Relabels so that clusters are numbered by first appearance.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|l| match map.iter().find(|(from, _)| from == l) {
            Some((_, to)) => *to,
            None => {
                let next = map.len();
                map.push((*l, next));
                next
            }
        })
        .collect()
}

/// Largest component count a full-covariance mixture can support on `rows`
/// points of dimension `dims` (each component needs `dims + 1` points on
/// average to have a non-singular scatter matrix).
pub fn supported_components(rows: usize, dims: usize, covariance: CovarianceType) -> usize {
    let per = match covariance {
        CovarianceType::Full => dims + 1,
        CovarianceType::Diagonal => 2,
    };
    floor(rows as f64 / per as f64).max(1.0) as usize
}
