use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::symmetric_eigen;
use crate::math::sqrt;
use crate::stats;
use crate::table::{Matrix, Table};

/// Columns whose standard deviation is below this share of their largest
/// magnitude are treated as constant: the spread is rounding noise.
pub const RELATIVE_NOISE: f64 = 1e-12;

/// Per-column z-score parameters. Population standard deviation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Zero-variance columns (up to [`RELATIVE_NOISE`]), mapped to 0.
    pub constant: Vec<bool>,
}

impl Standardization {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut means = Vec::with_capacity(x.cols());
        let mut stds = Vec::with_capacity(x.cols());
        let mut constant = Vec::with_capacity(x.cols());
        for c in 0..x.cols() {
            let col = x.column(c);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let is_constant = col.windows(2).all(|w| w[0] == w[1]) || !(sqrt(var) > RELATIVE_NOISE * scale);
            means.push(mean);
            stds.push(if is_constant { 0.0 } else { sqrt(var) });
            constant.push(is_constant);
        }
        Self { means, stds, constant }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut z = x.clone();
        for r in 0..x.rows() {
            for (c, v) in z.row_mut(r).iter_mut().enumerate() {
                *v = if self.constant[c] { 0.0 } else { (*v - self.means[c]) / self.stds[c] };
            }
        }
        z
    }

    /// Maps standardised values back; constant columns return their mean.
    pub fn invert(&self, z: &Matrix) -> Matrix {
        let mut x = z.clone();
        for r in 0..z.rows() {
            for (c, v) in x.row_mut(r).iter_mut().enumerate() {
                *v = if self.constant[c] { self.means[c] } else { *v * self.stds[c] + self.means[c] };
            }
        }
        x
    }
}

/// Per-column z-scores; zero-variance columns become all zeros and are
/// flagged in the returned parameters.
pub fn standardize(x: &Matrix) -> (Matrix, Standardization) {
    let params = Standardization::fit(x);
    (params.apply(x), params)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnImputation {
    pub column: String,
    pub missing_rate: f64,
    /// `None` when the column was dropped.
    pub median: Option<f64>,
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Imputation {
    pub matrix: Matrix,
    /// Names of the kept columns, in matrix order.
    pub columns: Vec<String>,
    pub report: Vec<ColumnImputation>,
}

/// Replaces missing values with the column median. Columns missing in more
/// than `max_missing_rate` of rows (or entirely) are dropped.
pub fn impute_median(table: &Table, max_missing_rate: f64) -> Imputation {
    let rows = table.rows();
    let mut kept: Vec<usize> = Vec::new();
    let mut medians: Vec<f64> = Vec::new();
    let mut report = Vec::with_capacity(table.cols());
    for c in 0..table.cols() {
        let present: Vec<f64> = table.column(c).into_iter().flatten().collect();
        let missing_rate = if rows == 0 { 0.0 } else { 1.0 - present.len() as f64 / rows as f64 };
        let median = stats::median(&present);
        let dropped = median.is_none() || missing_rate > max_missing_rate;
        report.push(ColumnImputation {
            column: table.columns()[c].clone(),
            missing_rate,
            median: if dropped { None } else { median },
            dropped,
        });
        if !dropped {
            kept.push(c);
            medians.push(median.unwrap_or(0.0));
        }
    }
    let mut matrix = Matrix::zeros(rows, kept.len());
    for r in 0..rows {
        for (k, &c) in kept.iter().enumerate() {
            matrix.set(r, k, table.get(r, c).unwrap_or(medians[k]));
        }
    }
    Imputation { matrix, columns: kept.iter().map(|&c| table.columns()[c].clone()).collect(), report }
}

/// Principal components of centred data, whitened to unit variance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pca {
    pub means: Vec<f64>,
    /// Unit loading vectors, one per retained component.
    pub components: Vec<Vec<f64>>,
    /// Square roots of the retained eigenvalues.
    pub scales: Vec<f64>,
    pub explained_variance_ratio: f64,
}

impl Pca {
    /// Keeps the leading components until `variance_fraction` of the total
    /// variance is explained (at least one).
    pub fn fit(x: &Matrix, variance_fraction: f64) -> Self {
        let (n, d) = (x.rows(), x.cols());
        let nf = n.max(1) as f64;
        let means: Vec<f64> = (0..d).map(|c| x.column(c).iter().sum::<f64>() / nf).collect();
        let mut cov = alloc::vec![0.0; d * d];
        for r in 0..n {
            let row = x.row(r);
            for i in 0..d {
                let di = row[i] - means[i];
                for j in i..d {
                    cov[i * d + j] += di * (row[j] - means[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] /= nf;
                cov[j * d + i] = cov[i * d + j];
            }
        }
        let (values, vectors) = symmetric_eigen(&cov, d);
        let total: f64 = values.iter().filter(|v| **v > 0.0).sum();
        let floor = values.first().copied().unwrap_or(0.0) * 1e-12;
        let mut components = Vec::new();
        let mut scales = Vec::new();
        let mut acc = 0.0;
        for (value, vector) in values.iter().zip(vectors) {
            if *value <= floor || *value <= 0.0 {
                break;
            }
            components.push(vector);
            scales.push(sqrt(*value));
            acc += value;
            if total > 0.0 && acc / total >= variance_fraction {
                break;
            }
        }
        if components.is_empty() {
            // no variance at all: a single zero-valued axis
            let mut axis = alloc::vec![0.0; d];
            if d > 0 {
                axis[0] = 1.0;
            }
            components.push(axis);
            scales.push(1.0);
        }
        let explained_variance_ratio = if total > 0.0 { acc / total } else { 1.0 };
        Self { means, components, scales, explained_variance_ratio }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let k = self.components.len();
        let mut out = Matrix::zeros(x.rows(), k);
        for r in 0..x.rows() {
            let row = x.row(r);
            for (c, (axis, scale)) in self.components.iter().zip(&self.scales).enumerate() {
                let dot: f64 = row.iter().zip(axis).zip(&self.means).map(|((v, a), m)| (v - m) * a).sum();
                out.set(r, c, dot / scale);
            }
        }
        out
    }
}
