//! Association between cluster labels and categorical reference layers.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln, ln_gamma, sqrt};

/// Name of the column collecting rare categories.
pub const OTHER: &str = "Other";

/// Counts of cells per (cluster, category).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    /// Row-major `rows x columns`.
    pub counts: Vec<u64>,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, column_labels: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        let expected = row_labels.len() * column_labels.len();
        if counts.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: counts.len(), what: "contingency cells" });
        }
        Ok(Self { row_labels, column_labels, counts })
    }

    /// Table with numbered labels, for tests and ad-hoc use.
    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, found: bad.len(), what: "row length" });
        }
        Self::new(
            (0..rows.len()).map(|i| i.to_string()).collect(),
            (0..cols).map(|j| j.to_string()).collect(),
            rows.concat(),
        )
    }

    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.column_labels.len()
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.cols() + c]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.rows()).map(|r| (0..self.cols()).map(|c| self.get(r, c)).sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.cols()).map(|c| (0..self.rows()).map(|r| self.get(r, c)).sum()).collect()
    }
}

/// Result of [`cross_tabulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTabulation {
    pub table: ContingencyTable,
    /// Cells without a category.
    pub uncategorised: usize,
    /// Categories folded into [`OTHER`].
    pub folded: Vec<String>,
}

/// Counts cells per (label, category). Categories holding less than
/// `min_share` of the categorised cells are merged into [`OTHER`], which
/// comes last; other columns are sorted by name. Rows and columns left
/// empty are dropped.
pub fn cross_tabulate(labels: &[usize], categories: &[Option<String>], min_share: f64) -> Result<CrossTabulation> {
    if labels.len() != categories.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: categories.len(),
            what: "category count",
        });
    }
    let pairs: Vec<(usize, &str)> =
        labels.iter().zip(categories).filter_map(|(l, c)| c.as_deref().map(|c| (*l, c))).collect();
    let uncategorised = labels.len() - pairs.len();
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no cell has both a label and a category"));
    }
    let mut shares: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, c) in &pairs {
        *shares.entry(c).or_default() += 1;
    }
    let n = pairs.len() as f64;
    let folded: Vec<String> = shares
        .iter()
        .filter(|(name, &count)| (count as f64) / n < min_share || **name == OTHER)
        .map(|(name, _)| name.to_string())
        .collect();
    let mut columns: Vec<String> =
        shares.keys().filter(|k| !folded.iter().any(|f| f == *k)).map(|k| k.to_string()).collect();
    if !folded.is_empty() {
        columns.push(OTHER.into());
    }
    let max_label = pairs.iter().map(|(l, _)| *l).max().unwrap_or(0);
    let mut counts = vec![0u64; (max_label + 1) * columns.len()];
    for (l, c) in &pairs {
        let col = columns.iter().position(|k| k == c).unwrap_or(columns.len() - 1);
        counts[l * columns.len() + col] += 1;
    }
    let full = ContingencyTable::new((0..=max_label).map(|l| l.to_string()).collect(), columns, counts)?;
    let folded = folded.into_iter().filter(|f| f != OTHER).collect();
    Ok(CrossTabulation { table: drop_empty(&full), uncategorised, folded })
}

fn drop_empty(t: &ContingencyTable) -> ContingencyTable {
    let rows: Vec<usize> = t.row_sums().iter().enumerate().filter(|(_, s)| **s > 0).map(|(i, _)| i).collect();
    let cols: Vec<usize> = t.column_sums().iter().enumerate().filter(|(_, s)| **s > 0).map(|(i, _)| i).collect();
    let counts = rows.iter().flat_map(|&r| cols.iter().map(move |&c| t.get(r, c))).collect();
    ContingencyTable {
        row_labels: rows.iter().map(|&r| t.row_labels[r].clone()).collect(),
        column_labels: cols.iter().map(|&c| t.column_labels[c].clone()).collect(),
        counts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChiSquared {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-squared test of independence. Cells with zero expected
/// count are skipped. With `yates`, tables with one degree of freedom use
/// the continuity correction.
pub fn chi_squared(t: &ContingencyTable, yates: bool) -> Result<ChiSquared> {
    let total = t.total();
    if total == 0 {
        return Err(Error::EmptyInput("contingency table has no counts"));
    }
    if t.rows() < 2 || t.cols() < 2 {
        return Ok(ChiSquared { statistic: 0.0, dof: 0, p_value: 1.0 });
    }
    let dof = (t.rows() - 1) * (t.cols() - 1);
    let rs = t.row_sums();
    let cs = t.column_sums();
    let n = total as f64;
    let correct = yates && dof == 1;
    let mut stat = 0.0;
    for (r, &rsum) in rs.iter().enumerate() {
        for (c, &csum) in cs.iter().enumerate() {
            let e = rsum as f64 * csum as f64 / n;
            if e > 0.0 {
                let mut diff = (t.get(r, c) as f64 - e).abs();
                if correct {
                    diff = (diff - 0.5).max(0.0);
                }
                stat += diff * diff / e;
            }
        }
    }
    Ok(ChiSquared { statistic: stat, dof, p_value: chi_squared_sf(stat, dof) })
}

/// Upper tail probability of the chi-squared distribution.
pub fn chi_squared_sf(x: f64, dof: usize) -> f64 {
    if dof == 0 || x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(dof as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Regularized upper incomplete gamma function `Q(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefactor = a * ln(x) - x - ln_gamma(a);
    if x < a + 1.0 {
        // Series for P(a, x).
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        1.0 - sum * exp(log_prefactor)
    } else {
        // Lentz continued fraction for Q(a, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        exp(log_prefactor) * h
    }
}

/// Cramér's V, clamped to `[0, 1]`. Tables with fewer than two rows or
/// columns give 0.
pub fn cramers_v(t: &ContingencyTable) -> Result<f64> {
    if t.rows() < 2 || t.cols() < 2 {
        return Ok(0.0);
    }
    let chi = chi_squared(t, false)?;
    let m = (t.rows().min(t.cols()) - 1) as f64;
    Ok(sqrt(chi.statistic / (t.total() as f64 * m)).clamp(0.0, 1.0))
}

/// Bias-corrected Cramér's V (Bergsma's correction).
pub fn cramers_v_bias_corrected(t: &ContingencyTable) -> Result<f64> {
    if t.rows() < 2 || t.cols() < 2 {
        return Ok(0.0);
    }
    let chi = chi_squared(t, false)?;
    let n = t.total() as f64;
    if n <= 1.0 {
        return Ok(0.0);
    }
    let (r, c) = (t.rows() as f64, t.cols() as f64);
    let phi2 = (chi.statistic / n - (r - 1.0) * (c - 1.0) / (n - 1.0)).max(0.0);
    let r_c = r - (r - 1.0) * (r - 1.0) / (n - 1.0);
    let c_c = c - (c - 1.0) * (c - 1.0) / (n - 1.0);
    let m = (r_c - 1.0).min(c_c - 1.0);
    if m <= 0.0 {
        return Ok(0.0);
    }
    Ok(sqrt(phi2 / m).clamp(0.0, 1.0))
}

/// Full report for one reference layer.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Association {
    pub chi_squared: ChiSquared,
    pub cramers_v: f64,
    pub bias_corrected: bool,
    pub n: u64,
}

pub fn associate(t: &ContingencyTable, yates: bool, bias_corrected: bool) -> Result<Association> {
    let chi = chi_squared(t, yates)?;
    let v = if bias_corrected { cramers_v_bias_corrected(t)? } else { cramers_v(t)? };
    Ok(Association { chi_squared: chi, cramers_v: v, bias_corrected, n: t.total() })
}

impl core::fmt::Display for ContingencyTable {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "label")?;
        for c in &self.column_labels {
            write!(f, ",{c}")?;
        }
        writeln!(f)?;
        for (r, name) in self.row_labels.iter().enumerate() {
            write!(f, "{name}")?;
            for c in 0..self.cols() {
                write!(f, ",{}", self.get(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[u64]]) -> ContingencyTable {
        ContingencyTable::from_counts(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn proportional_rows_are_independent() {
        let chi = chi_squared(&table(&[&[2, 4], &[1, 2]]), false).unwrap();
        assert!(chi.statistic.abs() < 1e-12);
        assert!((chi.p_value - 1.0).abs() < 1e-9);
        assert_eq!(cramers_v(&table(&[&[2, 4], &[1, 2]])).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_table() {
        let t = table(&[&[5, 0], &[0, 5]]);
        let chi = chi_squared(&t, false).unwrap();
        assert!((chi.statistic - 10.0).abs() < 1e-12);
        assert_eq!(chi.dof, 1);
        assert!((cramers_v(&t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn five_percent_critical_value() {
        assert!((chi_squared_sf(3.84, 1) - 0.05).abs() < 5e-4);
        // scipy.stats.chi2.sf(3.84, 1) = 0.05004352124870519
        assert!((chi_squared_sf(3.84, 1) - 0.05004352124870519).abs() < 1e-10);
        // scipy.stats.chi2.sf(20.0, 7) and (0.5, 10)
        assert!((chi_squared_sf(20.0, 7) - 0.005569683072945574).abs() < 1e-12);
        assert!((chi_squared_sf(0.5, 10) - 0.999993388289439).abs() < 1e-12);
    }

    #[test]
    fn single_row_has_no_dof() {
        let chi = chi_squared(&table(&[&[3, 4, 5]]), false).unwrap();
        assert_eq!((chi.statistic, chi.dof, chi.p_value), (0.0, 0, 1.0));
    }

    #[test]
    fn yates_shrinks_statistic() {
        let t = table(&[&[5, 0], &[0, 5]]);
        let plain = chi_squared(&t, false).unwrap().statistic;
        let corrected = chi_squared(&t, true).unwrap().statistic;
        // (2.5 - 0.5)^2 / 2.5 * 4
        assert!((corrected - 6.4).abs() < 1e-12);
        assert!(corrected < plain);
    }

    #[test]
    fn rare_categories_fold_into_other() {
        let mut labels = Vec::new();
        let mut cats = Vec::new();
        for i in 0..199 {
            labels.push(i % 2);
            cats.push(Some(if i % 2 == 0 { "a".to_string() } else { "b".to_string() }));
        }
        labels.push(0);
        cats.push(Some("rare".into()));
        labels.push(1);
        cats.push(None);
        let x = cross_tabulate(&labels, &cats, 0.01).unwrap();
        assert_eq!(x.table.column_labels, vec!["a", "b", OTHER]);
        assert_eq!(x.folded, vec!["rare".to_string()]);
        assert_eq!(x.uncategorised, 1);
        assert_eq!(x.table.total(), 200);
        assert_eq!(x.table.get(0, 2), 1);
    }

    #[test]
    fn empty_rows_dropped() {
        let x = cross_tabulate(&[0, 2, 2], &[Some("a".into()), Some("a".into()), Some("b".into())], 0.0).unwrap();
        assert_eq!(x.table.row_labels, vec!["0", "2"]);
    }

    #[test]
    fn no_overlap_is_an_error() {
        assert!(cross_tabulate(&[0, 1], &[None, None], 0.01).is_err());
    }
}
