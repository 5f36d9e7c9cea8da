//! Contextual characters: four statistics of every primary character over
//! each cell's k-order contiguity ball (focal cell included).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::ContiguityGraph;
use crate::stats::{self, ColumnBins};
use crate::table::Table;

/// Default number of contiguity steps that make up a cell's context.
pub const DEFAULT_CONTEXT_ORDER: usize = 3;
/// Default number of global bins for Simpson's diversity.
pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextStat {
    /// Interquartile mean.
    Iqm,
    /// Interquartile range.
    Iqr,
    /// Interdecile Theil index.
    Idt,
    /// Simpson's diversity over global bins.
    Sdi,
}

impl ContextStat {
    pub const ALL: [ContextStat; 4] = [ContextStat::Iqm, ContextStat::Iqr, ContextStat::Idt, ContextStat::Sdi];

    pub fn suffix(self) -> &'static str {
        match self {
            ContextStat::Iqm => "IQM",
            ContextStat::Iqr => "IQR",
            ContextStat::Idt => "IDT",
            ContextStat::Sdi => "SDI",
        }
    }

    pub fn column_name(self, primary: &str) -> String {
        format!("{primary}_{}", self.suffix())
    }
}

/// Study-area bins for every primary column.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlobalBins {
    pub columns: Vec<String>,
    pub bins: Vec<ColumnBins>,
}

impl GlobalBins {
    /// Equal-count bins over the non-missing values of each column.
    pub fn from_table(table: &Table, n_bins: usize) -> Self {
        let bins = (0..table.cols())
            .map(|c| {
                let values: Vec<f64> = table.column(c).into_iter().flatten().collect();
                ColumnBins::equal_count(&values, n_bins)
            })
            .collect();
        Self { columns: table.columns().to_vec(), bins }
    }

    pub fn get(&self, column: &str) -> Option<&ColumnBins> {
        self.columns.iter().position(|c| c == column).map(|i| &self.bins[i])
    }
}

/// Non-missing values of `values` over `ball`.
pub fn gather_ball(ball: &[usize], values: &[Option<f64>]) -> Vec<f64> {
    ball.iter().filter_map(|&i| values[i]).collect()
}

/// Values of every cell within `k` steps of `cell` (itself included),
/// missing entries dropped. An empty vector signals an all-missing context.
pub fn gather_context(graph: &ContiguityGraph, cell: usize, k: usize, values: &[Option<f64>]) -> Result<Vec<f64>> {
    if values.len() != graph.len() {
        return Err(Error::DimensionMismatch { expected: graph.len(), found: values.len(), what: "value column" });
    }
    let ball = graph.k_order_neighbourhood(cell, k, None)?;
    Ok(gather_ball(&ball, values))
}

/// The four statistics of one context (values in any order).
pub fn context_statistics(values: &[f64], bins: &ColumnBins) -> [Option<f64>; 4] {
    let sorted = stats::sorted(values);
    [
        stats::interquartile_mean_sorted(&sorted),
        stats::interquartile_range_sorted(&sorted),
        stats::interdecile_theil_sorted(&sorted).map(|t| t.value),
        stats::simpson_diversity(&sorted, bins),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextOptions {
    /// Contiguity order of the context ball.
    pub order: usize,
    /// Optional per-cell block labels restricting traversal.
    pub blocks: Option<Vec<Option<usize>>>,
}

impl Default for ContextOptions {
    fn default() -> Self {
        Self { order: DEFAULT_CONTEXT_ORDER, blocks: None }
    }
}

/// Per-primary-column diagnostics of a context computation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContextColumnReport {
    pub primary: String,
    /// Primary column has zero variance, so dispersion columns are constant.
    pub constant: bool,
    /// Cells whose interdecile Theil needed a positivity shift.
    pub theil_shifted: usize,
    /// Cells with an all-missing context.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextOutput {
    pub matrix: Table,
    pub report: Vec<ContextColumnReport>,
}

/// Expands every primary column into `_IQM`, `_IQR`, `_IDT` and `_SDI`
/// columns, in that order, column by column.
pub fn compute_context_matrix(
    primary: &Table,
    graph: &ContiguityGraph,
    bins: &GlobalBins,
    options: &ContextOptions,
) -> Result<ContextOutput> {
    if primary.rows() != graph.len() {
        return Err(Error::DimensionMismatch { expected: graph.len(), found: primary.rows(), what: "table rows" });
    }
    let column_bins: Vec<&ColumnBins> = primary
        .columns()
        .iter()
        .map(|c| bins.get(c).ok_or_else(|| Error::InvalidArgument(format!("no bins for column {c}"))))
        .collect::<Result<_>>()?;
    let balls = graph.all_balls(options.order, options.blocks.as_deref())?;
    let columns: Vec<Vec<Option<f64>>> = (0..primary.cols()).map(|c| primary.column(c)).collect();

    let rows: Vec<(Vec<Option<f64>>, Vec<bool>)> = crate::par::map_range(graph.len(), |cell| {
        let mut out = Vec::with_capacity(columns.len() * 4);
        let mut shifted = Vec::with_capacity(columns.len());
        for (col, values) in columns.iter().enumerate() {
            let gathered = stats::sorted(&gather_ball(&balls[cell], values));
            let theil = stats::interdecile_theil_sorted(&gathered);
            out.push(stats::interquartile_mean_sorted(&gathered));
            out.push(stats::interquartile_range_sorted(&gathered));
            out.push(theil.map(|t| t.value));
            out.push(stats::simpson_diversity(&gathered, column_bins[col]));
            shifted.push(theil.is_some_and(|t| t.shifted));
        }
        (out, shifted)
    });

    let names: Vec<String> =
        primary.columns().iter().flat_map(|p| ContextStat::ALL.iter().map(move |s| s.column_name(p))).collect();
    let mut matrix = Table::new(names, graph.len());
    for (r, (values, _)) in rows.iter().enumerate() {
        for (c, v) in values.iter().enumerate() {
            matrix.set(r, c, *v);
        }
    }
    let report = primary
        .columns()
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let present: Vec<f64> = columns[c].iter().flatten().copied().collect();
            let constant = present.windows(2).all(|w| w[0] == w[1]);
            ContextColumnReport {
                primary: name.clone(),
                constant,
                theil_shifted: rows.iter().filter(|(_, s)| s[c]).count(),
                missing: (0..graph.len()).filter(|&r| matrix.get(r, c * 4).is_none()).count(),
            }
        })
        .collect();
    Ok(ContextOutput { matrix, report })
}
