//! Column-named tables with missing values, and dense row-major matrices.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Cells × characters table. `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Table {
    columns: Vec<String>,
    rows: usize,
    values: Vec<Option<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: usize) -> Self {
        let n = columns.len() * rows;
        Self { columns, rows, values: vec![None; n] }
    }

    /// Builds a table from per-column value vectors.
    pub fn from_columns(columns: Vec<(String, Vec<Option<f64>>)>) -> Result<Self> {
        let rows = columns.first().map_or(0, |(_, v)| v.len());
        let mut table = Table::new(columns.iter().map(|(n, _)| n.clone()).collect(), rows);
        for (c, (_, values)) in columns.into_iter().enumerate() {
            if values.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, found: values.len(), what: "column length" });
            }
            for (r, v) in values.into_iter().enumerate() {
                table.set(r, c, v);
            }
        }
        Ok(table)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.columns.len() + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Option<f64>) {
        let cols = self.columns.len();
        // non-finite numbers are treated as missing so NaN never travels on
        self.values[row * cols + col] = value.filter(|v| v.is_finite());
    }

    pub fn row(&self, row: usize) -> &[Option<f64>] {
        let cols = self.columns.len();
        &self.values[row * cols..(row + 1) * cols]
    }

    pub fn column(&self, col: usize) -> Vec<Option<f64>> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn missing_count(&self, col: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, col).is_none()).count()
    }
}

/// Dense row-major matrix of finite values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len(), what: "matrix data" });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len(), what: "row length" });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }
}
