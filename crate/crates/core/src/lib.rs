//! Numerical core of the urban form taxonomy engine.
//!
//! Everything here works on plain slices, dense matrices and adjacency lists
//! and needs nothing beyond `alloc`. Geometry, file formats and the command
//! line live in the `urbanform` crate.
//!
//! Pipeline order:
//!
//! 1. [`graph`]: queen contiguity and k-order balls over tessellation cells.
//! 2. [`context`]: IQM, IQR, interdecile Theil and Simpson diversity of every
//!    primary character over each cell's contiguity ball.
//! 3. [`clustering`]: imputation, standardisation, Gaussian mixtures fitted by
//!    EM, BIC elbow selection and per-cell labels.
//! 4. [`taxonomy`]: cluster centroids, Ward linkage, cophenetic distances,
//!    dendrogram cuts and Newick export.
//! 5. [`validation`]: contingency tables, Pearson chi-squared and Cramér's V.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod clustering;
pub mod context;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod math;
mod par;
pub mod rng;
pub mod stats;
pub mod table;
pub mod taxonomy;
pub mod validation;

pub use error::{Error, Result};
pub use graph::ContiguityGraph;
pub use table::{Matrix, Table};
