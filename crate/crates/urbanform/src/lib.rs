//! Urban form taxonomy from building footprints and street centrelines.

pub mod characters;
pub mod config;
pub mod contiguity;
pub mod enclosures;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod io;
pub mod network;
pub mod pipeline;
pub mod synthetic;
pub mod tessellation;

pub use error::{Error, Result};
pub use urbanform_core as core;
