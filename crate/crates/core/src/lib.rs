//! Deterministic generation and scoring of diagnostic referring-expression datasets.
//!
//! The pipeline runs scene sampling, rasterization, program sampling with text realization,
//! and finally scoring of externally produced predictions.

pub mod config;
pub mod error;
pub mod eval;
pub mod exec;
pub mod generate;
pub mod io;
pub mod mask;
pub mod program;
pub mod render;
pub mod scene;
pub mod templates;
pub mod vocab;

pub use error::{Error, ErrorClass, Result};
