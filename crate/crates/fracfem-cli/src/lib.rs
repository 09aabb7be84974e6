//! Study driver for the extension-based fractional Laplacian solver:
//! configuration parsing, refinement studies, cross-method comparison,
//! and special-function self tests. The `fracfem` binary is a thin
//! wrapper over this crate.

pub mod config;
pub mod study;
