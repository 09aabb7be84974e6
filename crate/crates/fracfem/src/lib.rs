//! Solver core for spectral fractional powers of symmetric second-order
//! elliptic operators on (0,1) and (0,1)².
//!
//! The fractional problem is localized through its harmonic extension to the
//! semi-infinite cylinder Ω×(0,∞) with the degenerate weight y^α, α = 1−2s.
//! The cylinder is truncated at a height chosen from the exponential decay of
//! the extension, and discretized with tensor-product Q1 elements on meshes
//! that are quasi-uniform in Ω and (optionally) power-law graded toward y = 0.
//! Exact reference solutions are available through the eigenexpansion of the
//! Dirichlet Laplacian and one-dimensional Bessel-type profiles, which is what
//! the error functionals in [`norms`] measure against.
//!
//! The crate is `no_std` (with `alloc`); float math goes through `libm`.
//! File formats, timing, and the CLI live in the companion crate.

#![no_std]
// Reference constants keep every published digit; `!(x > 0.0)` guards are
// deliberate NaN catches; indexed loops mirror the stencil arithmetic.
#![allow(clippy::excessive_precision)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod linalg;
pub mod mesh;
pub mod mtt;
pub mod norms;
pub mod quadrature;
pub mod specfun;
pub mod spectral;

use core::fmt;

/// Error type shared by the solver core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    Domain(&'static str),
    /// Structurally invalid size, range, or option combination.
    Config(&'static str),
    /// Operator coefficient not positive definite at a quadrature point of
    /// the given cell.
    NonSpd { cell: usize },
    /// The requested quantity is singular at the evaluation point.
    Singular(&'static str),
    /// A dense factorization or eigensolve failed.
    LinAlg(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::Config(what) => write!(f, "config error: {what}"),
            Error::NonSpd { cell } => {
                write!(f, "coefficient not positive definite at a quadrature point of cell {cell}")
            }
            Error::Singular(what) => write!(f, "singular: {what}"),
            Error::LinAlg(what) => write!(f, "linear algebra failure: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
