//! Numerical laboratory for boundary unique continuation of divergence-form
//! elliptic equations in planar Lipschitz-graph domains.
//!
//! The crate is organised bottom-up: [`geometry`] describes domains and
//! coefficient fields, [`solver`] discretizes `div(A∇u) = 0` with P1 elements,
//! [`frequency`] evaluates H, I and N with their check suites, [`whitney`]
//! builds the Whitney tree and the modified-frequency recursion, [`nodal`]
//! measures zero sets and sign-constant balls, [`combinatorics`] evaluates the
//! counting bounds, and [`cantor`] handles the Cantor-cone example.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cantor;
pub mod combinatorics;
pub mod error;
pub mod frequency;
pub mod geometry;
pub mod nodal;
pub mod solver;
pub mod whitney;

pub use error::{Error, Result};
pub use geometry::{CoefficientField, Domain, DomainSpec, Mat2, Vec2};
pub use solver::{DiscreteSolution, Mesh};

/// Version string embedded in every output file.
pub const VERSION: &str = concat!("freqlab-core ", env!("CARGO_PKG_VERSION"));
