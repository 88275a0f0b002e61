//! Virtual element solver for miscible displacement of one incompressible
//! fluid by another in a porous medium.
//!
//! Darcy velocity uses the lowest-order H(div)-conforming virtual element
//! space, pressure is piecewise constant, and concentration uses the
//! lowest-order nonconforming enhanced virtual element space. Time stepping
//! is backward Euler with the flow and transport solves decoupled.

// `!(x > 0.0)` is used on purpose so NaN lands in the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forms;
pub mod harness;
pub mod mesh;
pub mod polybasis;
pub mod problems;
pub mod projectors;
pub mod solver;
pub mod spaces;

pub use error::{MeshError, Result, VemError};
