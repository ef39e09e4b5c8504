//! Lattice toolkit for weighted Morrey norms, Muckenhoupt weights,
//! multilinear singular-integral quadrature, and inequality verification.
//!
//! Everything is computed on an offset lattice over a cube: norms take
//! suprema over a finite dyadic ball family, operators are truncated near
//! the diagonal, and "the constant is finite" becomes "the observed
//! constant is stable under joint grid/ladder refinement". Reported norms
//! are lower bounds of the true suprema; both sides of any verified
//! inequality share the same quadrature so the discretization bias cancels
//! directionally.

pub mod config;
pub mod error;
pub mod io;
pub mod lattice;
pub mod operators;
pub mod orlicz;
pub mod runner;
pub mod spaces;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
