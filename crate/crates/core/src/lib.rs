//! Operator systems in finite-dimensional matrix algebras.
//!
//! The crate computes the C*-algebra generated by an operator system and its
//! central decomposition, decides which irreducible representations are
//! boundary representations (by a convex singleton test on UCP extensions),
//! identifies the boundary ideal and C*-envelope, builds operator systems from
//! parameterizing sequences and decides isomorphism of reduced systems.

pub mod algebra;
pub mod choquet;
pub mod classify;
pub mod error;
pub mod feastool;
pub mod matlin;
pub mod nonreduced;
pub mod opsys;
pub mod rng;

pub use error::{Error, Result};
pub use matlin::{CMatrix, MatrixSubspace, C64};
