//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] of order k holds every Taylor coefficient of degree ≤ k at a
//! base point. Arithmetic and elementary functions act on the truncated
//! series exactly, so derivatives extracted from a jet carry no truncation
//! error.

mod index;
mod jet;
mod scalar;

pub use index::{layout, Layout, MultiIndex};
pub use jet::{extract, jet_arith, jet_elem, seed, ArithOp, ElemFn, Jet, Operand};
pub(crate) use jet::domain;
pub use scalar::Scalar;

/// Largest supported number of variables.
pub const MAX_DIM: usize = 12;
/// Largest supported jet order.
pub const MAX_ORDER: usize = 4;
