//! Equiaffine invariants of level sets of smooth functions.
//!
//! All derivatives come from truncated Taylor jets ([`jets`]); the tensor
//! algebra lives in [`forms`]; [`invariants`] turns a field and a point into
//! an [`invariants::InvariantReport`]. [`ruled`] builds the ruled fields
//! F(u, x) = ⟨A(u), x⟩ + Q(u) and [`flow`] integrates the affine normal flow.

pub mod error;
pub mod exprlang;
pub mod flow;
pub mod forms;
pub mod invariants;
pub mod jets;
pub mod numeric;
pub mod par;
pub mod ruled;
pub mod verify;

pub use error::{Error, Result};
pub use exprlang::{builtin, parse, Ast, FieldSpec};
pub use invariants::{analyze, InvariantReport};
