//! Expression language for scalar fields and the builtin field registry.

mod ast;
mod field;
mod parser;

pub use ast::{Ast, BinOp};
pub use field::{
    builtin, default_vars, idempotent, symdet_coords, symdet_matrix, FieldSpec, JetField,
};
pub use parser::parse;
