//! Featherweight Java extended with flexible regular corecursion.
//!
//! Programs are parsed into a [`ClassTable`](classtable::ClassTable), then evaluated either by the
//! inductive reference interpreter ([`fj`]), the capsule-based operational
//! semantics ([`op`]) or the intermediate oracle ([`oracle`]).

pub mod algebra;
pub mod ast;
pub mod capsule;
pub mod classtable;
pub mod corpus;
pub mod fj;
pub mod op;
pub mod oracle;
pub mod parser;
pub mod print;
pub mod runtime;
pub mod trace;

pub use ast::{BinOp, Expr, Name, OpenValue};
pub use capsule::{Call, Capsule, Environment};
pub use parser::{parse_capsule, parse_expr, parse_program, ParseError, SourceProgram};
