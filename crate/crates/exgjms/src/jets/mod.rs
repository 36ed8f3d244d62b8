//! Exact higher-order derivative arithmetic: jets and the expression AST
//! evaluated over them.

mod table;

pub mod expr;
pub mod jet;
pub mod parser;

pub use expr::{eval, evaluate, point_jets, Bindings, Expr, UnaryFn, Var};
pub use jet::{Jet, MultiIndex};
pub use parser::parse;
