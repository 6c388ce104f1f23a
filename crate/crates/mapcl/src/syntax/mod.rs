//! Formula syntax: the AST, a text parser with scope checking, a printer
//! whose output parses back to the same tree, and spec templates.

pub mod ast;
pub mod parser;
mod printer;
pub mod templates;

pub use ast::*;
pub use parser::{
    is_identifier, parse, parse_temporal, parse_temporal_with, parse_with, t_and, t_implies, t_not, t_or, ParseError,
};
pub use templates::*;
