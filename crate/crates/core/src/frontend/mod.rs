//! Lexing, parsing, printing, and classical evaluation of source programs.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod token;

pub use ast::Program;
pub use parser::{parse, parse_expr_str};
pub use pretty::{print_expr, print_program};
