//! Lexing, parsing, type checking and printing of `.ivl` programs.

pub mod alpha;
pub mod ast;
pub mod error;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod typeck;

pub use alpha::alpha_key;
pub use ast::*;
pub use error::{ParseError, ParseErrorKind};
pub use parser::{parse_expr, parse_program, parse_program_unchecked};
pub use printer::{pretty_print, print_expr};
pub use typeck::{check_formula, type_of, Scope};
