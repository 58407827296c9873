//! Front end: lexer, parsers and printer for `.gen`, `.scn` and `.prop` files.

mod ast;
pub mod lexer;
mod parser;
mod pretty;
mod props;
mod scenario;

pub use ast::*;
pub use parser::{parse_component, ParseError, ParseResult, PREDEFINED_SERVICES};
pub use pretty::pretty_print;
pub use props::{parse_predicate, parse_properties};
pub use scenario::parse_scenario;
