//! The LogicIoT surface language: tokenizer, parser, validator and printer.

mod ast;
mod error;
mod format;
mod lexer;
mod parser;
mod validate;

pub use ast::*;
pub use error::{ParseError, Pos, SemanticError};
pub use format::{format_expr, format_program, format_statement, quote};
pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use parser::{parse_expression, parse_program};
pub use validate::{validate, validate_with_spans, DeclSpans};
