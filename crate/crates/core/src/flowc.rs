//! Flow-C: a small imperative language with exactly the constructs the
//! diagrams talk about (functions and blocks, storage classes, calls,
//! function addresses, jumps, exceptions, threads, records, arrays).

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod print;
pub mod resolve;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use ast::Program;
pub use lexer::{tokenize, Span, Token, TokenKind};
pub use parser::parse_program;
pub use resolve::{resolve_symbols, Storage, Symbol, SymbolId, SymbolKind, SymbolTable};

/// A lexical, syntactic or semantic error with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowError {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.column, self.message)
    }
}

impl core::error::Error for FlowError {}

/// Tokenize, parse and resolve in one go.
pub fn compile(source: &str) -> Result<(Program, SymbolTable), Vec<FlowError>> {
    let tokens = tokenize(source).map_err(|e| alloc::vec![e])?;
    let program = parse_program(&tokens).map_err(|e| alloc::vec![e])?;
    let symbols = resolve_symbols(&program)?;
    Ok((program, symbols))
}
