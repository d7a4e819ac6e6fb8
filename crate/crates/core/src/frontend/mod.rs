//! Program text to validated AST.
//!
//! ```text
//! dist r = finite { 1 : 1/4, -1 : 3/4 };
//! init x = 100;
//! [x >= 0] while x >= 1 do
//!   [x >= 1] x := x + r;
//!   [x >= 0] tick(x)
//! od
//! [0 <= x and x <= 1]
//! ```

pub mod ast;
mod lexer;
mod parser;
mod printer;
mod validate;

use thiserror::Error;

use crate::dist::DistError;
use crate::Rational;

pub use ast::{BExpr, Cond, Expr, ProgramAst, Span, Stmt, StmtKind, LITERAL_PREFIX};
pub use printer::{print_bexpr, print_expr, print_program};
pub use validate::validate;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared sampling variable {0} (declare it with `dist`, or give it an `init` value)")]
    UndeclaredSampling(String),
    #[error("probability {p} at line {line} is outside [0, 1]")]
    ProbOutOfRange { p: Rational, line: usize },
    #[error("duplicate distribution {name} at line {line}")]
    DuplicateDist { name: String, line: usize },
    #[error("distribution {name}: {err}")]
    Dist { name: String, err: Box<DistError> },
    #[error("init references unknown variable {0}")]
    UnknownInitVar(String),
    #[error("sampling variable {name} used in {place}")]
    SamplingIn { name: String, place: &'static str },
}

/// Parses program text. Distribution sums and variable roles are checked
/// separately by [`validate`].
pub fn parse_program(text: &str) -> Result<ProgramAst, FrontendError> {
    let ast = parser::parse(text)?;
    if let Some(v) = validate::undeclared_sampling(&ast) {
        return Err(FrontendError::UndeclaredSampling(v));
    }
    Ok(ast)
}

/// Parse and validate; returns the checked AST with warnings.
pub fn load(text: &str) -> Result<(ProgramAst, Vec<String>), FrontendError> {
    validate(parse_program(text)?)
}
