//! Quantified spatial regular expressions: syntax tree, parser, printer and
//! static checks.
//!
//! The concrete grammar is documented in `docs/grammar.md`.

mod ast;
mod lexer;
mod parser;
pub(crate) mod printer;
mod validate;

use std::fmt;

pub use ast::{Category, CmpOp, Pattern, Quantifier, Query, SpatialFormula, SpatialTerm};
pub use parser::{optional, parse, plus, repeat};
pub use printer::{formula_to_string, pretty_print};
pub use validate::{validate_pattern, validate_query, QueryViolation, QueryViolationKind};

pub(crate) use lexer::is_plain_ident;

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    BadNumber(String),
    UnterminatedString,
    EmptyName,
    UnexpectedToken { found: String, expected: &'static str },
    UnexpectedEnd { expected: &'static str },
    UnboundVariable(String),
    Shadowing(String),
    KeywordAsVariable(String),
    EmptyRepetition { min: u64, max: u64 },
    RepetitionTooLarge(u64),
    PatternTooLarge,
    TooDeep,
}

/// A lexical, syntactic or scoping error at a byte offset of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: usize,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, pos: usize) -> Self {
        Self { kind, pos }
    }

    /// True for errors the lexer raises before any structure is known.
    pub fn is_lexical(&self) -> bool {
        matches!(
            self.kind,
            ParseErrorKind::UnexpectedChar(_)
                | ParseErrorKind::BadNumber(_)
                | ParseErrorKind::UnterminatedString
                | ParseErrorKind::EmptyName
        )
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number `{s}`"),
            ParseErrorKind::UnterminatedString => f.write_str("unterminated quoted name"),
            ParseErrorKind::EmptyName => f.write_str("empty quoted name"),
            ParseErrorKind::UnexpectedToken { found, expected } => write!(f, "expected {expected}, found {found}"),
            ParseErrorKind::UnexpectedEnd { expected } => write!(f, "expected {expected}, found end of input"),
            ParseErrorKind::UnboundVariable(v) => write!(f, "unbound variable `{v}`"),
            ParseErrorKind::Shadowing(v) => write!(f, "variable `{v}` is already bound in this scope"),
            ParseErrorKind::KeywordAsVariable(v) => write!(f, "keyword `{v}` cannot name a variable"),
            ParseErrorKind::EmptyRepetition { min, max } => write!(f, "empty repetition bounds {{{min},{max}}}"),
            ParseErrorKind::RepetitionTooLarge(n) => write!(f, "repetition count {n} exceeds the limit"),
            ParseErrorKind::PatternTooLarge => f.write_str("pattern too large after expanding repetitions"),
            ParseErrorKind::TooDeep => f.write_str("nesting too deep"),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = if self.is_lexical() { "lexical error" } else { "syntax error" };
        write!(f, "{what} at offset {}: {}", self.pos, self.kind)
    }
}

impl std::error::Error for ParseError {}
