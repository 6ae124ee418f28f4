use std::fmt;

use super::ast::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    Resolution,
    Type,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical",
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::Resolution => "resolution",
            ParseErrorKind::Type => "type",
        })
    }
}

/// First error found while reading a program. Line and column are 1-based;
/// both are 0 for synthesized nodes that carry no location.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {kind} error: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub line: u32,
    pub col: u32,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, message: impl Into<String>, line: u32, col: u32) -> Self {
        ParseError { kind, message: message.into(), line, col }
    }

    pub fn at(kind: ParseErrorKind, message: impl Into<String>, span: Span) -> Self {
        ParseError::new(kind, message, span.line, span.col)
    }
}
