//! Source positions attached to AST nodes, inference variables, and
//! diagnostics.

use std::fmt;

use serde::Serialize;

/// A half-open byte range into a source file, together with the 1-based
/// line and column of its start.
///
/// Spans order by start offset, which gives "source order" for free when
/// sorting diagnostics.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Span {
    pub start: u32,
    pub end: u32,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: u32, end: u32, line: u32, col: u32) -> Span {
        Span { start, end, line, col }
    }

    /// A span for synthesized nodes with no source position.
    pub fn synthetic() -> Span {
        Span::default()
    }

    pub fn is_synthetic(&self) -> bool {
        *self == Span::default()
    }

    /// Smallest span covering both `self` and `other`.
    pub fn merge(self, other: Span) -> Span {
        if self.is_synthetic() {
            return other;
        }
        if other.is_synthetic() {
            return self;
        }
        let (line, col) = if (self.line, self.col) <= (other.line, other.col) {
            (self.line, self.col)
        } else {
            (other.line, other.col)
        };
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line,
            col,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

impl fmt::Debug for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}@{}..{}", self.line, self.col, self.start, self.end)
    }
}
