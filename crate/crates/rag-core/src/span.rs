//! Source locations attached to tokens, nodes, edges, and diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A half-inclusive region of a source document, 1-based lines and columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line_start: u32,
    pub col_start: u32,
    pub line_end: u32,
    pub col_end: u32,
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, line_start: u32, col_start: u32, line_end: u32, col_end: u32) -> Self {
        debug_assert!(
            (line_start, col_start) <= (line_end, col_end),
            "span start must not follow its end"
        );
        Self {
            file: file.into(),
            line_start,
            col_start,
            line_end,
            col_end,
        }
    }

    /// Single-point span, useful for end-of-input diagnostics.
    pub fn point(file: impl Into<String>, line: u32, col: u32) -> Self {
        Self::new(file, line, col, line, col)
    }

    /// Smallest span covering both `self` and `other` (same file assumed).
    pub fn merge(&self, other: &SourceSpan) -> SourceSpan {
        let (ls, cs) = std::cmp::min((self.line_start, self.col_start), (other.line_start, other.col_start));
        let (le, ce) = std::cmp::max((self.line_end, self.col_end), (other.line_end, other.col_end));
        SourceSpan::new(self.file.clone(), ls, cs, le, ce)
    }

    /// Sort key used to order diagnostics deterministically.
    pub fn order_key(&self) -> (String, u32, u32, u32, u32) {
        (
            self.file.clone(),
            self.line_start,
            self.col_start,
            self.line_end,
            self.col_end,
        )
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line_start, self.col_start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_covers_both() {
        let a = SourceSpan::new("f", 2, 5, 2, 9);
        let b = SourceSpan::new("f", 1, 3, 1, 7);
        let m = a.merge(&b);
        assert_eq!((m.line_start, m.col_start), (1, 3));
        assert_eq!((m.line_end, m.col_end), (2, 9));
    }

    #[test]
    fn display_is_file_line_col() {
        let s = SourceSpan::point("breakfast.rag", 14, 8);
        assert_eq!(s.to_string(), "breakfast.rag:14:8");
    }
}
