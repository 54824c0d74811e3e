//! Source positions shared by every stage of the pipeline.
//!
//! Lines are 1-based. Columns are 1-based byte offsets into the line and
//! `end_column` is inclusive, so a single-character token has
//! `start_column == end_column`. Multi-line constructs carry an explicit
//! `end_line`; report emitters that need the four-field evidence shape
//! (fileName/line/startColumn/endColumn) project the span down to it.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A half-open span is never used anywhere in the scanner: all spans are
/// inclusive on both ends and count bytes, not characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Location {
    pub file_name: String,
    pub line: u32,
    pub start_column: u32,
    pub end_line: u32,
    pub end_column: u32,
}

impl Location {
    pub fn new(
        file_name: impl Into<String>,
        line: u32,
        start_column: u32,
        end_line: u32,
        end_column: u32,
    ) -> Self {
        Location {
            file_name: file_name.into(),
            line,
            start_column,
            end_line,
            end_column,
        }
    }

    /// Span of a single point, used for synthesized nodes and IO errors.
    pub fn point(file_name: impl Into<String>, line: u32, column: u32) -> Self {
        Location::new(file_name, line, column, line, column)
    }

    /// Smallest span covering both `self` and `other`. Both must belong to
    /// the same file; the caller guarantees this.
    pub fn to(&self, other: &Location) -> Location {
        let (line, start_column) = if (self.line, self.start_column) <= (other.line, other.start_column) {
            (self.line, self.start_column)
        } else {
            (other.line, other.start_column)
        };
        let (end_line, end_column) = if (self.end_line, self.end_column) >= (other.end_line, other.end_column) {
            (self.end_line, self.end_column)
        } else {
            (other.end_line, other.end_column)
        };
        Location {
            file_name: self.file_name.clone(),
            line,
            start_column,
            end_line,
            end_column,
        }
    }

    /// True when `self` lies entirely within `outer`.
    pub fn within(&self, outer: &Location) -> bool {
        self.file_name == outer.file_name
            && (outer.line, outer.start_column) <= (self.line, self.start_column)
            && (self.end_line, self.end_column) <= (outer.end_line, outer.end_column)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file_name, self.line, self.start_column)
    }
}

/// Byte offsets of every line start, for O(1) span slicing out of a source
/// buffer. Built once per file, reused by evidence snippets and span tests.
#[derive(Debug, Clone)]
pub struct LineIndex {
    starts: Vec<usize>,
    len: usize,
}

impl LineIndex {
    pub fn new(source: &str) -> Self {
        let mut starts = vec![0usize];
        for (i, b) in source.bytes().enumerate() {
            if b == b'\n' {
                starts.push(i + 1);
            }
        }
        LineIndex {
            starts,
            len: source.len(),
        }
    }

    pub fn line_count(&self) -> usize {
        self.starts.len()
    }

    /// Byte offset of a (1-based line, 1-based column) position.
    pub fn offset(&self, line: u32, column: u32) -> Option<usize> {
        let start = *self.starts.get(line.checked_sub(1)? as usize)?;
        let off = start + column.checked_sub(1)? as usize;
        (off <= self.len).then_some(off)
    }

    /// The exact source text covered by `loc` (inclusive end column).
    pub fn slice<'a>(&self, source: &'a str, loc: &Location) -> Option<&'a str> {
        let start = self.offset(loc.line, loc.start_column)?;
        let end = self.offset(loc.end_line, loc.end_column)? + 1;
        source.get(start..end)
    }
}
