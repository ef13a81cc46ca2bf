//! File formats: graph and network text, BIF networks, CSV datasets.

pub mod bif;
pub mod dataset_csv;
pub mod graph_text;

use std::fmt;

/// Parse failure with a 1-based position; `line == 0` marks errors found
/// after parsing, when the input position is no longer known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl FormatError {
    pub fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }

    pub(crate) fn from_core(e: amie_core::Error) -> Self {
        Self::at(0, 0, e.to_string())
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
        }
    }
}

impl std::error::Error for FormatError {}
