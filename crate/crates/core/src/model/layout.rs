use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// Largest number of cells a subplot grid may have.
pub const MAX_CELLS: u32 = 12;

/// A subplot grid, written `(rows, cols)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub rows: u32,
    pub cols: u32,
}

impl Layout {
    pub const SINGLE: Layout = Layout { rows: 1, cols: 1 };

    /// The 13 grids used by the reference corpus, from `(1, 1)` to `(4, 2)`.
    pub const REFERENCE: [Layout; 13] = [
        Layout::SINGLE,
        Layout { rows: 1, cols: 2 },
        Layout { rows: 1, cols: 3 },
        Layout { rows: 1, cols: 4 },
        Layout { rows: 2, cols: 1 },
        Layout { rows: 2, cols: 2 },
        Layout { rows: 2, cols: 3 },
        Layout { rows: 2, cols: 4 },
        Layout { rows: 3, cols: 1 },
        Layout { rows: 3, cols: 2 },
        Layout { rows: 3, cols: 3 },
        Layout { rows: 4, cols: 1 },
        Layout { rows: 4, cols: 2 },
    ];

    pub fn new(rows: u32, cols: u32) -> Result<Self, ParseError> {
        if rows < 1 || cols < 1 {
            return Err(ParseError::LayoutDomain(format!("rows and cols must be >= 1, got ({rows}, {cols})")));
        }
        if rows * cols > MAX_CELLS {
            return Err(ParseError::LayoutDomain(format!(
                "({rows}, {cols}) has {} cells, more than the {MAX_CELLS} allowed",
                rows * cols
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn cells(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    pub fn is_single(&self) -> bool {
        *self == Layout::SINGLE
    }

    pub fn is_valid(&self) -> bool {
        self.rows >= 1 && self.cols >= 1 && self.rows * self.cols <= MAX_CELLS
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.rows, self.cols)
    }
}

/// Parses `"(r, c)"`, tolerating whitespace anywhere between tokens.
pub fn parse_layout(text: &str) -> Result<Layout, ParseError> {
    let malformed = || ParseError::MalformedLayout(text.to_string());
    let inner = text.trim().strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or_else(malformed)?;
    let mut parts = inner.split(',');
    let (Some(r), Some(c), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(malformed());
    };
    let parse = |s: &str| -> Result<i64, ParseError> {
        let s = s.trim();
        if s.is_empty() || !s.trim_start_matches(['-', '+']).chars().all(|ch| ch.is_ascii_digit()) {
            return Err(malformed());
        }
        s.parse::<i64>().map_err(|_| malformed())
    };
    let (rows, cols) = (parse(r)?, parse(c)?);
    if rows < 1 || cols < 1 {
        return Err(ParseError::LayoutDomain(format!("rows and cols must be >= 1, got ({rows}, {cols})")));
    }
    let rows = u32::try_from(rows).map_err(|_| malformed())?;
    let cols = u32::try_from(cols).map_err(|_| malformed())?;
    Layout::new(rows, cols)
}

impl FromStr for Layout {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_layout(s)
    }
}
