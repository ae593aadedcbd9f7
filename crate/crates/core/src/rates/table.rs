use std::collections::BTreeMap;

use super::{TailRule, TransitionRate};
use crate::error::{Error, Result};
use crate::Real;

/// Parses a two-column `z p(z)` rate table.
///
/// Blank lines and `#` comments are skipped. `z` must be a positive
/// integer and appear at most once; missing `z` up to the largest listed
/// value are zero. Negative `z` is refused since symmetry is implied.
pub fn parse_table<T: Real>(text: &str, tail: TailRule<T>) -> Result<TransitionRate<T>> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if fields.len() != 2 {
            return Err(Error::Parse { line: line_no, message: format!("expected 2 columns, found {}", fields.len()) });
        }
        let z: i64 = fields[0]
            .parse()
            .map_err(|_| Error::Parse { line: line_no, message: format!("'{}' is not an integer", fields[0]) })?;
        if z <= 0 {
            return Err(Error::Parse { line: line_no, message: format!("z must be positive, got {z}") });
        }
        let p: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Parse { line: line_no, message: format!("'{}' is not a number", fields[1]) })?;
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::Parse { line: line_no, message: format!("rate must be finite and nonnegative, got {p}") });
        }
        if entries.insert(z as u64, p).is_some() {
            return Err(Error::Parse { line: line_no, message: format!("duplicate entry for z = {z}") });
        }
    }
    let horizon = *entries.keys().next_back().ok_or(Error::Parse { line: 0, message: "table has no entries".into() })?;
    let mut values = vec![T::zero(); horizon as usize];
    for (z, p) in entries {
        values[(z - 1) as usize] = T::lit(p);
    }
    TransitionRate::table(values, tail)
}

impl<T: Real> TransitionRate<T> {
    /// Reads a rate table from disk, see [`parse_table`].
    pub fn load_table(path: impl AsRef<std::path::Path>, tail: TailRule<T>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_table(&text, tail)
    }
}
