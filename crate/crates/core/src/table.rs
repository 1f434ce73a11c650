//! Plain rectangular tables with TSV and Markdown encodings, and a row-level diff.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell value meaning "not asserted"; matches anything in a diff.
pub const WILDCARD: &str = "?";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub id: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(id: impl Into<String>, header: &[&str]) -> Self {
        Table { id: id.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// One line per row, tab separated, header first, trailing newline.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join("\t"));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(id: &str, text: &str) -> Result<Table> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::parse(text, 0, "empty table"))?
            .split('\t')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split('\t').map(str::to_string).collect();
            if row.len() != header.len() {
                return Err(Error::parse(
                    line,
                    i + 2,
                    format!("expected {} columns, found {}", header.len(), row.len()),
                ));
            }
            rows.push(row);
        }
        Ok(Table { id: id.to_string(), header, rows })
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let esc = |s: &str| if s.is_empty() { " ".to_string() } else { s.replace('|', "\\|") };
        let _ = writeln!(out, "| {} |", self.header.iter().map(|h| esc(h)).collect::<Vec<_>>().join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(self.header.len()));
        for r in &self.rows {
            let _ = writeln!(out, "| {} |", r.iter().map(|c| esc(c)).collect::<Vec<_>>().join(" | "));
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowDiff {
    Header { expected: Vec<String>, found: Vec<String> },
    Changed { row: usize, expected: Vec<String>, found: Vec<String> },
    Missing { row: usize, expected: Vec<String> },
    Extra { row: usize, found: Vec<String> },
}

/// Compares a computed table against a golden one. Golden cells equal to [`WILDCARD`] match anything.
pub fn diff(golden: &Table, computed: &Table) -> Vec<RowDiff> {
    let mut out = Vec::new();
    if golden.header != computed.header {
        out.push(RowDiff::Header { expected: golden.header.clone(), found: computed.header.clone() });
        return out;
    }
    let n = golden.rows.len().max(computed.rows.len());
    for i in 0..n {
        match (golden.rows.get(i), computed.rows.get(i)) {
            (Some(g), Some(c)) => {
                let same = g.len() == c.len() && g.iter().zip(c).all(|(a, b)| a == WILDCARD || a == b);
                if !same {
                    out.push(RowDiff::Changed { row: i, expected: g.clone(), found: c.clone() });
                }
            }
            (Some(g), None) => out.push(RowDiff::Missing { row: i, expected: g.clone() }),
            (None, Some(c)) => out.push(RowDiff::Extra { row: i, found: c.clone() }),
            (None, None) => {}
        }
    }
    out
}

pub fn render_diff(d: &[RowDiff]) -> String {
    let mut out = String::new();
    for r in d {
        let _ = match r {
            RowDiff::Header { expected, found } => {
                writeln!(out, "header\n- {}\n+ {}", expected.join("\t"), found.join("\t"))
            }
            RowDiff::Changed { row, expected, found } => {
                writeln!(out, "row {row}\n- {}\n+ {}", expected.join("\t"), found.join("\t"))
            }
            RowDiff::Missing { row, expected } => writeln!(out, "row {row}\n- {}", expected.join("\t")),
            RowDiff::Extra { row, found } => writeln!(out, "row {row}\n+ {}", found.join("\t")),
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("t", &["deg", "gens"]);
        t.push(vec!["0".into(), "i".into()]);
        t.push(vec!["1".into(), "".into()]);
        t
    }

    #[test]
    fn tsv_round_trip() {
        let t = sample();
        assert_eq!(Table::from_tsv("t", &t.to_tsv()).unwrap(), t);
    }

    #[test]
    fn wildcard_and_changes() {
        let t = sample();
        let mut g = t.clone();
        g.rows[0][1] = WILDCARD.into();
        assert!(diff(&g, &t).is_empty());
        g.rows[1][1] = "x".into();
        assert_eq!(diff(&g, &t).len(), 1);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Table::from_tsv("t", "a\tb\n1\n").is_err());
    }
}
