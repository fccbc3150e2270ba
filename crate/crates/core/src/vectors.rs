//! The shared vector text format used for feature sidecars and embedding tables.
//!
//! ```text
//! <count> <dim>
//! <id>\t<f>,<f>,...,<f>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile {
    pub dim: usize,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl VectorFile {
    pub fn new(dim: usize) -> Self {
        VectorFile {
            dim,
            ids: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, row: Vec<f64>) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Dimension(format!(
                "row has length {}, table dimension is {}",
                row.len(),
                self.dim
            )));
        }
        self.ids.push(id.into());
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Floats are written with Rust's shortest round-trip formatting, so a
    /// write/read cycle is exact and the output is byte-stable.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.dim * 20 + 16) + 16);
        let _ = writeln!(out, "{} {}", self.len(), self.dim);
        for (id, row) in self.ids.iter().zip(&self.rows) {
            out.push_str(id);
            out.push('\t');
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", v);
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing '<count> <dim>' header"))?;
        let mut parts = header.split_whitespace();
        let count: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(path, 1, "bad count in header"))?;
        let dim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(path, 1, "bad dimension in header"))?;
        if parts.next().is_some() {
            return Err(Error::parse(path, 1, "header must be '<count> <dim>'"));
        }
        let mut table = VectorFile::new(dim);
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (id, floats) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno, "expected '<id>\\t<floats>'"))?;
            let row = if floats.trim().is_empty() {
                Vec::new()
            } else {
                floats
                    .split(',')
                    .map(|f| f.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::parse(path, lineno, format!("bad float: {e}")))?
            };
            if row.len() != dim {
                return Err(Error::Dimension(format!(
                    "{}:{}: row has {} values, header declares {}",
                    path.display(),
                    lineno,
                    row.len(),
                    dim
                )));
            }
            table.ids.push(id.to_string());
            table.rows.push(row);
        }
        if table.len() != count {
            return Err(Error::parse(
                path,
                1,
                format!("header declares {count} rows, file has {}", table.len()),
            ));
        }
        Ok(table)
    }

    pub fn into_map(self) -> std::collections::HashMap<String, Vec<f64>> {
        self.ids.into_iter().zip(self.rows).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_rows_are_validated() {
        let p = Path::new("x.tsv");
        assert!(VectorFile::parse("1 2\na\t1,2\n", p).is_ok());
        assert!(matches!(
            VectorFile::parse("1 3\na\t1,2\n", p),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            VectorFile::parse("2 2\na\t1,2\n", p),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            VectorFile::parse("1 2\na\t1,x\n", p),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(rows in proptest::collection::vec(
            proptest::collection::vec(-1e6f64..1e6, 3), 0..6)) {
            let mut t = VectorFile::new(3);
            for (i, r) in rows.into_iter().enumerate() {
                t.push(format!("n{i}"), r).unwrap();
            }
            let back = VectorFile::parse(&t.to_text(), Path::new("mem")).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
