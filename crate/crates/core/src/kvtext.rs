//! Versioned key-value text files.
//!
//! Every artifact the crate writes (compiled constraint sets, checkpoints,
//! configuration, toy environments) uses this layout:
//!
//! ```text
//! # optional comment lines
//! format = lexalign.policy
//! version = 1
//! key = value
//! tensor backbone.embedding 2 3
//! 0.1 -0.25 3
//! 1e-7 0 0.5
//! ```
//!
//! A `tensor <name> <rows> <cols>` header is followed by exactly `rows` lines
//! of `cols` whitespace-separated decimals, row-major. Numbers are written in
//! the shortest form that parses back to the same `f64`, so loading and
//! re-saving a written file reproduces it byte for byte. Keys may repeat;
//! order is preserved.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    pairs: Vec<(String, String)>,
    tensors: Vec<(String, Matrix)>,
}

impl KvDoc {
    /// Starts a document carrying the `format` and `version` keys.
    pub fn new(format: &str, version: u32) -> Self {
        let mut doc = KvDoc::default();
        doc.push("format", format);
        doc.push("version", version);
        doc
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn push_tensor(&mut self, name: &str, m: Matrix) {
        self.tensors.push((name.to_string(), m));
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.pairs
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Mismatch(format!("missing key `{key}`")))
    }

    /// Parses a required key.
    pub fn parse_key<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Mismatch(format!("key `{key}`: cannot parse `{raw}`")))
    }

    /// Parses an optional key, falling back to `default`.
    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{raw}`"))),
        }
    }

    pub fn tensor(&self, name: &str) -> Result<&Matrix> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Mismatch(format!("missing tensor `{name}`")))
    }

    /// Checks the `format` key and that `version` does not exceed `max_version`.
    pub fn expect_format(&self, format: &str, max_version: u32) -> Result<u32> {
        let found = self.require("format")?;
        if found != format {
            return Err(Error::Mismatch(format!(
                "expected format `{format}`, found `{found}`"
            )));
        }
        let version: u32 = self.parse_key("version")?;
        if version == 0 || version > max_version {
            return Err(Error::Mismatch(format!(
                "unsupported {format} version {version}"
            )));
        }
        Ok(version)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (name, m) in &self.tensors {
            let _ = writeln!(out, "tensor {name} {} {}", m.rows(), m.cols());
            for r in 0..m.rows() {
                let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KvDoc::default();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        while let Some((lineno, line)) = lines.next() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix("tensor ") {
                let parts: Vec<&str> = header.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(Error::parse(lineno, "tensor", "expected `tensor <name> <rows> <cols>`"));
                }
                let rows: usize = parts[1]
                    .parse()
                    .map_err(|_| Error::parse(lineno, "tensor", "bad row count"))?;
                let cols: usize = parts[2]
                    .parse()
                    .map_err(|_| Error::parse(lineno, "tensor", "bad column count"))?;
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let (rl, row) = lines
                        .next()
                        .ok_or_else(|| Error::parse(lineno, "tensor", "truncated tensor block"))?;
                    let before = data.len();
                    for tok in row.split_whitespace() {
                        let v: f64 = tok
                            .parse()
                            .map_err(|_| Error::parse(rl, "tensor", format!("bad number `{tok}`")))?;
                        data.push(v);
                    }
                    if data.len() - before != cols {
                        return Err(Error::parse(rl, "tensor", format!("expected {cols} values")));
                    }
                }
                doc.tensors.push((parts[0].to_string(), Matrix::from_vec(rows, cols, data)));
                continue;
            }
            let (k, v) = trimmed
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, "key", "expected `key = value`"))?;
            doc.pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_pairs_and_tensors() {
        let text = "# c\nformat = x\nversion = 1\nname = a b\ntensor t 2 2\n1 2\n-0.5 1e-9\n";
        let doc = KvDoc::parse(text).unwrap();
        assert_eq!(doc.get("name"), Some("a b"));
        assert_eq!(doc.tensor("t").unwrap().get(1, 1), 1e-9);
        assert_eq!(doc.expect_format("x", 1).unwrap(), 1);
        assert!(doc.expect_format("y", 1).is_err());
    }

    #[test]
    fn truncated_tensor_is_an_error() {
        assert!(KvDoc::parse("tensor t 2 2\n1 2\n").is_err());
        assert!(KvDoc::parse("tensor t 1 2\n1\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_byte_exact(
            vals in proptest::collection::vec(-1e6f64..1e6, 6),
            key in "[a-z]{1,8}",
        ) {
            let mut doc = KvDoc::new("t", 1);
            doc.push(&key, "v w");
            doc.push_tensor("m", Matrix::from_vec(2, 3, vals));
            let text = doc.to_text();
            let back = KvDoc::parse(&text).unwrap();
            prop_assert_eq!(&back, &doc);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
