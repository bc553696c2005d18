//! Plain-text embedding files: `token v1 ... vd` per line, with an
//! optional `count dim` header line.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Separator between word and 1-based character index in external-vector
/// keys (`婚姻法␟2`).
pub const KEY_SEPARATOR: char = '\u{241F}';

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub tokens: Vec<String>,
    /// Row-major `tokens.len() x dim`.
    pub values: Vec<f64>,
}

impl EmbeddingTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut declared_count = None;
        let mut tokens = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ').filter(|p| !p.is_empty());
            let token = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            if i == 0 && rest.len() == 1 {
                if let (Ok(c), Ok(d)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                    declared_count = Some(c);
                    dim = Some(d);
                    continue;
                }
            }
            let row: Vec<f64> = rest
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(line_no, token.chars().count() + 2, "bad float"))?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::format(
                        line_no,
                        1,
                        format!("expected {d} values, found {}", row.len()),
                    ))
                }
                _ => {}
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::format(line_no, 1, "non-finite value"));
            }
            tokens.push(token.to_string());
            values.extend(row);
        }
        let dim = dim.ok_or_else(|| Error::Empty("embedding file".into()))?;
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension is zero".into()));
        }
        if let Some(c) = declared_count {
            if c != tokens.len() {
                return Err(Error::format(
                    1,
                    1,
                    format!("header declares {c} vectors, found {}", tokens.len()),
                ));
            }
        }
        Ok(EmbeddingTable {
            dim,
            tokens,
            values,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index(&self) -> HashMap<&str, usize> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect()
    }
}

/// Per-character vectors keyed by (word, 1-based position), used in place
/// of learned character embeddings.
#[derive(Clone, Debug, Default)]
pub struct ExternalVectors {
    pub dim: usize,
    pub vectors: HashMap<(String, usize), Vec<f64>>,
}

impl ExternalVectors {
    pub fn from_table(table: &EmbeddingTable) -> Result<Self> {
        let mut vectors = HashMap::with_capacity(table.len());
        for (i, key) in table.tokens.iter().enumerate() {
            let (word, pos) = key.rsplit_once(KEY_SEPARATOR).ok_or_else(|| {
                Error::InvalidArgument(format!("external vector key `{key}` lacks a position"))
            })?;
            let pos: usize = pos
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad position in key `{key}`")))?;
            vectors.insert((word.to_string(), pos), table.row(i).to_vec());
        }
        Ok(ExternalVectors {
            dim: table.dim,
            vectors,
        })
    }

    pub fn get(&self, word: &str, pos: usize) -> Option<&[f64]> {
        self.vectors.get(&(word.to_string(), pos)).map(Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let a = EmbeddingTable::parse("2 3\n婚 0.1 0.2 0.3\n姻 1 2 3\n").unwrap();
        let b = EmbeddingTable::parse("婚 0.1 0.2 0.3\n姻 1 2 3\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim, 3);
        assert_eq!(a.row(1), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_ragged_rows_and_bad_counts() {
        assert!(EmbeddingTable::parse("a 1 2\nb 1\n").is_err());
        assert!(EmbeddingTable::parse("3 2\na 1 2\n").is_err());
        assert!(EmbeddingTable::parse("a 1 x\n").is_err());
        assert!(EmbeddingTable::parse("").is_err());
    }

    #[test]
    fn external_vector_keys() {
        let t = EmbeddingTable::parse("婚姻法\u{241F}1 1 0\n婚姻法\u{241F}3 0 1\n").unwrap();
        let ext = ExternalVectors::from_table(&t).unwrap();
        assert_eq!(ext.get("婚姻法", 3), Some(&[0.0, 1.0][..]));
        assert_eq!(ext.get("婚姻法", 2), None);
        let bad = EmbeddingTable::parse("婚姻法 1 0\n").unwrap();
        assert!(ExternalVectors::from_table(&bad).is_err());
    }
}
