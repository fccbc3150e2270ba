use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectors::VectorFile;

use super::network::{EmbeddingTrace, Term};

/// Attention coefficients of one node; absent terms are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionWeights {
    pub self_content: f64,
    pub users: Option<f64>,
    pub tweets: Option<f64>,
}

impl AttentionWeights {
    pub fn from_trace(terms: &[Term], alpha: &[f64]) -> Self {
        let mut w = AttentionWeights {
            self_content: 0.0,
            users: None,
            tweets: None,
        };
        for (t, a) in terms.iter().zip(alpha) {
            match t {
                Term::SelfContent => w.self_content = *a,
                Term::Users => w.users = Some(*a),
                Term::Tweets => w.tweets = Some(*a),
            }
        }
        w
    }

    pub fn sum(&self) -> f64 {
        self.self_content + self.users.unwrap_or(0.0) + self.tweets.unwrap_or(0.0)
    }
}

/// Node embeddings keyed by `user:<id>` / `tweet:<id>`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Empty when the table was imported from a file.
    pub attention: Vec<AttentionWeights>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, ids: Vec<String>, rows: Vec<Vec<f64>>, attention: Vec<AttentionWeights>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::Invalid(format!("{} ids for {} rows", ids.len(), rows.len())));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension(format!("row of length {} in a table of dimension {dim}", r.len())));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate embedding id {id}")));
            }
        }
        Ok(EmbeddingTable {
            dim,
            ids,
            rows,
            attention,
            index,
        })
    }

    pub fn from_traces(dim: usize, ids: Vec<String>, traces: &[EmbeddingTrace]) -> Result<Self> {
        let rows = traces.iter().map(|t| t.embedding.clone()).collect();
        let attention = traces
            .iter()
            .map(|t| AttentionWeights::from_trace(&t.attention.terms, &t.attention.alpha))
            .collect();
        Self::new(dim, ids, rows, attention)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&[f64]> {
        self.index
            .get(id)
            .map(|&i| self.rows[i].as_slice())
            .ok_or_else(|| Error::MissingKey(format!("no embedding for {id}")))
    }

    /// Looks up a user either by its prefixed key or by bare external id.
    pub fn user(&self, external_id: &str) -> Result<&[f64]> {
        match self.index.get(&format!("user:{external_id}")) {
            Some(&i) => Ok(&self.rows[i]),
            None => self.get(external_id),
        }
    }

    pub fn to_vector_file(&self) -> VectorFile {
        VectorFile {
            dim: self.dim,
            ids: self.ids.clone(),
            rows: self.rows.clone(),
        }
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        self.to_vector_file().write(path)
    }

    /// Reads an embedding file; `expected_dim` guards against mixing models.
    pub fn import(path: &Path, expected_dim: Option<usize>) -> Result<Self> {
        let file = VectorFile::read(path)?;
        if let Some(d) = expected_dim {
            if d != file.dim {
                return Err(Error::Dimension(format!(
                    "{} declares dimension {}, expected {d}",
                    path.display(),
                    file.dim
                )));
            }
        }
        Self::new(file.dim, file.ids, file.rows, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_missing_key() {
        let ids = vec!["user:a".to_string(), "tweet:b".to_string()];
        let rows = vec![vec![0.1, -2.5e-7, 3.0], vec![1.0 / 3.0, 0.0, -1e10]];
        let t = EmbeddingTable::new(3, ids, rows, Vec::new()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.tsv");
        t.export(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("2 3\n"));
        let back = EmbeddingTable::import(&p, Some(3)).unwrap();
        for (a, b) in t.rows.iter().flatten().zip(back.rows.iter().flatten()) {
            assert!((a - b).abs() <= 1e-6);
        }
        assert!(matches!(back.get("user:zzz"), Err(Error::MissingKey(_))));
        assert_eq!(back.user("a").unwrap(), t.get("user:a").unwrap());
        assert!(matches!(EmbeddingTable::import(&p, Some(4)), Err(Error::Dimension(_))));
    }
}
