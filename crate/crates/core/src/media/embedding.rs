use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Per-frame feature vectors produced out of process (LPIPS, CLIP, DINOv2 or
/// any other embedder).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    model_id: String,
    dimension: usize,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(model_id: impl Into<String>, dimension: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let model_id = model_id.into();
        if dimension == 0 {
            return Err(Error::Structure("embedding dimension must be positive".into()));
        }
        if model_id.is_empty() || model_id.contains(char::is_whitespace) {
            return Err(Error::Format(format!("invalid model id {model_id:?}")));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dimension {
                return Err(Error::Structure(format!(
                    "embedding {i} has length {}, expected {dimension}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Format(format!("embedding {i} has non-finite values")));
            }
        }
        Ok(EmbeddingSet {
            model_id,
            dimension,
            vectors,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn get(&self, index: usize) -> Result<&[f64]> {
        self.vectors.get(index).map(Vec::as_slice).ok_or_else(|| {
            Error::Range(format!(
                "embedding index {index} out of range for {} vectors",
                self.vectors.len()
            ))
        })
    }

    /// Concatenates sets sharing model and dimension.
    pub fn pooled<'a>(sets: impl IntoIterator<Item = &'a EmbeddingSet>) -> Result<EmbeddingSet> {
        let mut iter = sets.into_iter();
        let first = iter.next().ok_or(Error::NoFrames)?;
        let mut out = first.clone();
        for s in iter {
            if s.dimension != out.dimension || s.model_id != out.model_id {
                return Err(Error::Structure(format!(
                    "cannot pool {}/{} with {}/{}",
                    s.model_id, s.dimension, out.model_id, out.dimension
                )));
            }
            out.vectors.extend(s.vectors.iter().cloned());
        }
        Ok(out)
    }

    /// Parses `dim=<d> count=<n> model=<id>` followed by `n` lines of `d`
    /// whitespace-separated decimals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Format("embedding file is empty".into()))?;
        let mut dim = None;
        let mut count = None;
        let mut model = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header field {field:?}")))?;
            let num = || {
                value
                    .parse::<usize>()
                    .map_err(|_| Error::Format(format!("bad header value {field:?}")))
            };
            match key {
                "dim" => dim = Some(num()?),
                "count" => count = Some(num()?),
                "model" => model = Some(value.to_string()),
                _ => return Err(Error::Format(format!("unknown header key {key:?}"))),
            }
        }
        let (Some(dim), Some(count), Some(model)) = (dim, count, model) else {
            return Err(Error::Format("header needs dim, count and model".into()));
        };
        let mut vectors = Vec::with_capacity(count);
        for (lineno, line) in lines {
            let v = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            if v.len() != dim {
                return Err(Error::Format(format!(
                    "line {}: {} values, expected {dim}",
                    lineno + 1,
                    v.len()
                )));
            }
            vectors.push(v);
        }
        if vectors.len() != count {
            return Err(Error::Format(format!(
                "header declares {count} vectors, found {}",
                vectors.len()
            )));
        }
        EmbeddingSet::new(model, dim, vectors)
    }

    /// Inverse of [`parse`](Self::parse). Uses shortest round-trip decimals.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "dim={} count={} model={}\n",
            self.dimension,
            self.vectors.len(),
            self.model_id
        );
        for v in &self.vectors {
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{x:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}
