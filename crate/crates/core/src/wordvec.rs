//! Pretrained word vectors, class-name normalization, and semantic class
//! embeddings. Multi-word class names embed as the arithmetic mean of their
//! token vectors; under cosine distance this is indistinguishable from the
//! sum.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Result, ZslError};
use crate::math::{cosine_distance as cos_dist, norm, Scalar};

/// Vocabulary of D_s-dimensional word vectors, immutable after load.
#[derive(Debug, Clone)]
pub struct WordVectorTable<F> {
    dim: usize,
    entries: HashMap<String, Vec<F>>,
}

impl<F: Scalar> WordVectorTable<F> {
    pub fn new(dim: usize) -> Self {
        WordVectorTable {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[F]> {
        self.entries.get(token).map(|v| v.as_slice())
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<F>) -> Result<()> {
        let token = token.into();
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(ZslError::Invalid(format!("invalid token '{token}'")));
        }
        if vector.len() != self.dim {
            return Err(ZslError::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(ZslError::Invalid(format!(
                "non-finite component in vector for '{token}'"
            )));
        }
        if self.entries.contains_key(&token) {
            return Err(ZslError::Invalid(format!("duplicate token '{token}'")));
        }
        self.entries.insert(token, vector);
        Ok(())
    }
}

/// A class label in raw form plus its normalized word tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassName {
    raw: String,
    tokens: Vec<String>,
}

impl ClassName {
    /// Normalize: lowercase, split on whitespace/underscores/hyphens, strip
    /// ASCII punctuation from each token.
    pub fn parse(raw: &str) -> Result<Self> {
        let tokens: Vec<String> = raw
            .to_lowercase()
            .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
            .map(|t| {
                t.chars()
                    .filter(|c| !c.is_ascii_punctuation())
                    .collect::<String>()
            })
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            return Err(ZslError::Invalid(format!(
                "class name '{raw}' has no tokens after normalization"
            )));
        }
        Ok(ClassName {
            raw: raw.to_string(),
            tokens,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Semantic embedding of a class name; finite with strictly positive norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticEmbedding<F> {
    vector: Vec<F>,
}

impl<F: Scalar> SemanticEmbedding<F> {
    pub fn new(vector: Vec<F>) -> Result<Self> {
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(ZslError::Invalid("non-finite embedding component".into()));
        }
        if norm(&vector) == F::zero() {
            return Err(ZslError::ZeroNorm);
        }
        Ok(SemanticEmbedding { vector })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.vector
    }

    pub fn scaled(&self, factor: F) -> Self {
        SemanticEmbedding {
            vector: self.vector.iter().map(|v| *v * factor).collect(),
        }
    }
}

/// Manual replacements for tokens missing from the pretrained vocabulary.
#[derive(Debug, Clone, Default)]
pub struct SubstitutionMap {
    map: HashMap<String, Vec<String>>,
}

impl SubstitutionMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, oov: impl Into<String>, replacements: Vec<String>) {
        self.map.insert(oov.into(), replacements);
    }

    pub fn get(&self, token: &str) -> Option<&[String]> {
        self.map.get(token).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Format: UTF-8 lines `<oov_token> -> <replacement tokens...>`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| ZslError::io(path, e))?;
        let mut map = SubstitutionMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| ZslError::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (lhs, rhs) = trimmed.split_once("->").ok_or_else(|| {
                ZslError::parse(path, idx + 1, "expected '<oov_token> -> <replacements>'")
            })?;
            let oov = lhs.trim().to_lowercase();
            let reps: Vec<String> = rhs.split_whitespace().map(|t| t.to_lowercase()).collect();
            if oov.is_empty() || reps.is_empty() {
                return Err(ZslError::parse(path, idx + 1, "empty token or replacement"));
            }
            map.insert(oov, reps);
        }
        Ok(map)
    }
}

/// Load word vectors from the text format: header `<count> <dim>`, then one
/// `<token> <f1> ... <f_dim>` line per word. Tokens are lowercased on load.
pub fn load_word_vectors<F: Scalar>(
    path: &Path,
    restrict_vocab: Option<&HashSet<String>>,
) -> Result<WordVectorTable<F>> {
    let file = File::open(path).map_err(|e| ZslError::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| ZslError::parse(path, 1, "empty file"))?;
    let header = header.map_err(|e| ZslError::io(path, e))?;
    let mut parts = header.split_whitespace();
    let _count: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ZslError::parse(path, 1, "bad count in header"))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ZslError::parse(path, 1, "bad dimension in header"))?;
    if dim == 0 {
        return Err(ZslError::parse(path, 1, "dimension must be positive"));
    }

    let mut table = WordVectorTable::new(dim);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| ZslError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap().to_lowercase();
        if let Some(vocab) = restrict_vocab {
            if !vocab.contains(&token) {
                continue;
            }
        }
        let mut vector = Vec::with_capacity(dim);
        for f in fields {
            let v: f64 = f.parse().map_err(|_| {
                ZslError::parse(path, lineno, format!("non-numeric component '{f}'"))
            })?;
            vector.push(F::from_f64_lossy(v));
        }
        if vector.len() != dim {
            return Err(ZslError::parse(
                path,
                lineno,
                format!("expected {dim} components, got {}", vector.len()),
            ));
        }
        table
            .insert(token, vector)
            .map_err(|e| ZslError::parse(path, lineno, e.to_string()))?;
    }
    Ok(table)
}

/// Embed a class name as the mean of its token vectors, applying the
/// substitution map to out-of-vocabulary tokens first.
pub fn embed_class<F: Scalar>(
    name: &ClassName,
    table: &WordVectorTable<F>,
    subs: &SubstitutionMap,
) -> Result<SemanticEmbedding<F>> {
    let mut resolved: Vec<&[F]> = Vec::new();
    let mut missing: Vec<String> = Vec::new();
    for token in name.tokens() {
        if let Some(v) = table.get(token) {
            resolved.push(v);
            continue;
        }
        match subs.get(token) {
            Some(reps) => {
                for rep in reps {
                    match table.get(rep) {
                        Some(v) => resolved.push(v),
                        None => missing.push(rep.clone()),
                    }
                }
            }
            None => missing.push(token.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(ZslError::OutOfVocabulary { tokens: missing });
    }
    let mean = crate::math::mean_rows(&resolved);
    SemanticEmbedding::new(mean).map_err(|_| ZslError::DegenerateEmbedding {
        class: name.raw().to_string(),
    })
}

/// Re-export of the shared cosine distance so callers of this module see the
/// full semantic toolkit in one place.
pub fn cosine_distance<F: Scalar>(a: &[F], b: &[F]) -> Result<F> {
    cos_dist(a, b)
}
