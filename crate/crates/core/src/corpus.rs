//! Documents, tokenization and collocation association matrices.
//!
//! A document is an ordered token list. For every ordered pair `(u, v)` of
//! distinct tokens, the collocation set `s_uv` holds the occurrences of `v`
//! that fall between two successive occurrences of `u` (or after the last
//! one). The association weight is
//!
//! ```text
//! K_uv = g(h(u, v)) * sum_{(i, j) in s_uv} f(p_u(i), p_v(j))
//! ```
//!
//! where `h` is the relative size of `s_uv` among all non-empty pair sets of
//! the document, `f` decays with the gap between the two positions and `g`
//! corrects for very frequent pairs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("document `{id}` has fewer than two distinct in-vocabulary tokens")]
    TooFewDistinctTokens { id: String },
    #[error("document `{id}` has a single non-empty collocation set; its association matrix is identically zero")]
    DegenerateDocument { id: String },
    #[error("collocation pairs need two distinct tokens, got `{0}` twice")]
    SameToken(String),
    #[error("matrix dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({u}, {v}) lies outside a {dim}x{dim} matrix")]
    OutOfBounds { u: usize, v: usize, dim: usize },
    #[error("diagonal entry ({0}, {0}) is not allowed")]
    Diagonal(usize),
    #[error("weight {weight} at ({u}, {v}) is negative or not finite")]
    InvalidWeight { u: usize, v: usize, weight: f64 },
    #[error("invalid association parameter: {0}")]
    InvalidParams(String),
    #[error("cannot aggregate an empty list of matrices")]
    NothingToAggregate,
    #[error("duplicate token `{0}` in vocabulary")]
    DuplicateToken(String),
}

/// A document: the ordered tokens of one member of the data collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Document {
    pub fn new<S: Into<String>>(id: impl Into<String>, tokens: impl IntoIterator<Item = S>) -> Self {
        Document {
            id: id.into(),
            tokens: tokens.into_iter().map(Into::into).collect(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Bijective token <-> dense index map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from arbitrary tokens; indices follow lexicographic
    /// token order so the result does not depend on input order.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut sorted: Vec<String> = tokens.into_iter().map(|t| t.as_ref().to_owned()).collect();
        sorted.sort_unstable();
        sorted.dedup();
        Self::from_ordered(sorted).expect("deduplicated")
    }

    pub fn from_documents(docs: &[Document]) -> Self {
        Self::from_tokens(docs.iter().flat_map(|d| d.tokens.iter()))
    }

    /// Keeps the given order; fails on duplicates.
    pub fn from_ordered(tokens: Vec<String>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(CorpusError::DuplicateToken(t.clone()));
            }
        }
        Ok(Vocabulary { index, tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Hook applied to every surviving token (e.g. a stemmer).
pub type TokenHook = Arc<dyn Fn(&str) -> String + Send + Sync>;

#[derive(Clone, Default)]
pub struct TokenizerConfig {
    pub stop_words: HashSet<String>,
    pub stemmer: Option<TokenHook>,
}

impl fmt::Debug for TokenizerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TokenizerConfig")
            .field("stop_words", &self.stop_words.len())
            .field("stemmer", &self.stemmer.is_some())
            .finish()
    }
}

impl TokenizerConfig {
    pub fn with_stop_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TokenizerConfig {
            stop_words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
            stemmer: None,
        }
    }
}

/// Lowercases, deletes punctuation, splits on whitespace, removes stop words
/// and finally applies the stemming hook when one is configured.
pub fn tokenize(raw_text: &str, config: &TokenizerConfig) -> Vec<String> {
    let cleaned: String = raw_text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned
        .split_whitespace()
        .filter(|t| !config.stop_words.contains(*t))
        .map(|t| match &config.stemmer {
            Some(stem) => stem(t),
            None => t.to_owned(),
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// 1-based, ascending occurrence positions of every token of the document.
pub fn occurrence_positions(doc: &Document) -> BTreeMap<&str, Vec<usize>> {
    let mut positions: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in doc.tokens.iter().enumerate() {
        positions.entry(t.as_str()).or_default().push(i + 1);
    }
    positions
}

/// The collocation set `s_uv` as 1-based `(i, j)` occurrence-index pairs.
///
/// Each occurrence `j` of `v` pairs with the last occurrence of `u` before it,
/// if any; that is the only `i` with `p_u(i) < p_v(j) < p_u(i + 1)`.
pub fn collocation_pairs(doc: &Document, u: &str, v: &str) -> Result<Vec<(usize, usize)>, CorpusError> {
    if u == v {
        return Err(CorpusError::SameToken(u.to_owned()));
    }
    let positions = occurrence_positions(doc);
    let (Some(pu), Some(pv)) = (positions.get(u), positions.get(v)) else {
        return Ok(Vec::new());
    };
    Ok(pv
        .iter()
        .enumerate()
        .filter_map(|(j, &p)| {
            let i = pu.partition_point(|&q| q < p);
            (i > 0).then_some((i, j + 1))
        })
        .collect())
}

/// The pair of functions shaping association weights: `f` as a function of
/// the gap `j - i - 1` between two positions, and `g` of the relative
/// frequency `h`.
pub trait AssociationKernel {
    fn decay(&self, gap: usize) -> f64;
    fn normalize(&self, relative_frequency: f64) -> f64;
}

/// Default kernel: `f = exp(-gap^beta / sigma)` and `g(x) = -ln x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssocParams {
    pub beta: f64,
    pub sigma: f64,
}

impl Default for AssocParams {
    fn default() -> Self {
        AssocParams { beta: 1.0, sigma: 1.0 }
    }
}

impl AssocParams {
    pub fn new(beta: f64, sigma: f64) -> Result<Self, CorpusError> {
        let p = AssocParams { beta, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(CorpusError::InvalidParams(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(CorpusError::InvalidParams(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

impl AssociationKernel for AssocParams {
    fn decay(&self, gap: usize) -> f64 {
        (-(gap as f64).powf(self.beta) / self.sigma).exp()
    }

    fn normalize(&self, relative_frequency: f64) -> f64 {
        -relative_frequency.ln()
    }
}

/// Sparse non-negative matrix over vocabulary indices with an empty diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMatrix {
    dim: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl AssociationMatrix {
    pub fn new(dim: usize) -> Self {
        AssociationMatrix { dim, entries: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.entries.get(&(u, v)).copied().unwrap_or(0.0)
    }

    fn check(&self, u: usize, v: usize, weight: f64) -> Result<(), CorpusError> {
        if u >= self.dim || v >= self.dim {
            return Err(CorpusError::OutOfBounds { u, v, dim: self.dim });
        }
        if u == v {
            return Err(CorpusError::Diagonal(u));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(CorpusError::InvalidWeight { u, v, weight });
        }
        Ok(())
    }

    /// Sets an entry. Zero weights remove the entry.
    pub fn insert(&mut self, u: usize, v: usize, weight: f64) -> Result<(), CorpusError> {
        self.check(u, v, weight)?;
        if weight == 0.0 {
            self.entries.remove(&(u, v));
        } else {
            self.entries.insert((u, v), weight);
        }
        Ok(())
    }

    /// Adds to an entry.
    pub fn accumulate(&mut self, u: usize, v: usize, weight: f64) -> Result<(), CorpusError> {
        self.check(u, v, weight)?;
        if weight != 0.0 {
            *self.entries.entry((u, v)).or_insert(0.0) += weight;
        }
        Ok(())
    }

    /// Stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(u, v), &w)| (u, v, w))
    }
}

/// `K(k)` for one document with the default kernel.
pub fn assoc_matrix(doc: &Document, params: &AssocParams, vocab: &Vocabulary) -> Result<AssociationMatrix, CorpusError> {
    params.validate()?;
    assoc_matrix_with(doc, vocab, params)
}

/// `K(k)` for one document with a custom kernel.
///
/// Tokens outside the vocabulary are dropped first, and positions are
/// renumbered over the remaining tokens.
pub fn assoc_matrix_with<K>(doc: &Document, vocab: &Vocabulary, kernel: &K) -> Result<AssociationMatrix, CorpusError>
where
    K: AssociationKernel + ?Sized,
{
    let seq: Vec<usize> = doc.tokens.iter().filter_map(|t| vocab.index_of(t)).collect();

    // (token, last position) for tokens seen so far, in first-seen order.
    let mut last_seen: Vec<(usize, usize)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    // (u, v) -> (|s_uv|, sum of f over s_uv)
    let mut pairs: BTreeMap<(usize, usize), (usize, f64)> = BTreeMap::new();

    for (offset, &v) in seq.iter().enumerate() {
        let pos = offset + 1;
        for &(u, last) in &last_seen {
            if u == v {
                continue;
            }
            let acc = pairs.entry((u, v)).or_insert((0, 0.0));
            acc.0 += 1;
            acc.1 += kernel.decay(pos - last - 1);
        }
        match slot.get(&v) {
            Some(&s) => last_seen[s].1 = pos,
            None => {
                slot.insert(v, last_seen.len());
                last_seen.push((v, pos));
            }
        }
    }

    if last_seen.len() < 2 {
        return Err(CorpusError::TooFewDistinctTokens { id: doc.id.clone() });
    }
    if pairs.len() == 1 {
        return Err(CorpusError::DegenerateDocument { id: doc.id.clone() });
    }

    let total: usize = pairs.values().map(|&(count, _)| count).sum();
    let mut matrix = AssociationMatrix::new(vocab.len());
    for ((u, v), (count, decay_sum)) in pairs {
        let h = count as f64 / total as f64;
        matrix.insert(u, v, kernel.normalize(h) * decay_sum)?;
    }
    Ok(matrix)
}

/// `K(Sigma)`: element-wise sum, accumulated in list order.
pub fn aggregate(matrices: &[AssociationMatrix]) -> Result<AssociationMatrix, CorpusError> {
    let first = matrices.first().ok_or(CorpusError::NothingToAggregate)?;
    let mut total = AssociationMatrix::new(first.dim);
    for m in matrices {
        if m.dim != first.dim {
            return Err(CorpusError::DimensionMismatch { expected: first.dim, found: m.dim });
        }
        for (u, v, w) in m.iter() {
            total.accumulate(u, v, w)?;
        }
    }
    Ok(total)
}
