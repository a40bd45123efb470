//! Feature vectors for classification: coordinate projections (central-node
//! and random), the bag-of-words null model, a nearest-centroid classifier
//! with cross-validation, and centrality diagnostics.

mod classify;
mod stats;

pub use classify::{
    centroid_classifier_predict, centroid_classifier_train, kfold_cv, train_test_split_eval, CentroidClassifier,
    CvReport, SplitReport,
};
pub use stats::{spearman, variance_centrality_report, VarianceCentrality};

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, Vocabulary};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FeatureError {
    #[error("projection dimension {d} must lie in 1..={dim}")]
    BadDimension { d: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature rows are ragged or ids/labels do not cover every row")]
    Ragged,
    #[error("rows carry no labels")]
    MissingLabels,
    #[error("{rows} rows cannot be split into {folds} folds")]
    TooFewRows { rows: usize, folds: usize },
    #[error("fold count must be at least 2, got {0}")]
    BadFolds(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMethod {
    /// The `d` most central coordinates.
    Opc,
    /// `d` coordinates sampled uniformly without replacement.
    Random,
}

/// Coordinate selection `R^dim -> R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMap {
    pub indices: Vec<usize>,
    pub source_dim: usize,
    pub method: ProjectionMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ProjectionMap {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

fn check_dimension(d: usize, dim: usize) -> Result<(), FeatureError> {
    if d == 0 || d > dim {
        return Err(FeatureError::BadDimension { d, dim });
    }
    Ok(())
}

/// Indices of the `d` largest centrality values, ties broken by ascending
/// index, reported in ascending order so that `d = dim` is the identity.
pub fn opc_projection(centrality: &[f64], d: usize) -> Result<ProjectionMap, FeatureError> {
    check_dimension(d, centrality.len())?;
    let mut order: Vec<usize> = (0..centrality.len()).collect();
    order.sort_by(|&a, &b| centrality[b].total_cmp(&centrality[a]).then(a.cmp(&b)));
    order.truncate(d);
    order.sort_unstable();
    Ok(ProjectionMap { indices: order, source_dim: centrality.len(), method: ProjectionMethod::Opc, seed: None })
}

/// `d` distinct coordinates drawn uniformly, reported in ascending order.
pub fn random_projection(dim: usize, d: usize, seed: u64) -> Result<ProjectionMap, FeatureError> {
    check_dimension(d, dim)?;
    let mut rng = stream_rng(seed, Stream::RandomProjection);
    let mut indices = index::sample(&mut rng, dim, d).into_vec();
    indices.sort_unstable();
    Ok(ProjectionMap { indices, source_dim: dim, method: ProjectionMethod::Random, seed: Some(seed) })
}

/// Rows of equal-length feature vectors with ids and optional labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self, FeatureError> {
        if ids.len() != rows.len() || labels.as_ref().is_some_and(|l| l.len() != rows.len()) {
            return Err(FeatureError::Ragged);
        }
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(FeatureError::Ragged);
            }
        }
        Ok(FeatureMatrix { ids, rows, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row length (0 for an empty matrix).
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// Component-wise mean of the rows.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for row in &self.rows {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.rows.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// The rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
        }
    }
}

/// Restricts every row to the map's coordinates, in map order. Values are
/// copied, never rescaled.
pub fn project(rows: &FeatureMatrix, map: &ProjectionMap) -> Result<FeatureMatrix, FeatureError> {
    if !rows.is_empty() && rows.dim() != map.source_dim {
        return Err(FeatureError::DimensionMismatch { expected: map.source_dim, found: rows.dim() });
    }
    Ok(FeatureMatrix {
        ids: rows.ids.clone(),
        rows: rows.rows.iter().map(|r| map.indices.iter().map(|&i| r[i]).collect()).collect(),
        labels: rows.labels.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BowVector {
    pub values: Vec<f64>,
    /// No token of the document is in the vocabulary; `values` is all zero.
    pub empty: bool,
}

/// Occurrence counts per vocabulary index, normalized to sum one unless
/// `raw_counts` is set.
pub fn bow_vector(doc: &Document, vocab: &Vocabulary, raw_counts: bool) -> BowVector {
    let mut values = vec![0.0; vocab.len()];
    let mut total = 0.0;
    for u in doc.tokens.iter().filter_map(|t| vocab.index_of(t)) {
        values[u] += 1.0;
        total += 1.0;
    }
    if total > 0.0 && !raw_counts {
        values.iter_mut().for_each(|x| *x /= total);
    }
    BowVector { values, empty: total == 0.0 }
}
