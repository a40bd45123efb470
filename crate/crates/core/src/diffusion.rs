//! Personalized PageRank diffusion fingerprints.
//!
//! A fingerprint is the iterate of
//!
//! ```text
//! x(t + 1) = alpha * v + (1 - alpha) * x(t) P,    x(0) = v
//! ```
//!
//! where `v` is a seed distribution and `P` the row-stochastic transition
//! matrix of a [`TransitionView`]. Mass sitting on a dangling node restarts
//! at `v`, so every iterate stays a probability vector.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::graph::{DomainGraph, TransitionView};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DiffusionError {
    #[error("invalid diffusion config: {0}")]
    InvalidConfig(String),
    #[error("document `{0}` has no token in the graph")]
    NoSupport(String),
    #[error("seed set is empty")]
    EmptySet,
    #[error("node {0} is not in the graph")]
    UnknownNode(usize),
    #[error("seed mass for node {node} is negative or not finite: {mass}")]
    InvalidMass { node: usize, mass: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
}

/// Sparse seed distribution over graph nodes. Masses are positive and sum to
/// one.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonalizationVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
    coverage: f64,
}

impl PersonalizationVector {
    /// Normalizes non-negative weights into a distribution. Repeated nodes
    /// accumulate; zero weights are dropped.
    pub fn from_weights<I>(dim: usize, weights: I) -> Result<Self, DiffusionError>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (node, mass) in weights {
            if node >= dim {
                return Err(DiffusionError::UnknownNode(node));
            }
            if !(mass >= 0.0 && mass.is_finite()) {
                return Err(DiffusionError::InvalidMass { node, mass });
            }
            if mass > 0.0 {
                *acc.entry(node).or_insert(0.0) += mass;
            }
        }
        let total: f64 = acc.values().sum();
        if total <= 0.0 {
            return Err(DiffusionError::EmptySet);
        }
        Ok(PersonalizationVector {
            dim,
            entries: acc.into_iter().map(|(u, m)| (u, m / total)).collect(),
            coverage: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(node, mass)` pairs sorted by node.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(u, _)| u)
    }

    pub fn mass(&self, node: usize) -> f64 {
        self.entries
            .binary_search_by_key(&node, |&(u, _)| u)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Fraction of the document's distinct tokens that are graph nodes
    /// (1 for seeds not built from a document).
    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &(u, m) in &self.entries {
            dense[u] = m;
        }
        dense
    }
}

/// Seed distribution of a document: token frequencies restricted to the
/// tokens that are graph nodes, renormalized.
pub fn personalization_vector(doc: &Document, graph: &DomainGraph) -> Result<PersonalizationVector, DiffusionError> {
    let vocab = graph.vocab();
    let mut distinct: BTreeSet<&str> = BTreeSet::new();
    let mut in_graph: BTreeSet<usize> = BTreeSet::new();
    let mut counts: Vec<(usize, f64)> = Vec::with_capacity(doc.tokens.len());
    for t in &doc.tokens {
        distinct.insert(t);
        if let Some(u) = vocab.index_of(t) {
            in_graph.insert(u);
            counts.push((u, 1.0));
        }
    }
    if counts.is_empty() {
        return Err(DiffusionError::NoSupport(doc.id.clone()));
    }
    let mut pv = PersonalizationVector::from_weights(graph.node_count(), counts)?;
    pv.coverage = in_graph.len() as f64 / distinct.len() as f64;
    Ok(pv)
}

/// Uniform seed over a node set.
pub fn uniform_seed(graph: &DomainGraph, nodes: &[usize]) -> Result<PersonalizationVector, DiffusionError> {
    if nodes.is_empty() {
        return Err(DiffusionError::EmptySet);
    }
    if let Some(&bad) = nodes.iter().find(|&&u| u >= graph.node_count()) {
        return Err(DiffusionError::UnknownNode(bad));
    }
    let unique: BTreeSet<usize> = nodes.iter().copied().collect();
    PersonalizationVector::from_weights(graph.node_count(), unique.into_iter().map(|u| (u, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    /// Jumping constant: restart probability per step, in (0, 1].
    pub alpha: f64,
    /// L1 change below which the iteration stops.
    pub tol: f64,
    pub max_iters: usize,
    /// Run exactly this many steps and skip the tolerance test.
    pub fixed_steps: Option<usize>,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig { alpha: 0.15, tol: 1e-10, max_iters: 1000, fixed_steps: None }
    }
}

impl DiffusionConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        DiffusionConfig { alpha, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), DiffusionError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(DiffusionError::InvalidConfig(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(DiffusionError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(DiffusionError::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub values: Vec<f64>,
    pub alpha: f64,
    pub iterations: usize,
    /// L1 change of the last step.
    pub residual: f64,
    pub converged: bool,
}

impl Fingerprint {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn ppr(view: &TransitionView<'_>, v: &PersonalizationVector, cfg: &DiffusionConfig) -> Result<Fingerprint, DiffusionError> {
    ppr_observed(view, v, cfg, |_, _| {})
}

/// [`ppr`] with a callback receiving `(iteration, residual)` after each step.
pub fn ppr_observed<F>(
    view: &TransitionView<'_>,
    v: &PersonalizationVector,
    cfg: &DiffusionConfig,
    mut observer: F,
) -> Result<Fingerprint, DiffusionError>
where
    F: FnMut(usize, f64),
{
    cfg.validate()?;
    let n = view.node_count();
    if v.dim() != n {
        return Err(DiffusionError::DimensionMismatch { expected: n, found: v.dim() });
    }
    let alpha = cfg.alpha;
    let mut x = v.to_dense();
    let mut next = vec![0.0; n];
    let steps = cfg.fixed_steps.unwrap_or(cfg.max_iters);
    let mut iterations = 0;
    let mut residual = 0.0;
    let mut converged = false;

    while iterations < steps {
        next.fill(0.0);
        let mut dangling = 0.0;
        for (u, &xu) in x.iter().enumerate() {
            if xu == 0.0 {
                continue;
            }
            let succ = view.successors(u);
            if succ.is_empty() {
                dangling += xu;
            } else {
                let share = xu / succ.len() as f64;
                for &w in succ {
                    next[w] += share;
                }
            }
        }
        let restart = alpha + (1.0 - alpha) * dangling;
        for value in next.iter_mut() {
            *value *= 1.0 - alpha;
        }
        for &(u, m) in v.entries() {
            next[u] += restart * m;
        }

        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        iterations += 1;
        observer(iterations, residual);
        converged = residual < cfg.tol;
        if converged && cfg.fixed_steps.is_none() {
            break;
        }
    }

    Ok(Fingerprint { values: x, alpha, iterations, residual, converged })
}

/// PageRank of the whole graph in the view's direction: PPR from the uniform
/// distribution over all nodes.
pub fn global_pagerank(view: &TransitionView<'_>, cfg: &DiffusionConfig) -> Result<Fingerprint, DiffusionError> {
    let n = view.node_count();
    if n == 0 {
        return Err(DiffusionError::EmptyGraph);
    }
    let uniform = PersonalizationVector::from_weights(n, (0..n).map(|u| (u, 1.0)))?;
    ppr(view, &uniform, cfg)
}

/// One [`ppr`] per seed, in parallel. Output order follows input order and
/// failures are reported per item.
pub fn batch_fingerprints(
    view: &TransitionView<'_>,
    seeds: &[PersonalizationVector],
    cfg: &DiffusionConfig,
) -> Vec<Result<Fingerprint, DiffusionError>> {
    seeds.par_iter().map(|v| ppr(view, v, cfg)).collect()
}
