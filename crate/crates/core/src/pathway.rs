//! Pathway extraction between a source set and a sink set.
//!
//! Sources diffuse forward and sinks diffuse on the reverse graph; the
//! Hadamard product of the two fingerprints highlights nodes lying between
//! them. Dividing by the global forward and reverse PageRank demotes hubs.
//! Nodes are then added in score order until the sources and sinks are
//! weakly connected.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusion::{global_pagerank, ppr, uniform_seed, DiffusionConfig, DiffusionError, Fingerprint};
use crate::graph::{multi_source_bfs, transition_view, Direction, DomainGraph, TransitionView};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PathwayError {
    #[error("invalid pathway instance `{id}`: {reason}")]
    InvalidInstance { id: String, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("global rank of node {node} is not strictly positive")]
    ZeroDenominator { node: usize },
    #[error("no weakly connected pathway joins the sources and sinks within {limit} nodes")]
    NoPathway { limit: usize },
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
}

/// An annotated pathway: its sources, sinks and full member set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathwayInstance {
    pub id: String,
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
    pub annotated: Vec<usize>,
}

impl PathwayInstance {
    /// Sorts and deduplicates the node sets and checks that sources and sinks
    /// are non-empty, disjoint, annotated and inside a graph of `node_count`
    /// nodes.
    pub fn new(
        id: impl Into<String>,
        sources: Vec<usize>,
        sinks: Vec<usize>,
        annotated: Vec<usize>,
        node_count: usize,
    ) -> Result<Self, PathwayError> {
        let id = id.into();
        let invalid = |reason: &str| PathwayError::InvalidInstance { id: id.clone(), reason: reason.to_owned() };
        let norm = |mut v: Vec<usize>| {
            v.sort_unstable();
            v.dedup();
            v
        };
        let (sources, sinks, annotated) = (norm(sources), norm(sinks), norm(annotated));
        if sources.is_empty() || sinks.is_empty() {
            return Err(invalid("sources and sinks must be non-empty"));
        }
        if sources.iter().any(|s| sinks.binary_search(s).is_ok()) {
            return Err(invalid("sources and sinks overlap"));
        }
        if sources.iter().chain(&sinks).any(|u| annotated.binary_search(u).is_err()) {
            return Err(invalid("sources and sinks must be annotated members"));
        }
        if annotated.iter().any(|&u| u >= node_count) {
            return Err(invalid("node outside the graph"));
        }
        Ok(PathwayInstance { id, sources, sinks, annotated })
    }

    /// Sources and sinks together.
    pub fn seeds(&self) -> BTreeSet<usize> {
        self.sources.iter().chain(&self.sinks).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Combined,
    Boosted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub values: Vec<f64>,
    pub kind: ScoreKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredPathway {
    /// Members of the weak component joining the seeds, sorted.
    pub nodes: Vec<usize>,
    /// Arcs of the graph induced on `nodes`.
    pub arcs: Vec<(usize, usize)>,
    /// Candidate count at which the seeds first became weakly connected.
    pub n_w: usize,
    /// Score of each node in `nodes`.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub ppv: f64,
    pub tpr: f64,
    pub acc_g: f64,
}

/// Component-wise product of the forward fingerprint of the sources and the
/// reverse fingerprint of the sinks.
pub fn combined_df(pi_sources: &Fingerprint, pi_sinks_rev: &Fingerprint) -> Result<ScoreVector, PathwayError> {
    if pi_sources.len() != pi_sinks_rev.len() {
        return Err(PathwayError::DimensionMismatch { expected: pi_sources.len(), found: pi_sinks_rev.len() });
    }
    Ok(ScoreVector {
        values: pi_sources.values.iter().zip(&pi_sinks_rev.values).map(|(a, b)| a * b).collect(),
        kind: ScoreKind::Combined,
    })
}

/// Divides combined scores by the product of the global forward and reverse
/// PageRank, component-wise. The quotient is formed in log space; zero scores
/// stay zero.
pub fn boost(combined: &ScoreVector, pr_fwd: &Fingerprint, pr_rev: &Fingerprint) -> Result<ScoreVector, PathwayError> {
    let n = combined.values.len();
    for other in [pr_fwd.len(), pr_rev.len()] {
        if other != n {
            return Err(PathwayError::DimensionMismatch { expected: n, found: other });
        }
    }
    if let Some(node) = (0..n).find(|&u| !(pr_fwd.values[u] > 0.0 && pr_rev.values[u] > 0.0)) {
        return Err(PathwayError::ZeroDenominator { node });
    }
    let values = combined
        .values
        .iter()
        .zip(pr_fwd.values.iter().zip(&pr_rev.values))
        .map(|(&c, (&f, &r))| if c > 0.0 { (c.ln() - f.ln() - r.ln()).exp() } else { 0.0 })
        .collect();
    Ok(ScoreVector { values, kind: ScoreKind::Boosted })
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut u: usize) -> usize {
        while self.parent[u] != u {
            self.parent[u] = self.parent[self.parent[u]];
            u = self.parent[u];
        }
        u
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Grows the candidate set one node at a time, sources and sinks first and
/// then by descending score (ties by ascending index), until every seed lies
/// in one weakly connected component of the induced subgraph.
///
/// `n_max` caps the candidate count; `None` scans the whole graph.
pub fn select_pathway(
    scores: &ScoreVector,
    graph: &DomainGraph,
    sources: &[usize],
    sinks: &[usize],
    n_max: Option<usize>,
) -> Result<InferredPathway, PathwayError> {
    let n = graph.node_count();
    if scores.values.len() != n {
        return Err(PathwayError::DimensionMismatch { expected: n, found: scores.values.len() });
    }
    let seeds: BTreeSet<usize> = sources.iter().chain(sinks).copied().collect();
    if let Some(&bad) = seeds.iter().find(|&&u| u >= n) {
        return Err(PathwayError::Diffusion(DiffusionError::UnknownNode(bad)));
    }
    if seeds.is_empty() {
        return Err(PathwayError::Diffusion(DiffusionError::EmptySet));
    }

    let mut order: Vec<usize> = (0..n).filter(|u| !seeds.contains(u)).collect();
    order.sort_by(|&a, &b| scores.values[b].total_cmp(&scores.values[a]).then(a.cmp(&b)));

    let limit = n_max.unwrap_or(n).min(n);
    let mut included = vec![false; n];
    let mut dsu = DisjointSet::new(n);
    let add = |u: usize, included: &mut Vec<bool>, dsu: &mut DisjointSet| {
        included[u] = true;
        for &w in graph.out_neighbors(u).iter().chain(graph.in_neighbors(u)) {
            if included[w] {
                dsu.union(u, w);
            }
        }
    };
    for &s in &seeds {
        add(s, &mut included, &mut dsu);
    }
    let anchor = *seeds.iter().next().expect("non-empty");
    let connected = |dsu: &mut DisjointSet| {
        let root = dsu.find(anchor);
        seeds.iter().all(|&s| dsu.find(s) == root)
    };

    let mut count = seeds.len();
    let mut next = order.iter();
    while !connected(&mut dsu) {
        if count >= limit {
            return Err(PathwayError::NoPathway { limit });
        }
        let &u = next.next().expect("candidates remain while count < node count");
        add(u, &mut included, &mut dsu);
        count += 1;
    }

    let root = dsu.find(anchor);
    let nodes: Vec<usize> = (0..n).filter(|&u| included[u] && dsu.find(u) == root).collect();
    let arcs = nodes
        .iter()
        .flat_map(|&u| graph.out_neighbors(u).iter().map(move |&v| (u, v)))
        .filter(|&(_, v)| nodes.binary_search(&v).is_ok())
        .collect();
    let node_scores = nodes.iter().map(|&u| scores.values[u]).collect();
    Ok(InferredPathway { nodes, arcs, n_w: count, scores: node_scores })
}

/// Precision, recall and their geometric mean over non-seed nodes.
pub fn evaluate(inferred: &InferredPathway, instance: &PathwayInstance) -> EvalReport {
    let seeds = instance.seeds();
    let predicted: BTreeSet<usize> = inferred.nodes.iter().copied().filter(|u| !seeds.contains(u)).collect();
    let truth: BTreeSet<usize> = instance.annotated.iter().copied().filter(|u| !seeds.contains(u)).collect();
    let tp = predicted.intersection(&truth).count();
    let fp = predicted.len() - tp;
    let fn_ = truth.len() - tp;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let ppv = ratio(tp, tp + fp);
    let tpr = ratio(tp, tp + fn_);
    EvalReport { tp, fp, fn_, ppv, tpr, acc_g: (ppv * tpr).sqrt() }
}

/// Shortest directed distance from any source to any sink.
pub fn min_pathway_length(instance: &PathwayInstance, graph: &DomainGraph) -> Option<usize> {
    let dist = multi_source_bfs(graph, &instance.sources, Direction::Forward);
    instance.sinks.iter().filter_map(|&t| dist[t]).min()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathwayOptions {
    pub diffusion: DiffusionConfig,
    /// Candidate cap for selection; `None` scans every node.
    pub n_max: Option<usize>,
    /// Divide by global PageRank before selection.
    pub boosting: bool,
}

impl Default for PathwayOptions {
    fn default() -> Self {
        PathwayOptions { diffusion: DiffusionConfig::default(), n_max: None, boosting: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayOutcome {
    pub inferred: InferredPathway,
    pub report: EvalReport,
}

/// Runs pathway inference against one graph, computing the global forward
/// and reverse PageRank vectors once and sharing them across instances.
pub struct PathwayEngine<'g> {
    graph: &'g DomainGraph,
    forward: TransitionView<'g>,
    reverse: TransitionView<'g>,
    global: Option<(Fingerprint, Fingerprint)>,
    options: PathwayOptions,
}

impl<'g> PathwayEngine<'g> {
    pub fn new(graph: &'g DomainGraph, options: PathwayOptions) -> Result<Self, PathwayError> {
        options.diffusion.validate()?;
        let forward = transition_view(graph, Direction::Forward);
        let reverse = transition_view(graph, Direction::Reverse);
        let global = if options.boosting {
            Some((global_pagerank(&forward, &options.diffusion)?, global_pagerank(&reverse, &options.diffusion)?))
        } else {
            None
        };
        Ok(PathwayEngine { graph, forward, reverse, global, options })
    }

    pub fn options(&self) -> &PathwayOptions {
        &self.options
    }

    /// Selection scores for an instance: combined, then boosted if enabled.
    pub fn scores(&self, instance: &PathwayInstance) -> Result<ScoreVector, PathwayError> {
        let from_sources = ppr(&self.forward, &uniform_seed(self.graph, &instance.sources)?, &self.options.diffusion)?;
        let from_sinks = ppr(&self.reverse, &uniform_seed(self.graph, &instance.sinks)?, &self.options.diffusion)?;
        let combined = combined_df(&from_sources, &from_sinks)?;
        match &self.global {
            Some((fwd, rev)) => boost(&combined, fwd, rev),
            None => Ok(combined),
        }
    }

    pub fn infer(&self, instance: &PathwayInstance) -> Result<PathwayOutcome, PathwayError> {
        let scores = self.scores(instance)?;
        let inferred = select_pathway(&scores, self.graph, &instance.sources, &instance.sinks, self.options.n_max)?;
        let report = evaluate(&inferred, instance);
        Ok(PathwayOutcome { inferred, report })
    }

    /// Independent instances in parallel; results follow input order.
    pub fn infer_all(&self, instances: &[PathwayInstance]) -> Vec<Result<PathwayOutcome, PathwayError>> {
        instances.par_iter().map(|inst| self.infer(inst)).collect()
    }
}

/// One-shot inference with boosting enabled.
pub fn infer(
    instance: &PathwayInstance,
    graph: &DomainGraph,
    cfg: &DiffusionConfig,
    n_max: Option<usize>,
) -> Result<PathwayOutcome, PathwayError> {
    PathwayEngine::new(graph, PathwayOptions { diffusion: *cfg, n_max, boosting: true })?.infer(instance)
}
