//! The domain graph: an unweighted digraph keeping the strongest aggregated
//! associations, stored as forward and reverse CSR adjacency.

mod diagnostics;

pub use diagnostics::{
    critical_density_scan, directed_diameter, scc_diagnostics, shortest_path_lengths, strongly_connected_components,
    DensityScan, DensityScanRow, Diameter, SccReport,
};
pub(crate) use diagnostics::multi_source_bfs;

use std::sync::Arc;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AssociationMatrix, Vocabulary};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("association matrix is empty")]
    EmptyMatrix,
    #[error("density must lie in [0, 1], got {0}")]
    InvalidDensity(f64),
    #[error("vocabulary has {vocab} tokens but the matrix dimension is {matrix}")]
    VocabularyMismatch { vocab: usize, matrix: usize },
    #[error("arc ({0}, {1}) references a node outside the graph")]
    NodeOutOfRange(usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("density grid must be ascending")]
    UnsortedGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphWarning {
    /// Fewer non-zero associations than requested arcs; all of them were kept.
    InsufficientDensity { requested: usize, available: usize },
    /// The requested arc count rounds to zero.
    EmptyGraph,
}

impl std::fmt::Display for GraphWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphWarning::InsufficientDensity { requested, available } => write!(
                f,
                "only {available} non-zero associations for {requested} requested arcs; all of them were kept"
            ),
            GraphWarning::EmptyGraph => f.write_str("the requested density rounds to zero arcs; the graph is empty"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Csr {
    /// `arcs` must be sorted and deduplicated.
    fn from_sorted(n: usize, arcs: &[(usize, usize)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in arcs {
            offsets[u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr { offsets, targets: arcs.iter().map(|&(_, v)| v).collect() }
    }

    fn neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }
}

/// Binary directed graph over a vocabulary. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGraph {
    vocab: Arc<Vocabulary>,
    forward: Csr,
    reverse: Csr,
    gamma: Option<f64>,
    seed: Option<u64>,
    warnings: Vec<GraphWarning>,
}

impl DomainGraph {
    /// Builds a graph from explicit arcs. Duplicate arcs collapse.
    pub fn from_arcs<I>(vocab: Arc<Vocabulary>, arcs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = vocab.len();
        let mut fwd: Vec<(usize, usize)> = Vec::new();
        for (u, v) in arcs {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange(u, v));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            fwd.push((u, v));
        }
        fwd.sort_unstable();
        fwd.dedup();
        let mut rev: Vec<(usize, usize)> = fwd.iter().map(|&(u, v)| (v, u)).collect();
        rev.sort_unstable();
        Ok(DomainGraph {
            forward: Csr::from_sorted(n, &fwd),
            reverse: Csr::from_sorted(n, &rev),
            vocab,
            gamma: None,
            seed: None,
            warnings: Vec::new(),
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn shared_vocab(&self) -> Arc<Vocabulary> {
        Arc::clone(&self.vocab)
    }

    pub fn node_count(&self) -> usize {
        self.vocab.len()
    }

    pub fn edge_count(&self) -> usize {
        self.forward.targets.len()
    }

    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        self.forward.neighbors(u)
    }

    pub fn in_neighbors(&self, u: usize) -> &[usize] {
        self.reverse.neighbors(u)
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out_neighbors(u).len()
    }

    pub fn in_degree(&self, u: usize) -> usize {
        self.in_neighbors(u).len()
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out_neighbors(u).binary_search(&v).is_ok()
    }

    /// All arcs in `(source, target)` order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Density the graph was thresholded at, if it was built from associations.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn warnings(&self) -> &[GraphWarning] {
        &self.warnings
    }

    /// Same vertices, every arc reversed.
    pub fn reverse(&self) -> DomainGraph {
        DomainGraph {
            vocab: Arc::clone(&self.vocab),
            forward: self.reverse.clone(),
            reverse: self.forward.clone(),
            gamma: self.gamma,
            seed: self.seed,
            warnings: self.warnings.clone(),
        }
    }
}

/// Number of arcs kept at density `gamma`: `gamma * n * (n - 1)` rounded
/// half-to-even.
pub fn arc_budget(node_count: usize, gamma: f64) -> usize {
    let n = node_count as f64;
    (gamma * n * (n - 1.0)).round_ties_even() as usize
}

/// Keeps the `N = round(gamma * n * (n - 1))` largest off-diagonal entries of
/// `k` as arcs. Entries tied at the cut-off value are sampled uniformly with
/// the given seed; zero entries are never selected.
pub fn build_domain_graph(
    k: &AssociationMatrix,
    vocab: Arc<Vocabulary>,
    gamma: f64,
    seed: u64,
) -> Result<DomainGraph, GraphError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(GraphError::InvalidDensity(gamma));
    }
    if vocab.len() != k.dim() {
        return Err(GraphError::VocabularyMismatch { vocab: vocab.len(), matrix: k.dim() });
    }
    if k.dim() == 0 || k.nnz() == 0 {
        return Err(GraphError::EmptyMatrix);
    }

    let budget = arc_budget(k.dim(), gamma);
    let mut entries: Vec<(usize, usize, f64)> = k.iter().filter(|&(u, v, w)| u != v && w > 0.0).collect();
    entries.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));

    let mut warnings = Vec::new();
    let selected: Vec<(usize, usize)> = if budget == 0 {
        warnings.push(GraphWarning::EmptyGraph);
        Vec::new()
    } else if budget >= entries.len() {
        if budget > entries.len() {
            warnings.push(GraphWarning::InsufficientDensity { requested: budget, available: entries.len() });
        }
        entries.iter().map(|&(u, v, _)| (u, v)).collect()
    } else {
        let cutoff = entries[budget - 1].2;
        let above = entries.partition_point(|e| e.2 > cutoff);
        let tied_end = entries.partition_point(|e| e.2 >= cutoff);
        let tied = &entries[above..tied_end];
        let mut chosen: Vec<(usize, usize)> = entries[..above].iter().map(|&(u, v, _)| (u, v)).collect();
        let need = budget - above;
        if need == tied.len() {
            chosen.extend(tied.iter().map(|&(u, v, _)| (u, v)));
        } else {
            let mut rng = stream_rng(seed, Stream::ThresholdTies);
            let mut picks = index::sample(&mut rng, tied.len(), need).into_vec();
            picks.sort_unstable();
            chosen.extend(picks.into_iter().map(|i| (tied[i].0, tied[i].1)));
        }
        chosen
    };

    let mut graph = DomainGraph::from_arcs(vocab, selected)?;
    graph.gamma = Some(gamma);
    graph.seed = Some(seed);
    graph.warnings = warnings;
    Ok(graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Walk along arcs: `P = D_out^-1 A`.
    Forward,
    /// Walk against arcs, i.e. on the reverse graph.
    Reverse,
}

/// Row-stochastic transition structure of a graph in one direction.
///
/// Row `u` is uniform over the successors of `u` in the chosen direction.
/// Nodes without successors are dangling and have an empty row.
#[derive(Debug, Clone)]
pub struct TransitionView<'g> {
    graph: &'g DomainGraph,
    direction: Direction,
    dangling: Vec<usize>,
}

impl<'g> TransitionView<'g> {
    pub fn new(graph: &'g DomainGraph, direction: Direction) -> Self {
        let mut view = TransitionView { graph, direction, dangling: Vec::new() };
        view.dangling = (0..graph.node_count()).filter(|&u| view.successors(u).is_empty()).collect();
        view
    }

    pub fn graph(&self) -> &'g DomainGraph {
        self.graph
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn successors(&self, u: usize) -> &'g [usize] {
        match self.direction {
            Direction::Forward => self.graph.out_neighbors(u),
            Direction::Reverse => self.graph.in_neighbors(u),
        }
    }

    pub fn dangling(&self) -> &[usize] {
        &self.dangling
    }

    pub fn is_dangling(&self, u: usize) -> bool {
        self.dangling.binary_search(&u).is_ok()
    }

    /// Non-zero entries of row `u` of the transition matrix.
    pub fn row(&self, u: usize) -> Vec<(usize, f64)> {
        let succ = self.successors(u);
        let p = 1.0 / succ.len() as f64;
        succ.iter().map(|&v| (v, p)).collect()
    }
}

pub fn transition_view(graph: &DomainGraph, direction: Direction) -> TransitionView<'_> {
    TransitionView::new(graph, direction)
}
