//! Structural diagnostics: strongly connected components, directed diameter
//! and the density scan used to locate the critical density.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{build_domain_graph, Direction, DomainGraph, GraphError};
use crate::corpus::{AssociationMatrix, Vocabulary};
use crate::rng::{stream_rng, Stream};

/// Strongly connected components (iterative Tarjan). Components come out in
/// reverse topological order; nodes inside a component are sorted.
pub fn strongly_connected_components(graph: &DomainGraph) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = graph.node_count();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut components = Vec::new();
    let mut next_index = 0usize;
    // (node, position in its neighbor list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(frame) = call.last_mut() {
            let u = frame.0;
            let succ = graph.out_neighbors(u);
            if frame.1 < succ.len() {
                let v = succ[frame.1];
                frame.1 += 1;
                if index[v] == UNVISITED {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[u]);
            }
            if low[u] == index[u] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    component.push(w);
                    if w == u {
                        break;
                    }
                }
                component.sort_unstable();
                components.push(component);
            }
        }
    }
    components
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SccReport {
    pub num_sccs: usize,
    pub giant_scc_fraction: f64,
    pub is_single_scc: bool,
}

pub fn scc_diagnostics(graph: &DomainGraph) -> SccReport {
    let components = strongly_connected_components(graph);
    let n = graph.node_count();
    let largest = components.iter().map(Vec::len).max().unwrap_or(0);
    SccReport {
        num_sccs: components.len(),
        giant_scc_fraction: if n == 0 { 0.0 } else { largest as f64 / n as f64 },
        is_single_scc: n > 0 && components.len() == 1,
    }
}

/// BFS hop counts from `source` following arcs in `direction`; `None` when
/// unreachable.
pub fn shortest_path_lengths(graph: &DomainGraph, source: usize, direction: Direction) -> Vec<Option<usize>> {
    multi_source_bfs(graph, &[source], direction)
}

pub(crate) fn multi_source_bfs(graph: &DomainGraph, sources: &[usize], direction: Direction) -> Vec<Option<usize>> {
    let mut dist = vec![None; graph.node_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("queued nodes have a distance");
        let succ = match direction {
            Direction::Forward => graph.out_neighbors(u),
            Direction::Reverse => graph.in_neighbors(u),
        };
        for &v in succ {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Directed diameter.
///
/// When the graph is not strongly connected some pairs are unreachable; the
/// length is then the diameter of the largest strongly connected component
/// and `strongly_connected` is false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diameter {
    pub length: usize,
    /// Computed from a sample of BFS sources; the true diameter may be larger.
    pub lower_bound: bool,
    pub strongly_connected: bool,
    /// Number of nodes the diameter was measured over.
    pub component_size: usize,
}

impl Diameter {
    pub fn is_unreachable(&self) -> bool {
        !self.strongly_connected
    }
}

/// Exact all-source BFS when the measured component has at most
/// `exact_threshold` nodes, otherwise BFS from `exact_threshold` seeded random
/// sources (at least one), flagged as a lower bound.
pub fn directed_diameter(graph: &DomainGraph, exact_threshold: usize, seed: u64) -> Diameter {
    let components = strongly_connected_components(graph);
    let Some(giant) = components
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
    else {
        return Diameter { length: 0, lower_bound: false, strongly_connected: false, component_size: 0 };
    };
    let strongly_connected = components.len() == 1;

    let (sources, lower_bound): (Vec<usize>, bool) = if giant.len() <= exact_threshold {
        (giant.clone(), false)
    } else {
        let mut rng = stream_rng(seed, Stream::DiameterSampling);
        let mut picks = index::sample(&mut rng, giant.len(), exact_threshold.max(1)).into_vec();
        picks.sort_unstable();
        (picks.into_iter().map(|i| giant[i]).collect(), true)
    };

    // Shortest paths between members of one SCC never leave it, so plain BFS
    // over the whole graph restricted to member targets is exact.
    let mut member = vec![false; graph.node_count()];
    for &u in giant {
        member[u] = true;
    }
    let length = sources
        .iter()
        .map(|&s| {
            shortest_path_lengths(graph, s, Direction::Forward)
                .iter()
                .enumerate()
                .filter(|&(v, _)| member[v])
                .filter_map(|(_, d)| *d)
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0);

    Diameter { length, lower_bound, strongly_connected, component_size: giant.len() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityScanRow {
    pub gamma: f64,
    pub edge_count: usize,
    #[serde(flatten)]
    pub scc: SccReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityScan {
    pub rows: Vec<DensityScanRow>,
    /// Smallest grid density whose graph is a single SCC (or whose giant
    /// component reaches the cutoff, when one is given).
    pub critical_gamma: Option<f64>,
}

pub fn critical_density_scan(
    k: &AssociationMatrix,
    vocab: Arc<Vocabulary>,
    gamma_grid: &[f64],
    seed: u64,
    giant_cutoff: Option<f64>,
) -> Result<DensityScan, GraphError> {
    if gamma_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(GraphError::UnsortedGrid);
    }
    let mut rows = Vec::with_capacity(gamma_grid.len());
    for &gamma in gamma_grid {
        let graph = build_domain_graph(k, Arc::clone(&vocab), gamma, seed)?;
        rows.push(DensityScanRow { gamma, edge_count: graph.edge_count(), scc: scc_diagnostics(&graph) });
    }
    let critical_gamma = rows
        .iter()
        .find(|r| r.scc.is_single_scc || giant_cutoff.is_some_and(|c| r.scc.giant_scc_fraction >= c))
        .map(|r| r.gamma);
    Ok(DensityScan { rows, critical_gamma })
}
