//! Independent reference implementations and synthetic data generators
//! shared by the integration tests. The oracles work on plain arc lists and
//! dense matrices and never call the code they check.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use dfp_core::corpus::{Document, Vocabulary};
use dfp_core::graph::DomainGraph;
use dfp_core::pathway::PathwayInstance;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ------------------------------------------------------------------ graphs

pub fn node_name(i: usize) -> String {
    format!("n{i:03}")
}

pub fn vocab_of(n: usize) -> Arc<Vocabulary> {
    Arc::new(Vocabulary::from_tokens((0..n).map(node_name)))
}

pub fn graph_of(n: usize, arcs: &[(usize, usize)]) -> DomainGraph {
    DomainGraph::from_arcs(vocab_of(n), arcs.iter().copied()).unwrap()
}

/// Erdős–Rényi style digraph without self-loops. With `dangling` a random
/// fifth of the nodes lose all out-arcs.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize, density: f64, dangling: bool) -> Vec<(usize, usize)> {
    let sinks: Vec<bool> = (0..n).map(|_| dangling && rng.random_bool(0.2)).collect();
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && !sinks[u] && rng.random_bool(density) {
                arcs.push((u, v));
            }
        }
    }
    arcs
}

// --------------------------------------------------------- dense algebra

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Row-stochastic walk matrix of the arc list (`reverse` walks arcs
/// backwards), with every row that has no successor replaced by `v`.
pub fn walk_matrix(n: usize, arcs: &[(usize, usize)], reverse: bool, v: &[f64]) -> Vec<Vec<f64>> {
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in arcs {
        if reverse {
            succ[b].push(a);
        } else {
            succ[a].push(b);
        }
    }
    (0..n)
        .map(|u| {
            if succ[u].is_empty() {
                v.to_vec()
            } else {
                let mut row = vec![0.0; n];
                for &w in &succ[u] {
                    row[w] += 1.0 / succ[u].len() as f64;
                }
                row
            }
        })
        .collect()
}

/// Fixed point of `x = alpha v + (1 - alpha) x P`, i.e. the solution of
/// `(I - (1 - alpha) P)^T x^T = alpha v^T`.
pub fn dense_ppr(n: usize, arcs: &[(usize, usize)], reverse: bool, v: &[f64], alpha: f64) -> Vec<f64> {
    let p = walk_matrix(n, arcs, reverse, v);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j)) - (1.0 - alpha) * p[j][i]).collect())
        .collect();
    solve_dense(a, v.iter().map(|x| alpha * x).collect())
}

/// All-pairs hop distances.
pub fn floyd_warshall(n: usize, arcs: &[(usize, usize)]) -> Vec<Vec<Option<usize>>> {
    let mut d = vec![vec![None; n]; n];
    for (u, row) in d.iter_mut().enumerate() {
        row[u] = Some(0);
    }
    for &(u, v) in arcs {
        d[u][v] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(kj) = d[k][j] {
                    if d[i][j].is_none_or(|ij| ik + kj < ij) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d
}

/// Strongly connected components as the classes of mutual reachability,
/// each sorted, listed by smallest member.
pub fn scc_by_reachability(n: usize, arcs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let d = floyd_warshall(n, arcs);
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for u in 0..n {
        if seen[u] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&v| d[u][v].is_some() && d[v][u].is_some()).collect();
        for &v in &class {
            seen[v] = true;
        }
        out.push(class);
    }
    out
}

// ------------------------------------------------------------- association

/// Association weights straight from the definitions: positions per token,
/// `s_uv = {(i, j) : p_u(i) < p_v(j) < p_u(i + 1)}` with `p_u(last + 1) =
/// infinity`, `h` the share of `|s_uv|` over all ordered pairs of distinct
/// document tokens, `K_uv = -ln(h) * sum exp(-(p_v(j) - p_u(i) - 1)^beta /
/// sigma)`. Returns `None` when exactly one pair set is non-empty.
pub fn brute_assoc(tokens: &[&str], beta: f64, sigma: f64) -> Option<BTreeMap<(String, String), f64>> {
    let mut positions: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in tokens.iter().enumerate() {
        positions.entry(t).or_default().push(i + 1);
    }
    let mut sets: BTreeMap<(&str, &str), Vec<(usize, usize)>> = BTreeMap::new();
    for (&u, pu) in &positions {
        for (&v, pv) in &positions {
            if u == v {
                continue;
            }
            let mut s = Vec::new();
            for (i, &a) in pu.iter().enumerate() {
                let next = pu.get(i + 1).copied().unwrap_or(usize::MAX);
                for (j, &b) in pv.iter().enumerate() {
                    if a < b && b < next {
                        s.push((i, j));
                    }
                }
            }
            if !s.is_empty() {
                sets.insert((u, v), s);
            }
        }
    }
    if sets.len() == 1 {
        return None;
    }
    let total: usize = sets.values().map(Vec::len).sum();
    let mut k = BTreeMap::new();
    for ((u, v), s) in sets {
        let h = s.len() as f64 / total as f64;
        let f: f64 = s
            .iter()
            .map(|&(i, j)| {
                let gap = (positions[v][j] - positions[u][i] - 1) as f64;
                (-gap.powf(beta) / sigma).exp()
            })
            .sum();
        k.insert((u.to_owned(), v.to_owned()), -h.ln() * f);
    }
    Some(k)
}

// ------------------------------------------------------- planted pathways

pub struct Planted {
    pub graph: DomainGraph,
    pub instance: PathwayInstance,
    pub hub: usize,
    pub chain: Vec<usize>,
}

/// Background size range of the planted-pathway family.
pub const BACKGROUND: (usize, usize) = (200, 400);
/// Mean number of background arcs leaving each background node.
pub const BACKGROUND_DEGREE: f64 = 3.0;
/// Probability that a chain member gets one extra arc out to a background
/// node.
pub const CHAIN_NOISE: f64 = 0.2;

/// A graph holding one directed chain `s -> x_1 -> ... -> x_L -> t` among
/// background nodes, plus one hub.
///
/// * Background noise: sparse random arcs among background nodes, and with
///   probability `chain_noise` an arc from a chain member out to a background
///   node. Nothing but the chain points into a chain member or `t`, so the
///   chain is the only directed route from `s` to `t` that avoids the hub.
/// * The hub is joined in both directions to `s`, `t` and enough background
///   nodes to reach at least half of all nodes; that also opens the short
///   detour `s -> hub -> t`.
///
/// Global PageRank never drops below `alpha / n`, while the walk mass that
/// reaches deep chain members falls off geometrically, so small graphs at
/// large restart probabilities let the hub outrank long chains. The default
/// size keeps the family in the regime of realistic domain graphs.
pub fn planted_pathway(rng: &mut ChaCha8Rng, id: usize) -> Planted {
    planted_pathway_sized(rng, id, CHAIN_NOISE, BACKGROUND)
}

pub fn planted_pathway_sized(rng: &mut ChaCha8Rng, id: usize, chain_noise: f64, size: (usize, usize)) -> Planted {
    let chain_len = rng.random_range(2..=6);
    let background = rng.random_range(size.0..=size.1);
    // layout: s, x_1..x_L, t, hub, background
    let s = 0;
    let chain: Vec<usize> = (1..=chain_len).collect();
    let t = chain_len + 1;
    let hub = chain_len + 2;
    let first_bg = chain_len + 3;
    let n = first_bg + background;
    let bg: Vec<usize> = (first_bg..n).collect();

    let mut arcs = Vec::new();
    let mut path = vec![s];
    path.extend(&chain);
    path.push(t);
    arcs.extend(path.windows(2).map(|w| (w[0], w[1])));

    for &u in &bg {
        for &v in &bg {
            if u != v && rng.random_bool(BACKGROUND_DEGREE / (background - 1) as f64) {
                arcs.push((u, v));
            }
        }
    }
    for &x in &chain {
        if rng.random_bool(chain_noise) {
            arcs.push((x, *bg.choose(rng).unwrap()));
        }
    }

    let need = n.div_ceil(2).saturating_sub(2);
    let extra = rng.random_range(need..=need + background / 4).min(bg.len());
    let mut neighbors = vec![s, t];
    neighbors.extend(bg.choose_multiple(rng, extra));
    for &u in &neighbors {
        arcs.push((hub, u));
        arcs.push((u, hub));
    }

    let graph = graph_of(n, &arcs);
    let instance = PathwayInstance::new(format!("planted{id:03}"), vec![s], vec![t], path.clone(), n).unwrap();
    Planted { graph, instance, hub, chain }
}

// ---------------------------------------------------------- two-class corpus

pub struct CorpusShape {
    pub docs_per_class: usize,
    pub doc_len: usize,
    pub function_words: usize,
    pub topic_words: usize,
    pub hub_words: usize,
    /// Probability that a topic word is followed by its associated hub word.
    pub hub_follow: f64,
    /// Probability that a token is a shared function word.
    pub function_rate: f64,
    /// Probability that a topic word is drawn from the other class's topics.
    pub crossover: f64,
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape {
            docs_per_class: 200,
            doc_len: 24,
            function_words: 30,
            topic_words: 80,
            hub_words: 10,
            hub_follow: 0.25,
            function_rate: 0.45,
            crossover: 0.15,
        }
    }
}

fn zipf_pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let total: f64 = (1..=n).map(|r| 1.0 / r as f64).sum();
    let mut x = rng.random::<f64>() * total;
    for r in 1..=n {
        x -= 1.0 / r as f64;
        if x <= 0.0 {
            return r - 1;
        }
    }
    n - 1
}

/// Two labelled classes that differ only in their topic vocabulary.
///
/// Both classes share Zipf-distributed function words. Each class has its
/// own Zipf-distributed topic words, with occasional crossover. Every topic
/// word has a fixed companion among a small set of hub words, which follows
/// it with probability `hub_follow`. The companions of class-`a` topics lean
/// to the first half of the hubs, class-`b` topics to the second half. So
/// the hubs are frequent and central, and they carry class information
/// mostly through their co-occurrence with topic words.
pub fn two_class_corpus(rng: &mut ChaCha8Rng, shape: &CorpusShape) -> Vec<Document> {
    let half = shape.hub_words / 2;
    let companion: Vec<Vec<usize>> = (0..2)
        .map(|class| {
            (0..shape.topic_words)
                .map(|_| {
                    let own = rng.random_bool(0.8);
                    let side = if own { class } else { 1 - class };
                    side * half + rng.random_range(0..half)
                })
                .collect()
        })
        .collect();
    let mut docs = Vec::with_capacity(2 * shape.docs_per_class);
    for class in 0..2 {
        let label = ["a", "b"][class];
        for k in 0..shape.docs_per_class {
            let mut tokens = Vec::with_capacity(shape.doc_len);
            while tokens.len() < shape.doc_len {
                if rng.random_bool(shape.function_rate) {
                    tokens.push(format!("fn{:02}", zipf_pick(rng, shape.function_words)));
                } else {
                    let side = if rng.random_bool(shape.crossover) { 1 - class } else { class };
                    let w = zipf_pick(rng, shape.topic_words);
                    tokens.push(format!("{}{:03}", ["ta", "tb"][side], w));
                    if rng.random_bool(shape.hub_follow) {
                        tokens.push(format!("hub{:02}", companion[side][w]));
                    }
                }
            }
            tokens.truncate(shape.doc_len);
            docs.push(Document::new(format!("{label}{k:04}"), tokens).with_label(label));
        }
    }
    docs
}
