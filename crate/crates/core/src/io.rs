//! File formats. JSON Lines for documents, seed sets and pathway instances;
//! TSV for association matrices, arc lists, sparse fingerprints, feature
//! matrices and centrality vectors; JSON for sidecars and reports.
//!
//! Every writer replaces its target atomically (temporary file in the same
//! directory, then rename). Readers report the offending line number.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, AssociationMatrix, CorpusError, Document, TokenizerConfig, Vocabulary};
use crate::features::FeatureMatrix;
use crate::graph::{scc_diagnostics, Diameter, DomainGraph, GraphError, GraphWarning};
use crate::pathway::PathwayInstance;
use crate::{Error, Result};

/// `graph.tsv` + `header.json` -> `graph.header.json`.
pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_owned(), source }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_owned(), line, message: message.into() }
}

/// Writes through `body` into a temporary sibling of `path`, then renames it
/// over `path`.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_error(path))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w).map_err(io_error(path))?;
        w.flush().map_err(io_error(path))?;
    }
    tmp.persist(path).map_err(|e| io_error(path)(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(io_error(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| parse_error(path, e.line(), e.to_string()))
}

/// Non-blank lines with their 1-based line numbers.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(io_error(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_error(path))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    read_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            serde_json::from_str(&line).map(|v| (n, v)).map_err(|e| parse_error(path, n, e.to_string()))
        })
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic(path, |w| {
        for item in items {
            serde_json::to_writer(&mut *w, item).map_err(std::io::Error::other)?;
            writeln!(w)?;
        }
        Ok(())
    })
}

fn split_tabs<'l>(path: &Path, n: usize, line: &'l str, expected: usize) -> Result<Vec<&'l str>> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != expected {
        return Err(parse_error(path, n, format!("expected {expected} tab-separated fields, found {}", fields.len())));
    }
    Ok(fields)
}

fn parse_f64(path: &Path, n: usize, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| parse_error(path, n, format!("invalid number `{s}`")))
}

fn parse_index(path: &Path, n: usize, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| parse_error(path, n, format!("invalid index `{s}`")))
}

// ---------------------------------------------------------------- documents

#[derive(Debug, Serialize, Deserialize)]
struct DocumentLine {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

/// Reads `{"id", "tokens" | "text", "label"?}` lines; `text` is tokenized
/// with `config`.
pub fn read_documents(path: &Path, config: &TokenizerConfig) -> Result<Vec<Document>> {
    read_jsonl::<DocumentLine>(path)?
        .into_iter()
        .map(|(n, line)| {
            let tokens = match (line.tokens, line.text) {
                (Some(tokens), None) => tokens,
                (None, Some(text)) => tokenize(&text, config),
                _ => return Err(parse_error(path, n, "exactly one of `tokens` or `text` is required")),
            };
            Ok(Document { id: line.id, tokens, label: line.label })
        })
        .collect()
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<()> {
    let lines: Vec<DocumentLine> = docs
        .iter()
        .map(|d| DocumentLine { id: d.id.clone(), tokens: Some(d.tokens.clone()), text: None, label: d.label.clone() })
        .collect();
    write_jsonl(path, &lines)
}

// ------------------------------------------------------- association matrix

/// `u_token<TAB>v_token<TAB>weight`, rows in (u, v) index order, weights with
/// 17 significant digits.
pub fn write_assoc_tsv(path: &Path, matrix: &AssociationMatrix, vocab: &Vocabulary) -> Result<()> {
    if matrix.dim() != vocab.len() {
        return Err(GraphError::VocabularyMismatch { vocab: vocab.len(), matrix: matrix.dim() }.into());
    }
    write_atomic(path, |w| {
        for (u, v, weight) in matrix.iter() {
            writeln!(w, "{}\t{}\t{:.16e}", vocab.token(u), vocab.token(v), weight)?;
        }
        Ok(())
    })
}

/// The vocabulary is the sorted set of tokens named in the file.
pub fn read_assoc_tsv(path: &Path) -> Result<(Vocabulary, AssociationMatrix)> {
    let mut entries = Vec::new();
    for (n, line) in read_lines(path)? {
        let f = split_tabs(path, n, &line, 3)?;
        entries.push((n, f[0].to_owned(), f[1].to_owned(), parse_f64(path, n, f[2])?));
    }
    let vocab = Vocabulary::from_tokens(entries.iter().flat_map(|e| [e.1.as_str(), e.2.as_str()]));
    let mut matrix = AssociationMatrix::new(vocab.len());
    for (n, u, v, weight) in entries {
        let (u, v) = (vocab.index_of(&u).expect("collected"), vocab.index_of(&v).expect("collected"));
        if matrix.get(u, v) != 0.0 {
            return Err(parse_error(path, n, "duplicate entry"));
        }
        matrix.insert(u, v, weight).map_err(|e: CorpusError| parse_error(path, n, e.to_string()))?;
    }
    Ok((vocab, matrix))
}

// -------------------------------------------------------------------- graph

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedDocument {
    pub id: String,
    pub reason: String,
}

/// JSON sidecar of an arc list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphHeader {
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub node_count: usize,
    pub edge_count: usize,
    #[serde(default)]
    pub giant_scc_fraction: Option<f64>,
    #[serde(default)]
    pub diameter: Option<Diameter>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<GraphWarning>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_documents: Vec<SkippedDocument>,
    /// Node tokens in index order; keeps isolated nodes and indices stable.
    pub nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl GraphHeader {
    pub fn for_graph(graph: &DomainGraph) -> Self {
        GraphHeader {
            gamma: graph.gamma(),
            seed: graph.seed(),
            node_count: graph.node_count(),
            edge_count: graph.edge_count(),
            giant_scc_fraction: (graph.node_count() > 0).then(|| scc_diagnostics(graph).giant_scc_fraction),
            diameter: None,
            warnings: graph.warnings().to_vec(),
            skipped_documents: Vec::new(),
            nodes: graph.vocab().tokens().to_vec(),
            config: None,
        }
    }
}

/// Writes `src_token<TAB>dst_token` lines plus the `.header.json` sidecar.
pub fn write_graph(path: &Path, graph: &DomainGraph, header: &GraphHeader) -> Result<()> {
    let vocab = graph.vocab();
    write_atomic(path, |w| {
        for (u, v) in graph.arcs() {
            writeln!(w, "{}\t{}", vocab.token(u), vocab.token(v))?;
        }
        Ok(())
    })?;
    write_json(&sidecar_path(path, "header.json"), header)
}

/// Reads an arc list. With a sidecar header the node order comes from it;
/// otherwise nodes are the sorted set of tokens named by arcs.
pub fn read_graph(path: &Path) -> Result<(DomainGraph, Option<GraphHeader>)> {
    let header_path = sidecar_path(path, "header.json");
    let header: Option<GraphHeader> = if header_path.exists() { Some(read_json(&header_path)?) } else { None };
    let mut named = Vec::new();
    for (n, line) in read_lines(path)? {
        let f = split_tabs(path, n, &line, 2)?;
        named.push((n, f[0].to_owned(), f[1].to_owned()));
    }
    let vocab = match &header {
        Some(h) => Vocabulary::from_ordered(h.nodes.clone())
            .map_err(|e| parse_error(&header_path, 1, e.to_string()))?,
        None => Vocabulary::from_tokens(named.iter().flat_map(|a| [a.1.as_str(), a.2.as_str()])),
    };
    let mut arcs = Vec::with_capacity(named.len());
    for (n, u, v) in &named {
        let resolve = |t: &str| vocab.index_of(t).ok_or_else(|| parse_error(path, *n, format!("unknown node `{t}`")));
        let (u, v) = (resolve(u)?, resolve(v)?);
        if u == v {
            return Err(parse_error(path, *n, format!("self-loop on `{}`", vocab.token(u))));
        }
        arcs.push((u, v));
    }
    let graph = DomainGraph::from_arcs(Arc::new(vocab), arcs)?;
    if let Some(h) = &header {
        if h.edge_count != graph.edge_count() {
            return Err(parse_error(
                &header_path,
                1,
                format!("header lists {} arcs but the arc list has {}", h.edge_count, graph.edge_count()),
            ));
        }
    }
    Ok((graph, header))
}

// ------------------------------------------------------------- seed sets

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SeedLine {
    id: String,
    nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    pub id: String,
    pub nodes: Vec<usize>,
    pub label: Option<String>,
}

/// Reads `{"id", "nodes": [token, ...], "label"?}` lines against the graph's
/// vocabulary.
pub fn read_seed_sets(path: &Path, vocab: &Vocabulary) -> Result<Vec<SeedSet>> {
    read_jsonl::<SeedLine>(path)?
        .into_iter()
        .map(|(n, line)| {
            let nodes = line
                .nodes
                .iter()
                .map(|t| vocab.index_of(t).ok_or_else(|| parse_error(path, n, format!("unknown node `{t}`"))))
                .collect::<Result<_>>()?;
            Ok(SeedSet { id: line.id, nodes, label: line.label })
        })
        .collect()
}

// ------------------------------------------------------------ fingerprints

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    NoSupport,
    Error,
}

/// Per-input metadata; rows with a status other than `ok` have no TSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintRowMeta {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintMeta {
    /// Length of every dense row (graph node count).
    pub dim: usize,
    /// `ppr` or `bow`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_steps: Option<usize>,
    pub emit_threshold: f64,
    pub rows: Vec<FingerprintRowMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// `id<TAB>index:value index:value ...` for every value that is positive and
/// at least `meta.emit_threshold`; values use the shortest round-trip
/// decimal form. Writes the `.meta.json` sidecar too.
pub fn write_fingerprints(path: &Path, rows: &[(&str, &[f64])], meta: &FingerprintMeta) -> Result<()> {
    let threshold = meta.emit_threshold;
    write_atomic(path, |w| {
        for (id, values) in rows {
            write!(w, "{id}\t")?;
            let mut first = true;
            for (i, &x) in values.iter().enumerate() {
                if x > 0.0 && x >= threshold {
                    if !first {
                        write!(w, " ")?;
                    }
                    write!(w, "{i}:{x}")?;
                    first = false;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    write_json(&sidecar_path(path, "meta.json"), meta)
}

/// Reads sparse rows into a dense matrix. Dimension and labels come from the
/// `.meta.json` sidecar when present (labels only if every row has one);
/// otherwise the dimension is one past the largest index.
pub fn read_fingerprints(path: &Path) -> Result<(FeatureMatrix, Option<FingerprintMeta>)> {
    let meta_path = sidecar_path(path, "meta.json");
    let meta: Option<FingerprintMeta> = if meta_path.exists() { Some(read_json(&meta_path)?) } else { None };
    let mut ids = Vec::new();
    let mut sparse = Vec::new();
    let mut max_index = None;
    for (n, line) in read_lines(path)? {
        let (id, body) = line.split_once('\t').ok_or_else(|| parse_error(path, n, "missing tab after id"))?;
        let mut entries = Vec::new();
        for item in body.split_whitespace() {
            let (i, x) = item.split_once(':').ok_or_else(|| parse_error(path, n, format!("malformed entry `{item}`")))?;
            let i = parse_index(path, n, i)?;
            max_index = max_index.max(Some(i));
            entries.push((i, parse_f64(path, n, x)?));
        }
        ids.push((n, id.to_owned()));
        sparse.push(entries);
    }

    let dim = match &meta {
        Some(m) => m.dim,
        None => max_index.map_or(0, |i| i + 1),
    };
    let mut rows = Vec::with_capacity(sparse.len());
    for ((n, _), entries) in ids.iter().zip(sparse) {
        let mut row = vec![0.0; dim];
        for (i, x) in entries {
            *row.get_mut(i).ok_or_else(|| parse_error(path, *n, format!("index {i} outside dimension {dim}")))? = x;
        }
        rows.push(row);
    }

    let labels = match &meta {
        Some(m) => {
            let ok: Vec<&FingerprintRowMeta> = m.rows.iter().filter(|r| r.status == RowStatus::Ok).collect();
            if ok.len() != ids.len() {
                return Err(parse_error(&meta_path, 1, format!("{} ok rows listed, {} in the TSV", ok.len(), ids.len())));
            }
            for (r, (n, id)) in ok.iter().zip(&ids) {
                if r.id != *id {
                    return Err(parse_error(path, *n, format!("row `{id}` does not match metadata row `{}`", r.id)));
                }
            }
            ok.iter().map(|r| r.label.clone()).collect::<Option<Vec<_>>>()
        }
        None => None,
    };
    let ids = ids.into_iter().map(|(_, id)| id).collect();
    Ok((FeatureMatrix::new(ids, rows, labels)?, meta))
}

// ---------------------------------------------------------------- features

/// `id<TAB>label<TAB>v0,v1,...`; the label column is empty for unlabeled
/// rows.
pub fn write_features(path: &Path, matrix: &FeatureMatrix) -> Result<()> {
    write_atomic(path, |w| {
        for (i, id) in matrix.ids().iter().enumerate() {
            let label = matrix.labels().map_or("", |l| l[i].as_str());
            let values: Vec<String> = matrix.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(w, "{id}\t{label}\t{}", values.join(","))?;
        }
        Ok(())
    })
}

/// Labels are present only if every row has a non-empty label; a mix is an
/// error.
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut width = None;
    for (n, line) in read_lines(path)? {
        let f = split_tabs(path, n, &line, 3)?;
        let row = if f[2].is_empty() {
            Vec::new()
        } else {
            f[2].split(',').map(|x| parse_f64(path, n, x)).collect::<Result<Vec<_>>>()?
        };
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(parse_error(path, n, format!("row has {} values, expected {}", row.len(), width.unwrap_or(0))));
        }
        ids.push(f[0].to_owned());
        labels.push(f[1].to_owned());
        rows.push(row);
    }
    let labeled = labels.iter().filter(|l| !l.is_empty()).count();
    let labels = match labeled {
        0 => None,
        k if k == labels.len() => Some(labels),
        _ => return Err(parse_error(path, 1, "either every row or no row must carry a label")),
    };
    Ok(FeatureMatrix::new(ids, rows, labels)?)
}

/// Distinguishes the dense feature TSV (three columns) from the sparse
/// fingerprint TSV (two columns) by the first non-blank line.
pub fn read_any_features(path: &Path) -> Result<FeatureMatrix> {
    let first = read_lines(path)?.into_iter().next();
    match first {
        Some((_, line)) if line.split('\t').count() == 2 => Ok(read_fingerprints(path)?.0),
        _ => read_features(path),
    }
}

// -------------------------------------------------------------- centrality

/// `index<TAB>token<TAB>value`.
pub fn write_centrality(path: &Path, values: &[f64], vocab: &Vocabulary) -> Result<()> {
    if values.len() != vocab.len() {
        return Err(GraphError::VocabularyMismatch { vocab: vocab.len(), matrix: values.len() }.into());
    }
    write_atomic(path, |w| {
        for (i, x) in values.iter().enumerate() {
            writeln!(w, "{i}\t{}\t{x}", vocab.token(i))?;
        }
        Ok(())
    })
}

/// Accepts `index<TAB>value` or `index<TAB>token<TAB>value`; indices must
/// cover `0..n` exactly once.
pub fn read_centrality(path: &Path) -> Result<Vec<f64>> {
    let mut by_index = BTreeMap::new();
    for (n, line) in read_lines(path)? {
        let f: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&f.len()) {
            return Err(parse_error(path, n, "expected `index<TAB>value` or `index<TAB>token<TAB>value`"));
        }
        let i = parse_index(path, n, f[0])?;
        if by_index.insert(i, parse_f64(path, n, f[f.len() - 1])?).is_some() {
            return Err(parse_error(path, n, format!("duplicate index {i}")));
        }
    }
    if by_index.keys().enumerate().any(|(k, &i)| k != i) {
        return Err(parse_error(path, 1, "indices must be 0..n without gaps"));
    }
    Ok(by_index.into_values().collect())
}

// ---------------------------------------------------------------- pathways

#[derive(Debug, Deserialize)]
struct PathwayLine {
    id: String,
    sources: Vec<String>,
    sinks: Vec<String>,
    annotated: Vec<String>,
}

/// Reads `{"id", "sources", "sinks", "annotated"}` lines, resolving node
/// names through the graph's vocabulary.
pub fn read_pathways(path: &Path, vocab: &Vocabulary) -> Result<Vec<PathwayInstance>> {
    read_jsonl::<PathwayLine>(path)?
        .into_iter()
        .map(|(n, line)| {
            let resolve = |names: &[String]| -> Result<Vec<usize>> {
                names
                    .iter()
                    .map(|t| vocab.index_of(t).ok_or_else(|| parse_error(path, n, format!("unknown node `{t}`"))))
                    .collect()
            };
            PathwayInstance::new(
                line.id,
                resolve(&line.sources)?,
                resolve(&line.sinks)?,
                resolve(&line.annotated)?,
                vocab.len(),
            )
            .map_err(|e| parse_error(path, n, e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayResultLine {
    pub id: String,
    pub n_w: Option<usize>,
    pub nodes: Vec<String>,
    pub ppv: Option<f64>,
    pub tpr: Option<f64>,
    pub acc_g: Option<f64>,
    /// `ok`, `no_pathway` or `error`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Means are taken over the instances with status `ok` and are null when
/// there is none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwaySummary {
    pub count: usize,
    pub failures: usize,
    pub mean_ppv: Option<f64>,
    pub mean_tpr: Option<f64>,
    pub mean_acc_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl PathwaySummary {
    pub fn from_results(results: &[PathwayResultLine]) -> Self {
        let ok: Vec<&PathwayResultLine> = results.iter().filter(|r| r.status == "ok").collect();
        let mean = |f: fn(&PathwayResultLine) -> Option<f64>| {
            (!ok.is_empty()).then(|| ok.iter().filter_map(|r| f(r)).sum::<f64>() / ok.len() as f64)
        };
        PathwaySummary {
            count: results.len(),
            failures: results.len() - ok.len(),
            mean_ppv: mean(|r| r.ppv),
            mean_tpr: mean(|r| r.tpr),
            mean_acc_g: mean(|r| r.acc_g),
            config: None,
        }
    }
}

/// Writes the results JSON Lines plus the `.summary.json` sidecar.
pub fn write_pathway_results(path: &Path, results: &[PathwayResultLine], summary: &PathwaySummary) -> Result<()> {
    write_jsonl(path, results)?;
    write_json(&sidecar_path(path, "summary.json"), summary)
}
