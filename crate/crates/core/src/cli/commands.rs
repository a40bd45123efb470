use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;

use super::config::RunConfig;
use super::Outcome;
use crate::corpus::{aggregate, assoc_matrix, AssociationMatrix, CorpusError, TokenizerConfig, Vocabulary};
use crate::diffusion::{
    batch_fingerprints, global_pagerank, personalization_vector, uniform_seed, DiffusionError, PersonalizationVector,
};
use crate::features::{
    bow_vector, kfold_cv, opc_projection, project, random_projection, train_test_split_eval,
    variance_centrality_report, ProjectionMethod,
};
use crate::graph::{
    build_domain_graph, critical_density_scan, directed_diameter, transition_view, Direction,
};
use crate::io::{
    read_any_features, read_assoc_tsv, read_centrality, read_documents, read_graph, read_pathways, read_seed_sets,
    sidecar_path, write_assoc_tsv, write_features, write_fingerprints, write_graph, write_json, write_pathway_results,
    FingerprintMeta, FingerprintRowMeta, GraphHeader, PathwayResultLine, PathwaySummary, RowStatus, SkippedDocument,
};
use crate::pathway::{PathwayEngine, PathwayError, PathwayOptions};
use crate::{Error, Result};

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn is_tsv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "tsv")
}

/// Aggregated association matrix from a document file, or read directly
/// from an association TSV. Documents that carry no association signal are
/// skipped and reported.
fn load_associations(input: &Path, cfg: &RunConfig) -> Result<(Vocabulary, AssociationMatrix, Vec<SkippedDocument>)> {
    if is_tsv(input) {
        let (vocab, k) = read_assoc_tsv(input)?;
        return Ok((vocab, k, Vec::new()));
    }
    let docs = read_documents(input, &TokenizerConfig::default())?;
    let vocab = Vocabulary::from_documents(&docs);
    let params = cfg.assoc_params();
    let per_doc: Vec<_> = docs.par_iter().map(|d| assoc_matrix(d, &params, &vocab)).collect();
    let mut kept = Vec::with_capacity(per_doc.len());
    let mut skipped = Vec::new();
    for (doc, k) in docs.iter().zip(per_doc) {
        match k {
            Ok(k) => kept.push(k),
            Err(e @ (CorpusError::TooFewDistinctTokens { .. } | CorpusError::DegenerateDocument { .. })) => {
                warn(&e);
                skipped.push(SkippedDocument { id: doc.id.clone(), reason: e.to_string() });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let k = aggregate(&kept)?;
    Ok((vocab, k, skipped))
}

pub struct BuildGraphArgs<'a> {
    pub input: &'a Path,
    pub assoc_out: Option<&'a Path>,
    pub diameter_exact: usize,
}

pub fn build_graph(args: BuildGraphArgs<'_>, cfg: &RunConfig) -> Result<Outcome> {
    let output = cfg.output_path()?;
    let (vocab, k, skipped) = load_associations(args.input, cfg)?;
    if let Some(path) = args.assoc_out {
        write_assoc_tsv(path, &k, &vocab)?;
    }
    let graph = build_domain_graph(&k, Arc::new(vocab), cfg.gamma, cfg.seed)?;
    for w in graph.warnings() {
        warn(w);
    }
    let mut header = GraphHeader::for_graph(&graph);
    if graph.edge_count() > 0 {
        header.diameter = Some(directed_diameter(&graph, args.diameter_exact, cfg.seed));
    }
    header.skipped_documents = skipped;
    header.config = Some(cfg.to_json());
    write_graph(&output, &graph, &header)?;
    Ok(Outcome::Done)
}

pub struct DiffuseArgs<'a> {
    pub graph: &'a Path,
    pub input: &'a Path,
    pub seeds: bool,
    pub reverse: bool,
    pub bow: bool,
    pub raw_counts: bool,
    pub emit_threshold: f64,
}

pub fn diffuse(args: DiffuseArgs<'_>, cfg: &RunConfig) -> Result<Outcome> {
    let output = cfg.output_path()?;
    if !(args.emit_threshold >= 0.0) {
        return Err(Error::Config(format!("emit threshold must be non-negative, got {}", args.emit_threshold)));
    }
    let (graph, _) = read_graph(args.graph)?;
    let diffusion = cfg.diffusion();

    // (id, label, seed distribution or the reason there is none)
    let inputs: Vec<(String, Option<String>, Result<PersonalizationVector, DiffusionError>)> = if args.seeds {
        read_seed_sets(args.input, graph.vocab())?
            .into_iter()
            .map(|s| {
                let v = uniform_seed(&graph, &s.nodes);
                (s.id, s.label, v)
            })
            .collect()
    } else {
        read_documents(args.input, &TokenizerConfig::default())?
            .into_iter()
            .map(|d| {
                let v = personalization_vector(&d, &graph);
                (d.id, d.label, v)
            })
            .collect()
    };

    let mut metas = Vec::with_capacity(inputs.len());
    let mut dense: Vec<(String, Vec<f64>)> = Vec::new();
    let failed = |id: &str, label: &Option<String>, e: &DiffusionError| {
        warn(format!("{id}: {e}"));
        let status = if matches!(e, DiffusionError::NoSupport(_)) { RowStatus::NoSupport } else { RowStatus::Error };
        FingerprintRowMeta {
            id: id.to_owned(),
            label: label.clone(),
            status,
            message: Some(e.to_string()),
            iterations: None,
            converged: None,
            residual: None,
            coverage: None,
        }
    };

    if args.bow {
        if args.seeds {
            return Err(Error::Config("--bow needs documents, not seed sets".into()));
        }
        let docs = read_documents(args.input, &TokenizerConfig::default())?;
        for d in &docs {
            let bow = bow_vector(d, graph.vocab(), args.raw_counts);
            if bow.empty {
                metas.push(failed(&d.id, &d.label, &DiffusionError::NoSupport(d.id.clone())));
            } else {
                let coverage = personalization_vector(d, &graph).map(|v| v.coverage()).ok();
                metas.push(FingerprintRowMeta {
                    id: d.id.clone(),
                    label: d.label.clone(),
                    status: RowStatus::Ok,
                    message: None,
                    iterations: None,
                    converged: None,
                    residual: None,
                    coverage,
                });
                dense.push((d.id.clone(), bow.values));
            }
        }
    } else {
        diffusion.validate()?;
        let view = transition_view(&graph, if args.reverse { Direction::Reverse } else { Direction::Forward });
        let ready: Vec<PersonalizationVector> =
            inputs.iter().filter_map(|(_, _, v)| v.as_ref().ok().cloned()).collect();
        let mut results = batch_fingerprints(&view, &ready, &diffusion).into_iter();
        for (id, label, v) in &inputs {
            let outcome = match v {
                Ok(v) => results.next().expect("one result per seed").map(|fp| (fp, v.coverage())),
                Err(e) => Err(e.clone()),
            };
            match outcome {
                Ok((fp, coverage)) => {
                    metas.push(FingerprintRowMeta {
                        id: id.clone(),
                        label: label.clone(),
                        status: RowStatus::Ok,
                        message: None,
                        iterations: Some(fp.iterations),
                        converged: Some(fp.converged),
                        residual: Some(fp.residual),
                        coverage: Some(coverage),
                    });
                    dense.push((id.clone(), fp.values));
                }
                Err(e) => metas.push(failed(id, label, &e)),
            }
        }
    }

    let total = metas.len();
    let meta = FingerprintMeta {
        dim: graph.node_count(),
        kind: if args.bow { "bow" } else { "ppr" }.to_owned(),
        alpha: (!args.bow).then_some(diffusion.alpha),
        tol: (!args.bow).then_some(diffusion.tol),
        max_iters: (!args.bow).then_some(diffusion.max_iters),
        fixed_steps: if args.bow { None } else { diffusion.fixed_steps },
        emit_threshold: args.emit_threshold,
        rows: metas,
        config: Some(cfg.to_json()),
    };
    let rows: Vec<(&str, &[f64])> = dense.iter().map(|(id, v)| (id.as_str(), v.as_slice())).collect();
    write_fingerprints(&output, &rows, &meta)?;
    Ok(if total > 0 && dense.is_empty() { Outcome::NoResult } else { Outcome::Done })
}

pub struct InferArgs<'a> {
    pub graph: &'a Path,
    pub pathways: &'a Path,
    pub n_max: Option<usize>,
    pub no_boost: bool,
}

pub fn infer_pathways(args: InferArgs<'_>, cfg: &RunConfig) -> Result<Outcome> {
    let output = cfg.output_path()?;
    let (graph, _) = read_graph(args.graph)?;
    let instances = read_pathways(args.pathways, graph.vocab())?;
    let options = PathwayOptions { diffusion: cfg.diffusion(), n_max: args.n_max, boosting: !args.no_boost };
    let engine = PathwayEngine::new(&graph, options)?;
    let vocab = graph.vocab();
    let results: Vec<PathwayResultLine> = instances
        .iter()
        .zip(engine.infer_all(&instances))
        .map(|(inst, outcome)| match outcome {
            Ok(o) => PathwayResultLine {
                id: inst.id.clone(),
                n_w: Some(o.inferred.n_w),
                nodes: o.inferred.nodes.iter().map(|&u| vocab.token(u).to_owned()).collect(),
                ppv: Some(o.report.ppv),
                tpr: Some(o.report.tpr),
                acc_g: Some(o.report.acc_g),
                status: "ok".into(),
                message: None,
            },
            Err(e) => {
                warn(format!("{}: {e}", inst.id));
                let status = if matches!(e, PathwayError::NoPathway { .. }) { "no_pathway" } else { "error" };
                PathwayResultLine {
                    id: inst.id.clone(),
                    n_w: None,
                    nodes: Vec::new(),
                    ppv: None,
                    tpr: None,
                    acc_g: None,
                    status: status.into(),
                    message: Some(e.to_string()),
                }
            }
        })
        .collect();
    let mut summary = PathwaySummary::from_results(&results);
    summary.config = Some(json!({ "run": cfg.to_json(), "n_max": args.n_max, "boosting": !args.no_boost }));
    write_pathway_results(&output, &results, &summary)?;
    Ok(if summary.count > 0 && summary.failures == summary.count { Outcome::NoResult } else { Outcome::Done })
}

pub enum CentralitySource<'a> {
    Graph(&'a Path),
    File(&'a Path),
    Mean,
}

pub struct ReduceArgs<'a> {
    pub fingerprints: &'a Path,
    pub centrality: CentralitySource<'a>,
    pub variance_report: Option<&'a Path>,
}

pub fn reduce(args: ReduceArgs<'_>, cfg: &RunConfig) -> Result<Outcome> {
    let output = cfg.output_path()?;
    let d = cfg.dim.ok_or_else(|| Error::Config("--dim is required".into()))?;
    let rows = read_any_features(args.fingerprints)?;
    let (centrality, source) = match args.centrality {
        CentralitySource::Graph(path) => {
            let (graph, _) = read_graph(path)?;
            let pr = global_pagerank(&transition_view(&graph, Direction::Forward), &cfg.diffusion())?;
            (pr.values, "global_pagerank")
        }
        CentralitySource::File(path) => (read_centrality(path)?, "file"),
        CentralitySource::Mean => (rows.column_means(), "mean_fingerprint"),
    };
    if centrality.len() != rows.dim() {
        return Err(crate::features::FeatureError::DimensionMismatch { expected: rows.dim(), found: centrality.len() }
            .into());
    }
    let map = match cfg.method {
        ProjectionMethod::Opc => opc_projection(&centrality, d)?,
        ProjectionMethod::Random => random_projection(rows.dim(), d, cfg.seed)?,
    };
    let reduced = project(&rows, &map)?;
    write_features(&output, &reduced)?;
    write_json(
        &sidecar_path(&output, "meta.json"),
        &json!({ "projection": map, "centrality": source, "config": cfg.to_json() }),
    )?;
    if let Some(path) = args.variance_report {
        let report = variance_centrality_report(&rows, &centrality)?;
        write_json(path, &json!({ "report": report, "centrality": source, "config": cfg.to_json() }))?;
    }
    Ok(Outcome::Done)
}

pub enum Protocol<'a> {
    KFold { folds: usize, shuffles: usize },
    Split { test: &'a Path },
}

pub fn classify(features: &Path, protocol: Protocol<'_>, cfg: &RunConfig) -> Result<Outcome> {
    let output = cfg.output_path()?;
    let rows = read_any_features(features)?;
    let report = match protocol {
        Protocol::KFold { folds, shuffles } => {
            let r = kfold_cv(&rows, folds, shuffles, cfg.seed)?;
            for w in &r.warnings {
                warn(w);
            }
            json!({ "protocol": "kfold", "report": r, "config": cfg.to_json() })
        }
        Protocol::Split { test } => {
            let test_rows = read_any_features(test)?;
            let r = train_test_split_eval(&rows, &test_rows)?;
            for w in &r.warnings {
                warn(w);
            }
            json!({ "protocol": "split", "report": r, "config": cfg.to_json() })
        }
    };
    write_json(&output, &report)?;
    Ok(Outcome::Done)
}

pub fn density_scan(input: &Path, grid: &[f64], giant_cutoff: Option<f64>, cfg: &RunConfig) -> Result<Outcome> {
    let output = cfg.output_path()?;
    if grid.is_empty() {
        return Err(Error::Config("--grid needs at least one density".into()));
    }
    let (vocab, k, skipped) = load_associations(input, cfg)?;
    let scan = critical_density_scan(&k, Arc::new(vocab), grid, cfg.seed, giant_cutoff)?;
    write_json(
        &output,
        &json!({ "scan": scan, "giant_cutoff": giant_cutoff, "skipped_documents": skipped, "config": cfg.to_json() }),
    )?;
    Ok(Outcome::Done)
}
