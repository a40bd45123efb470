//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use dfp_core::corpus::{aggregate, assoc_matrix, AssocParams, CorpusError, Document, Vocabulary};
use dfp_core::diffusion::{
    global_pagerank, personalization_vector, ppr, DiffusionConfig, PersonalizationVector,
};
use dfp_core::features::{bow_vector, kfold_cv, opc_projection, project, spearman, FeatureMatrix};
use dfp_core::graph::{
    build_domain_graph, directed_diameter, scc_diagnostics, shortest_path_lengths, strongly_connected_components,
    transition_view, Direction, DomainGraph,
};
use dfp_core::pathway::{min_pathway_length, PathwayEngine, PathwayInstance, PathwayOptions};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

// ------------------------------------------------------------------ 1

fn random_seed_vector(rng: &mut ChaCha8Rng, n: usize) -> PersonalizationVector {
    let support = rng.random_range(1..=n.div_ceil(3));
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    PersonalizationVector::from_weights(n, nodes[..support].iter().map(|&u| (u, rng.random_range(0.1..1.0)))).unwrap()
}

fn ppr_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    let mut with_dangling = 0;
    for k in 0..200 {
        let n = rng.random_range(2..=50);
        let density = rng.random_range(0.05..=0.5);
        let arcs = random_digraph(&mut rng, n, density, k % 2 == 0);
        let graph = graph_of(n, &arcs);
        let reverse = k % 4 >= 2;
        let view = transition_view(&graph, if reverse { Direction::Reverse } else { Direction::Forward });
        with_dangling += usize::from(!view.dangling().is_empty());
        let v = random_seed_vector(&mut rng, n);
        let cfg = DiffusionConfig::with_alpha(rng.random_range(0.05..0.95));
        let fp = ppr(&view, &v, &cfg).unwrap();
        unconverged += usize::from(!fp.converged);
        let exact = dense_ppr(n, &arcs, reverse, &v.to_dense(), cfg.alpha);
        for (a, b) in fp.values.iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-8 && unconverged == 0 && within(elapsed, 30),
        format!(
            "200 digraphs ({with_dangling} with dangling nodes): max |ppr - dense| = {worst:.2e}, \
             {unconverged} unconverged, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ------------------------------------------------------------------ 2

fn normalization_and_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_sum = 0.0f64;
    let mut identity_ok = true;
    for k in 0..200 {
        let n = rng.random_range(2..=50);
        let density = rng.random_range(0.05..=0.5);
        let arcs = random_digraph(&mut rng, n, density, k % 2 == 0);
        let graph = graph_of(n, &arcs);
        for dir in [Direction::Forward, Direction::Reverse] {
            let view = transition_view(&graph, dir);
            let v = random_seed_vector(&mut rng, n);
            let fp = ppr(&view, &v, &DiffusionConfig::with_alpha(rng.random_range(0.05..0.95))).unwrap();
            worst_sum = worst_sum.max((fp.values.iter().sum::<f64>() - 1.0).abs());
            let g = global_pagerank(&view, &DiffusionConfig::default()).unwrap();
            worst_sum = worst_sum.max((g.values.iter().sum::<f64>() - 1.0).abs());
            let one = ppr(&view, &v, &DiffusionConfig::with_alpha(1.0)).unwrap();
            identity_ok &= one.values == v.to_dense();
        }
    }
    let mut worst_cycle = 0.0f64;
    for n in 2..=60 {
        let arcs: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let graph = graph_of(n, &arcs);
        for dir in [Direction::Forward, Direction::Reverse] {
            let g = global_pagerank(&transition_view(&graph, dir), &DiffusionConfig::default()).unwrap();
            for x in g.values {
                worst_cycle = worst_cycle.max((x - 1.0 / n as f64).abs());
            }
        }
    }
    verdict(
        worst_sum <= 1e-10 && identity_ok && worst_cycle <= 1e-12,
        format!(
            "max |sum - 1| = {worst_sum:.2e}; alpha = 1 returns v exactly: {identity_ok}; \
             cycles n = 2..60 max deviation from uniform = {worst_cycle:.2e}"
        ),
    )
}

// ------------------------------------------------------------------ 3

fn association_oracle() -> Verdict {
    let alphabet = ["a", "b", "c"];
    let vocab = Vocabulary::from_tokens(alphabet);
    let mut checked = 0usize;
    let mut degenerate = 0usize;
    let mut with_trailing = 0usize;
    let mut worst = 0.0f64;
    let mut mismatches = Vec::new();
    for params in [AssocParams::default(), AssocParams::new(1.7, 0.6).unwrap()] {
        for len in 1..=10u32 {
            for code in 0..3usize.pow(len) {
                let tokens: Vec<&str> = (0..len).map(|i| alphabet[code / 3usize.pow(i) % 3]).collect();
                let doc = Document::new("d", tokens.iter().copied());
                let distinct = tokens.iter().collect::<std::collections::BTreeSet<_>>().len();
                let got = assoc_matrix(&doc, &params, &vocab);
                checked += 1;
                if distinct < 2 {
                    if !matches!(got, Err(CorpusError::TooFewDistinctTokens { .. })) {
                        mismatches.push(tokens.join(""));
                    }
                    continue;
                }
                match (brute_assoc(&tokens, params.beta, params.sigma), got) {
                    (None, Err(CorpusError::DegenerateDocument { .. })) => degenerate += 1,
                    (Some(expected), Ok(k)) => {
                        // some v occurs after u's last occurrence, past an earlier u
                        let trailing = tokens.iter().enumerate().any(|(i, u)| {
                            tokens[..i].contains(u) && tokens[i + 1..].iter().any(|v| v != u)
                        });
                        with_trailing += usize::from(trailing);
                        let mut all = true;
                        for u in 0..3 {
                            for v in 0..3 {
                                let key = (alphabet[u].to_owned(), alphabet[v].to_owned());
                                let want = expected.get(&key).copied().unwrap_or(0.0);
                                let have = k.get(u, v);
                                let err = if want == 0.0 { have.abs() } else { ((have - want) / want).abs() };
                                worst = worst.max(err);
                                all &= err <= 1e-12;
                            }
                        }
                        if !all {
                            mismatches.push(tokens.join(""));
                        }
                    }
                    _ => mismatches.push(tokens.join("")),
                }
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "{checked} documents x 2 kernels: {degenerate} degenerate, {with_trailing} exercising pairs after a \
             repeated token's last occurrence, max relative error {worst:.2e}, {} mismatches{}",
            mismatches.len(),
            mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default()
        ),
    )
}

// ------------------------------------------------------------------ 4 & 5

struct PlantedRun {
    mean_acc_g: f64,
    hub_share: f64,
}

fn run_planted(family: &[Planted], alpha: f64, boosting: bool) -> PlantedRun {
    let mut acc = 0.0;
    let mut hub_hits = 0;
    for p in family {
        let options = PathwayOptions { diffusion: DiffusionConfig::with_alpha(alpha), n_max: None, boosting };
        let outcome = PathwayEngine::new(&p.graph, options).unwrap().infer(&p.instance).unwrap();
        acc += outcome.report.acc_g;
        hub_hits += usize::from(outcome.inferred.nodes.contains(&p.hub));
    }
    PlantedRun { mean_acc_g: acc / family.len() as f64, hub_share: hub_hits as f64 / family.len() as f64 }
}

fn planted_family() -> Vec<Planted> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    (0..100).map(|i| planted_pathway(&mut rng, i)).collect()
}

fn planted_recovery() -> Verdict {
    let start = Instant::now();
    let family = planted_family();
    let unique_chain = family.iter().all(|p| {
        min_pathway_length(&p.instance, &p.graph) == Some(2)
            && p.graph.out_degree(p.hub) * 2 >= p.graph.node_count()
    });
    let boosted = run_planted(&family, 0.15, true);
    let plain = run_planted(&family, 0.15, false);
    let elapsed = start.elapsed();
    verdict(
        unique_chain && boosted.mean_acc_g == 1.0 && plain.hub_share >= 0.8 && within(elapsed, 60),
        format!(
            "100 planted chains: boosted mean acc_g = {:.4}; hub in {:.0}% of unboosted sets \
             (unboosted mean acc_g = {:.4}); {:.2}s",
            boosted.mean_acc_g,
            100.0 * plain.hub_share,
            plain.mean_acc_g,
            elapsed.as_secs_f64()
        ),
    )
}

fn alpha_flatness() -> Verdict {
    let family = planted_family();
    let alphas: Vec<f64> = (0..=10).map(|i| 0.10 + 0.05 * i as f64).collect();
    let means: Vec<f64> = alphas.iter().map(|&a| run_planted(&family, a, true).mean_acc_g).collect();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let table: Vec<String> = alphas.iter().zip(&means).map(|(a, m)| format!("{a:.2}:{m:.3}")).collect();
    verdict(hi - lo <= 0.05, format!("mean acc_g over alpha {} -> spread {:.4}", table.join(" "), hi - lo))
}

// ------------------------------------------------------------------ 6 & 7

const CORPUS_GAMMA: f64 = 0.02;

struct CorpusRun {
    docs: Vec<Document>,
    graph: DomainGraph,
}

fn corpus_run(seed: u64) -> CorpusRun {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let docs = two_class_corpus(&mut rng, &CorpusShape::default());
    let vocab = Vocabulary::from_documents(&docs);
    let ks: Vec<_> = docs.iter().filter_map(|d| assoc_matrix(d, &AssocParams::default(), &vocab).ok()).collect();
    let graph = build_domain_graph(&aggregate(&ks).unwrap(), Arc::new(vocab), CORPUS_GAMMA, seed).unwrap();
    CorpusRun { docs, graph }
}

fn feature_matrix(docs: &[Document], rows: Vec<Vec<f64>>) -> FeatureMatrix {
    FeatureMatrix::new(
        docs.iter().map(|d| d.id.clone()).collect(),
        rows,
        Some(docs.iter().map(|d| d.label.clone().unwrap()).collect()),
    )
    .unwrap()
}

fn opc_resilience() -> Verdict {
    let start = Instant::now();
    let mut full = Vec::new();
    let mut reduced = Vec::new();
    let mut bow = Vec::new();
    let mut dims = Vec::new();
    for seed in 0..10 {
        let run = corpus_run(seed);
        let g = &run.graph;
        let view = transition_view(g, Direction::Forward);
        let cfg = DiffusionConfig::default();
        let fps: Vec<Vec<f64>> = run
            .docs
            .iter()
            .map(|d| ppr(&view, &personalization_vector(d, g).unwrap(), &cfg).unwrap().values)
            .collect();
        let bows: Vec<Vec<f64>> = run.docs.iter().map(|d| bow_vector(d, g.vocab(), false).values).collect();
        let centrality = global_pagerank(&view, &cfg).unwrap().values;
        let d = (g.node_count() as f64 * 0.1).round() as usize;
        dims.push(d);
        let map = opc_projection(&centrality, d).unwrap();
        let fp_full = feature_matrix(&run.docs, fps);
        let bow_full = feature_matrix(&run.docs, bows);
        full.push(kfold_cv(&fp_full, 10, 1, seed).unwrap().mean_accuracy);
        reduced.push(kfold_cv(&project(&fp_full, &map).unwrap(), 10, 1, seed).unwrap().mean_accuracy);
        bow.push(kfold_cv(&project(&bow_full, &map).unwrap(), 10, 1, seed).unwrap().mean_accuracy);
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let (f, r, b) = (mean(&full), mean(&reduced), mean(&bow));
    let wins = reduced.iter().zip(&bow).filter(|(r, b)| r > b).count();
    let elapsed = start.elapsed();
    verdict(
        (f - r).abs() <= 0.05 && r > b && within(elapsed, 120),
        format!(
            "10 seeds, 400 docs, d = {dims:?}: fingerprint full {:.1}%, fingerprint OPC {:.1}%, BOW OPC {:.1}% \
             (fingerprint beats BOW on {wins}/10 seeds); {:.1}s",
            100.0 * f,
            100.0 * r,
            100.0 * b,
            elapsed.as_secs_f64()
        ),
    )
}

fn early_stop_at_diameter() -> Verdict {
    let mut shares = Vec::new();
    let mut diameters = Vec::new();
    for seed in 0..10 {
        let run = corpus_run(seed);
        let g = &run.graph;
        let diameter = directed_diameter(g, usize::MAX, seed);
        diameters.push(diameter.length);
        let view = transition_view(g, Direction::Forward);
        let converged_cfg = DiffusionConfig::default();
        let early_cfg = DiffusionConfig { fixed_steps: Some(diameter.length), ..converged_cfg };
        let mut good = 0;
        for d in &run.docs {
            let v = personalization_vector(d, g).unwrap();
            let exact = ppr(&view, &v, &converged_cfg).unwrap().values;
            let early = ppr(&view, &v, &early_cfg).unwrap().values;
            if spearman(&early, &exact).unwrap() > 0.99 {
                good += 1;
            }
        }
        shares.push(good as f64 / run.docs.len() as f64);
    }
    let worst = shares.iter().copied().fold(1.0, f64::min);
    let listed: Vec<String> = shares.iter().map(|s| format!("{:.0}%", 100.0 * s)).collect();
    verdict(
        worst >= 0.95,
        format!("diameters {diameters:?}; share of documents with rho > 0.99 per seed: {}", listed.join(" ")),
    )
}

// ------------------------------------------------------------------ 8

fn structural_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut graphs = 0;
    let mut failures = Vec::new();
    for k in 0..400 {
        let n = rng.random_range(1..=50);
        let density = [0.01, 0.03, 0.06, 0.1, 0.3][k % 5];
        let arcs = random_digraph(&mut rng, n, density, k % 3 == 0);
        let graph = graph_of(n, &arcs);
        let fw = floyd_warshall(n, &arcs);
        graphs += 1;

        let mut expected = scc_by_reachability(n, &arcs);
        let mut got = strongly_connected_components(&graph);
        got.sort();
        expected.sort();
        let report = scc_diagnostics(&graph);
        let largest = expected.iter().map(Vec::len).max().unwrap();
        let scc_ok = got == expected
            && report.num_sccs == expected.len()
            && report.giant_scc_fraction == largest as f64 / n as f64
            && report.is_single_scc == (expected.len() == 1);

        let giant = expected.iter().find(|c| c.len() == largest).unwrap();
        let fw_diameter = giant.iter().flat_map(|&u| giant.iter().map(move |&v| (u, v))).filter_map(|(u, v)| fw[u][v]).max();
        let diameter = directed_diameter(&graph, usize::MAX, 0);
        let diameter_ok = Some(diameter.length) == fw_diameter
            && !diameter.lower_bound
            && diameter.component_size == largest
            && diameter.strongly_connected == (expected.len() == 1);

        let mut paths_ok = (0..n).all(|s| shortest_path_lengths(&graph, s, Direction::Forward) == fw[s]);
        if n >= 2 {
            let mut nodes: Vec<usize> = (0..n).collect();
            nodes.shuffle(&mut rng);
            let cut = rng.random_range(1..n);
            let sources = nodes[..cut.min(3)].to_vec();
            let sinks = nodes[cut..(cut + 3).min(n)].to_vec();
            let annotated = [sources.clone(), sinks.clone()].concat();
            let inst = PathwayInstance::new("p", sources.clone(), sinks.clone(), annotated, n).unwrap();
            let fw = &fw;
            let expected = sources.iter().flat_map(|&s| sinks.iter().filter_map(move |&t| fw[s][t])).min();
            paths_ok &= min_pathway_length(&inst, &graph) == expected;
        }
        if !(scc_ok && diameter_ok && paths_ok) {
            failures.push(format!("graph {k} (n = {n}): scc {scc_ok}, diameter {diameter_ok}, paths {paths_ok}"));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{graphs} digraphs with n <= 50: {} disagreements with Floyd-Warshall{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

// ------------------------------------------------------------------ 9

fn write_cli_inputs(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let shape = CorpusShape { docs_per_class: 40, ..CorpusShape::default() };
    let docs = two_class_corpus(&mut rng, &shape);
    dfp_core::io::write_documents(&dir.join("docs.jsonl"), &docs).unwrap();

    let vocab = Vocabulary::from_documents(&docs);
    let tokens = vocab.tokens();
    let mut pathways = String::new();
    let mut seeds = String::new();
    for i in 0..12 {
        let mut pick: Vec<&String> = tokens.choose_multiple(&mut rng, 6).collect();
        pick.sort();
        pathways.push_str(&format!(
            "{{\"id\":\"pw{i}\",\"sources\":[\"{}\"],\"sinks\":[\"{}\"],\"annotated\":{}}}\n",
            pick[0],
            pick[1],
            serde_json::to_string(&pick).unwrap()
        ));
        seeds.push_str(&format!("{{\"id\":\"seed{i}\",\"nodes\":{}}}\n", serde_json::to_string(&pick[2..]).unwrap()));
    }
    std::fs::write(dir.join("pathways.jsonl"), pathways).unwrap();
    std::fs::write(dir.join("seeds.jsonl"), seeds).unwrap();
}

fn run_pipeline(dir: &Path, threads: usize) -> Result<(), String> {
    let threads = threads.to_string();
    let steps: Vec<Vec<&str>> = vec![
        vec!["build-graph", "docs.jsonl", "--gamma", "0.05", "--assoc-out", "assoc.tsv", "-o", "graph.tsv"],
        vec!["density-scan", "assoc.tsv", "--grid", "0.01,0.02,0.05,0.1", "-o", "scan.json"],
        vec!["diffuse", "graph.tsv", "docs.jsonl", "-o", "fp.tsv"],
        vec!["diffuse", "graph.tsv", "docs.jsonl", "--bow", "-o", "bow.tsv"],
        vec!["diffuse", "graph.tsv", "seeds.jsonl", "--seeds", "--reverse", "--steps", "5", "-o", "seeded.tsv"],
        vec!["infer-pathways", "graph.tsv", "pathways.jsonl", "-o", "paths.jsonl"],
        vec!["reduce", "fp.tsv", "--graph", "graph.tsv", "--dim", "12", "-o", "opc.tsv", "--variance-report", "var.json"],
        vec!["reduce", "bow.tsv", "--centrality-mean", "--dim", "12", "--method", "random", "-o", "rnd.tsv"],
        vec!["classify", "opc.tsv", "--folds", "5", "--shuffles", "4", "-o", "kfold.json"],
        vec!["classify", "rnd.tsv", "--protocol", "split", "--test", "opc.tsv", "-o", "split.json"],
    ];
    for args in steps {
        let status = Command::new(env!("CARGO_BIN_EXE_dfp"))
            .args(&args)
            .args(["--seed", "17", "--threads", &threads])
            .current_dir(dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&status.stderr)));
        }
    }
    Ok(())
}

fn digest_dir(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let bytes = std::fs::read(&path).unwrap();
        let hash: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), hash);
    }
    out
}

fn cli_determinism() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for (run, threads) in [(0, 1), (1, 8), (2, 8), (3, 1)] {
        let dir = root.path().join(format!("run{run}"));
        std::fs::create_dir(&dir).unwrap();
        write_cli_inputs(&dir);
        if let Err(e) = run_pipeline(&dir, threads) {
            return verdict(false, e);
        }
        digests.push(digest_dir(&dir));
    }
    let identical = digests.windows(2).all(|w| w[0] == w[1]);
    verdict(
        identical && digests[0].len() > 10,
        format!(
            "{} files from 10 commands hashed over 4 runs (threads 1, 8, 8, 1): {}",
            digests[0].len(),
            if identical { "all identical" } else { "digests differ" }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("PPR matches the dense linear solve", ppr_oracle),
        ("normalization, alpha = 1 identity, cycle symmetry", normalization_and_identity),
        ("association matrix matches brute force", association_oracle),
        ("planted pathway recovery and hub penalization", planted_recovery),
        ("alpha flatness of pathway accuracy", alpha_flatness),
        ("OPC resilience against bag-of-words", opc_resilience),
        ("early stop at the directed diameter", early_stop_at_diameter),
        ("structural oracles (SCC, diameter, path length)", structural_oracles),
        ("CLI determinism across thread counts", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| verdict(false, format!("panicked: {:?}", e.downcast_ref::<String>())));
        failed += usize::from(!v.pass);
        println!(
            "{} criterion {}: {name} -- {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
