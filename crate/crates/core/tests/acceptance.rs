//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clapr_core::augment::{
    augment_corpus, estimate_cost, AgentConfig, CorpusStats, CostModel, MockAgent, PseudoQuery, CHUNKS_FILE,
    PSEUDO_QUERIES_FILE,
};
use clapr_core::embed::{HashingEncoder, VectorStore};
use clapr_core::evaluate::{
    alpha_sweep, default_grid, describe, mrr_at_k, ndcg_at_k, recall_at_k, report, Metric, MetricReport,
};
use clapr_core::ingest::{load_qrels, read_run, write_run, Passage, Qrel, Query};
use clapr_core::pipeline::{embed_passages, embed_pseudo_queries, embed_queries, run_pipeline, PipelineConfig};
use clapr_core::retrieve::{
    bm25_scores, fuse, global_scores, local_scores, rank, Bm25Params, FusionConfig, MissingLocalPolicy, ScoreTable,
};
use clapr_core::synthetic::{planted_benchmark, PlantedConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

// Negated so that a NaN comparison fails the criterion.
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------------------
// Random retrieval instances

const DIM: usize = 16;

struct Instance {
    queries: Vec<Query>,
    passages: Vec<Passage>,
    /// passage -> chunk -> pseudo-query ids
    structure: Vec<Vec<Vec<String>>>,
    pseudo_queries: Vec<PseudoQuery>,
    query_store: VectorStore<f64>,
    passage_store: VectorStore<f64>,
    pseudo_store: VectorStore<f64>,
    qrels: Vec<Qrel>,
}

fn random_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_passages = rng.gen_range(1..=50);
    let n_queries = rng.gen_range(1..=6);
    let mut query_store = VectorStore::new(DIM, true).unwrap();
    let mut passage_store = VectorStore::new(DIM, true).unwrap();
    let mut pseudo_store = VectorStore::new(DIM, true).unwrap();
    let queries: Vec<Query> = (0..n_queries).map(|i| Query::new(format!("q{i}"), "x")).collect();
    for q in &queries {
        query_store.insert(&q.id, random_vector(&mut rng)).unwrap();
    }
    let mut passages = Vec::new();
    let mut structure = Vec::new();
    let mut pseudo_queries = Vec::new();
    for p in 0..n_passages {
        let pid = format!("d{p:02}");
        passage_store.insert(&pid, random_vector(&mut rng)).unwrap();
        let chunks: Vec<Vec<String>> = (0..rng.gen_range(1..=7))
            .map(|c| {
                let cid = clapr_core::augment::chunk_label(c);
                (0..rng.gen_range(0..=5))
                    .map(|i| {
                        let id = PseudoQuery::make_id(&pid, &cid, i);
                        pseudo_store.insert(&id, random_vector(&mut rng)).unwrap();
                        pseudo_queries.push(PseudoQuery {
                            id: id.clone(),
                            passage_id: pid.clone(),
                            chunk_id: cid.clone(),
                            text: String::new(),
                        });
                        id
                    })
                    .collect()
            })
            .collect();
        structure.push(chunks);
        passages.push(Passage::new(pid, None, "x"));
    }
    if pseudo_queries.is_empty() {
        let id = PseudoQuery::make_id("d00", "a", 0);
        pseudo_store.insert(&id, random_vector(&mut rng)).unwrap();
        pseudo_queries.push(PseudoQuery { id: id.clone(), passage_id: "d00".into(), chunk_id: "a".into(), text: String::new() });
        structure[0][0].push(id);
    }
    let qrels = queries
        .iter()
        .flat_map(|q| {
            let picks: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..n_passages)).collect();
            picks.into_iter().map(move |p| (q.id.clone(), p))
        })
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|(query_id, p)| Qrel { query_id, passage_id: format!("d{p:02}"), relevance: 1 })
        .collect();
    Instance { queries, passages, structure, pseudo_queries, query_store, passage_store, pseudo_store, qrels }
}

fn instances() -> Vec<Instance> {
    (0..200).map(|i| instance(1000 + i)).collect()
}

/// Plain left-to-right dot product.
fn oracle_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Max over chunks of the max over the chunk's pseudo-queries.
fn oracle_local(inst: &Instance) -> BTreeMap<(String, String), f64> {
    let mut out = BTreeMap::new();
    for q in &inst.queries {
        let qv = inst.query_store.vector(&q.id).unwrap();
        for (p, chunks) in inst.passages.iter().zip(&inst.structure) {
            let mut best: Option<f64> = None;
            for chunk in chunks {
                let mut chunk_best: Option<f64> = None;
                for id in chunk {
                    let s = oracle_dot(qv, inst.pseudo_store.vector(id).unwrap());
                    if chunk_best.is_none_or(|b| s > b) {
                        chunk_best = Some(s);
                    }
                }
                if let Some(c) = chunk_best {
                    if best.is_none_or(|b| c > b) {
                        best = Some(c);
                    }
                }
            }
            if let Some(b) = best {
                out.insert((q.id.clone(), p.id.clone()), b);
            }
        }
    }
    out
}

fn local(inst: &Instance, top_k: usize) -> ScoreTable<f64> {
    local_scores(&inst.queries, &inst.pseudo_queries, &inst.query_store, &inst.pseudo_store, top_k).unwrap()
}

fn global(inst: &Instance, top_k: usize) -> ScoreTable<f64> {
    global_scores(&inst.queries, &inst.passages, &inst.query_store, &inst.passage_store, top_k).unwrap()
}

fn order<'a>(table: &'a ScoreTable<f64>, q: &str) -> Vec<&'a str> {
    table.ranked(q).into_iter().map(|(p, _)| p).collect()
}

fn algorithm_exactness(all: &[Instance]) -> Outcome {
    let start = Instant::now();
    let mut pairs = 0;
    for (i, inst) in all.iter().enumerate() {
        let table = local(inst, 1000);
        let expected = oracle_local(inst);
        ensure!(table.num_entries() == expected.len(), "instance {i}: {} entries, oracle {}", table.num_entries(), expected.len());
        for ((q, p), s) in &expected {
            let ours = table.get(q, p);
            ensure!(ours.map(f64::to_bits) == Some(s.to_bits()), "instance {i} ({q}, {p}): {ours:?} vs {s}");
        }
        pairs += expected.len();
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("{} instances, {pairs} (query, passage) scores bit-identical, {elapsed:.2?}", all.len()))
}

fn fusion_endpoints(all: &[Instance]) -> Outcome {
    let mut checked = 0;
    for (i, inst) in all.iter().enumerate() {
        for top_k in [1000, 10] {
            let (g, l) = (global(inst, top_k), local(inst, top_k));
            let at = |alpha: f64| {
                fuse(&g, &l, &FusionConfig::new(alpha, top_k, MissingLocalPolicy::Drop).unwrap()).unwrap()
            };
            let (one, zero) = (at(1.0), at(0.0));
            for q in &inst.queries {
                ensure!(order(&one, &q.id) == order(&g, &q.id), "instance {i} top_k {top_k} {}: alpha=1 differs from global", q.id);
                let local_order = order(&l, &q.id);
                let fused_local: Vec<&str> =
                    order(&zero, &q.id).into_iter().filter(|p| l.get(&q.id, p).is_some()).collect();
                let matches = if top_k == 1000 {
                    fused_local == local_order
                } else {
                    local_order.starts_with(&fused_local)
                };
                ensure!(matches, "instance {i} top_k {top_k} {}: alpha=0 differs from local", q.id);
                for p in &fused_local {
                    ensure!(zero.get(&q.id, p) == l.get(&q.id, p), "instance {i}: alpha=0 score differs");
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (instance, depth, query) rankings identical at both endpoints"))
}

fn argmax_invariance(all: &[Instance]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let grid: Vec<f64> = default_grid();
    let mut rankings = 0;
    for (i, inst) in all.iter().enumerate() {
        let c: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
        for top_k in [1000, 10] {
            for policy in [MissingLocalPolicy::UseGlobal, MissingLocalPolicy::Drop] {
                let (g, l) = (global(inst, top_k), local(inst, top_k));
                let (gs, ls) = (g.scaled(c), l.scaled(c));
                for &alpha in &grid {
                    let cfg = FusionConfig::new(alpha, top_k, policy).unwrap();
                    let (a, b) = (fuse(&g, &l, &cfg).unwrap(), fuse(&gs, &ls, &cfg).unwrap());
                    for q in &inst.queries {
                        ensure!(order(&a, &q.id) == order(&b, &q.id), "instance {i} c={c} alpha={alpha} {policy:?} top_k {top_k} {}", q.id);
                        rankings += 1;
                    }
                }
                let metric = Metric::Ndcg(10);
                let s1 = alpha_sweep(&g, &l, &inst.qrels, &grid, metric, top_k, policy).unwrap();
                let s2 = alpha_sweep(&gs, &ls, &inst.qrels, &grid, metric, top_k, policy).unwrap();
                ensure!(s1 == s2, "instance {i} c={c}: sweep changed ({} vs {})", s1.best_alpha, s2.best_alpha);
            }
        }
    }
    Ok(format!("{rankings} fused rankings and {} sweeps unchanged under scaling", all.len() * 4))
}

// ---------------------------------------------------------------------------

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/metric_parity").join(name)
}

fn metric_parity() -> Outcome {
    let run = read_run(fixture("run.trec")).map_err(|e| e.to_string())?;
    let qrels = load_qrels(fixture("qrels_binary.tsv")).map_err(|e| e.to_string())?;
    let raw: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("golden_binary.json")).unwrap()).unwrap();
    let golden: BTreeMap<String, BTreeMap<String, f64>> = serde_json::from_value(raw["per_query"].clone()).unwrap();
    let reports: Vec<MetricReport<f64>> =
        vec![ndcg_at_k(&run, &qrels, 10), mrr_at_k(&run, &qrels, 10), recall_at_k(&run, &qrels, 1000)];
    let mut worst = 0.0f64;
    for r in &reports {
        ensure!(r.per_query.len() == golden.len(), "{}: {} queries vs {}", r.metric, r.per_query.len(), golden.len());
        for (q, g) in &golden {
            let diff = (r.per_query[q] - g[&r.metric]).abs();
            ensure!(diff <= 1e-6, "{} {q}: {} vs {}", r.metric, r.per_query[q], g[&r.metric]);
            worst = worst.max(diff);
        }
    }
    Ok(format!(
        "nDCG@10, MRR@10, R@1000 on {} queries; max |diff| {worst:.1e} (reference: {})",
        golden.len(),
        raw["tool"].as_str().unwrap_or("?")
    ))
}

fn bm25_hand_check() -> Outcome {
    let corpus =
        [Passage::new("d1", None, "a b"), Passage::new("d2", None, "b c"), Passage::new("d3", None, "c d")];
    let params = Bm25Params { k1: 1.2, b: 0.75 };
    let t: ScoreTable<f64> = bm25_scores(&[Query::new("q", "b")], &corpus, params, 10).map_err(|e| e.to_string())?;
    let s = t.get("q", "d1").ok_or("d1 not scored")?;
    ensure!((s - 1.6f64.ln()).abs() <= 1e-9, "score(d1) = {s}");
    ensure!(t.get("q", "d2") == Some(s), "d2 differs from d1");
    Ok(format!("score(d1, \"b\") = {s:.12} = ln 1.6"))
}

fn cost_model() -> Outcome {
    let one = estimate_cost(CorpusStats { passages: 1, avg_passage_tokens: 200, avg_chunks: 5 }, &CostModel::default())
        .map_err(|e| e.to_string())?;
    ensure!(one.input_tokens_per_passage == 820, "input tokens {}", one.input_tokens_per_passage);
    ensure!(one.output_tokens_per_passage == 300, "output tokens {}", one.output_tokens_per_passage);
    ensure!((one.cost_per_passage - 0.00344).abs() <= 1e-9, "cost {}", one.cost_per_passage);
    let full =
        estimate_cost(CorpusStats { passages: 484_000, avg_passage_tokens: 200, avg_chunks: 5 }, &CostModel::default())
            .map_err(|e| e.to_string())?;
    ensure!((1600.0..=1700.0).contains(&full.total_cost), "484k total {}", full.total_cost);
    Ok(format!("820 in / 300 out, {:.5} per passage, {:.2} for 484k passages", one.cost_per_passage, full.total_cost))
}

fn planted_needle() -> Outcome {
    let start = Instant::now();
    let bench = planted_benchmark(&PlantedConfig::default()).map_err(|e| e.to_string())?;
    ensure!(bench.corpus.len() == 200, "corpus size {}", bench.corpus.len());
    let encoder = HashingEncoder::new(256, 7).unwrap();
    let out = run_pipeline::<f64>(&bench, &MockAgent, &encoder, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    ensure!(out.augmentation.stats.chunks == 1000, "{} chunks", out.augmentation.stats.chunks);
    let positive = out.gain.positive_query_fraction();
    let mean_gain = out.gain.describe().map_err(|e| e.to_string())?.mean;
    ensure!(mean_gain > 0.0, "mean gain {mean_gain}");
    ensure!(positive >= 0.8, "only {:.1}% of queries gain", positive * 100.0);
    let global_only = out.global_report.mean;
    ensure!(out.sweep.best_value >= global_only, "best {} < global {global_only}", out.sweep.best_value);
    ensure!(out.sweep.points.len() == 11, "{} sweep points", out.sweep.points.len());
    ensure!(out.sweep.best_alpha < 1.0, "argmax alpha {}", out.sweep.best_alpha);
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "gain>0 for {:.0}% of queries (mean {mean_gain:.4}); nDCG@10 {:.4} at alpha {:.1} vs {global_only:.4} global; {elapsed:.2?}",
        positive * 100.0,
        out.sweep.best_value,
        out.sweep.best_alpha
    ))
}

/// Compensated sum.
fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + c
}

fn statistics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for sample in 0..10 {
        // Skewed draws: exponential plus a small normal component.
        let draws: Vec<f64> = (0..1000)
            .map(|_| {
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                let (a, b): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
                let normal = (-2.0 * a.ln()).sqrt() * (std::f64::consts::TAU * b).cos();
                -0.1 * u.ln() + 0.02 * normal - 0.05
            })
            .collect();
        let d = describe(&draws).map_err(|e| e.to_string())?;

        let n = draws.len() as f64;
        let mean = neumaier(draws.iter().copied()) / n;
        let central = |k: i32| neumaier(draws.iter().map(|x| (x - mean).powi(k))) / n;
        let (m2, m3, m4) = (central(2), central(3), central(4));
        let variance = m2 * n / (n - 1.0);
        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);
        // Hyndman-Fan type 7 with 1-based order statistics.
        let q = |p: f64| {
            let h = (n - 1.0) * p + 1.0;
            let j = h.floor() as usize;
            let lo = sorted[j - 1];
            let hi = if j < sorted.len() { sorted[j] } else { lo };
            lo + (h - j as f64) * (hi - lo)
        };
        let expected = [
            ("mean", d.mean, mean),
            ("std", d.std, variance.sqrt()),
            ("variance", d.variance, variance),
            ("min", d.min, sorted[0]),
            ("q10", d.q10, q(0.10)),
            ("q25", d.q25, q(0.25)),
            ("median", d.median, q(0.5)),
            ("q75", d.q75, q(0.75)),
            ("max", d.max, sorted[sorted.len() - 1]),
            ("skewness", d.skewness, m3 / m2.powf(1.5)),
            ("kurtosis", d.kurtosis, m4 / (m2 * m2) - 3.0),
            ("std/mean", d.std_over_mean, variance.sqrt() / mean),
        ];
        ensure!(d.n == 1000, "n = {}", d.n);
        for (name, ours, oracle) in expected {
            let diff = (ours - oracle).abs();
            ensure!(diff <= 1e-9, "sample {sample} {name}: {ours} vs {oracle}");
            worst = worst.max(diff);
        }
    }
    Ok(format!("10 samples x 1000 draws, all 12 statistics, max |diff| {worst:.1e}"))
}

// ---------------------------------------------------------------------------

/// The offline pipeline with every artifact written under `dir`.
fn offline_run(dir: &Path) -> Result<(), String> {
    let err = |e: clapr_core::Error| e.to_string();
    let bench = planted_benchmark(&PlantedConfig { passages: 80, ..PlantedConfig::default() }).map_err(err)?;
    let config = AgentConfig { concurrency_limit: 4, ..AgentConfig::default() };
    let aug = augment_corpus(&bench.corpus, &config, &MockAgent, Some(dir)).map_err(err)?;
    let encoder = HashingEncoder::new(256, 7).unwrap();
    let ps: VectorStore<f64> = embed_passages(&bench.corpus, &encoder, 16).map_err(err)?;
    let qs: VectorStore<f64> = embed_queries(&bench.queries, &encoder, 16).map_err(err)?;
    let ss: VectorStore<f64> = embed_pseudo_queries(&aug.pseudo_queries, &encoder, 16).map_err(err)?;
    ps.save(dir.join("passages.clpv")).map_err(err)?;
    qs.save(dir.join("queries.clpv")).map_err(err)?;
    ss.save(dir.join("pseudo.clpv")).map_err(err)?;
    let g = global_scores(&bench.queries, &bench.corpus, &qs, &ps, 100).map_err(err)?;
    let l = local_scores(&bench.queries, &aug.pseudo_queries, &qs, &ss, 100).map_err(err)?;
    g.save_tsv(dir.join("global.tsv")).map_err(err)?;
    l.save_tsv(dir.join("local.tsv")).map_err(err)?;
    let sweep = alpha_sweep(&g, &l, &bench.qrels, &default_grid(), Metric::Ndcg(10), 100, MissingLocalPolicy::UseGlobal)
        .map_err(err)?;
    let fused = fuse(&g, &l, &FusionConfig::new(sweep.best_alpha, 100, MissingLocalPolicy::UseGlobal).unwrap())
        .map_err(err)?;
    let run = rank(&fused, "fused");
    write_run(&run, dir.join("fused.run")).map_err(err)?;
    let reports: Vec<MetricReport<f64>> =
        vec![ndcg_at_k(&run, &bench.qrels, 10), mrr_at_k(&run, &bench.qrels, 10), recall_at_k(&run, &bench.qrels, 1000)];
    let write = |name: &str, content: String| std::fs::write(dir.join(name), content).map_err(|e| e.to_string());
    write("metrics.json", serde_json::to_string_pretty(&reports).unwrap())?;
    write("metrics.txt", report::metric_table(&reports))?;
    write("sweep.json", serde_json::to_string_pretty(&sweep).unwrap())?;
    write("sweep.svg", report::sweep_svg(&sweep))?;
    let gain = clapr_core::evaluate::similarity_gain(&bench.queries, &bench.qrels, &qs, &ps, &aug.pseudo_queries, &ss)
        .map_err(err)?;
    write("gain.json", serde_json::to_string_pretty(&gain).unwrap())?;
    write("gain_stats.txt", report::description_table("gain", &gain.describe().map_err(err)?))?;
    Ok(())
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    offline_run(a.path())?;
    offline_run(b.path())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    ensure!(fa.keys().eq(fb.keys()), "different file sets");
    ensure!(fa.contains_key(CHUNKS_FILE) && fa.contains_key(PSEUDO_QUERIES_FILE), "sidecars missing");
    let differing: Vec<&String> = fa.keys().filter(|k| fa[*k] != fb[*k]).collect();
    ensure!(differing.is_empty(), "differing files: {differing:?}");
    let bytes: usize = fa.values().map(Vec::len).sum();
    Ok(format!("{} artifacts ({bytes} bytes) byte-identical across two clean runs", fa.len()))
}

fn main() -> ExitCode {
    let all = instances();
    let criteria: Vec<Criterion<'_>> = vec![
        ("local scoring exactness", Box::new(|| algorithm_exactness(&all))),
        ("fusion endpoints", Box::new(|| fusion_endpoints(&all))),
        ("argmax invariance", Box::new(|| argmax_invariance(&all))),
        ("metric parity", Box::new(metric_parity)),
        ("bm25 hand check", Box::new(bm25_hand_check)),
        ("cost model", Box::new(cost_model)),
        ("planted needle end-to-end", Box::new(planted_needle)),
        ("statistics oracle", Box::new(statistics_oracle)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        let line = match &outcome {
            Ok(detail) => format!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                format!("FAIL  {name}: {detail}")
            }
        };
        println!("{line}");
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
