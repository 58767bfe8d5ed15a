use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use clapr_core::augment::{
    augment_corpus, estimate_cost, load_chunks, load_pseudo_queries, AgentConfig, CorpusStats, CostModel,
    HttpChatAgent, MockAgent, TextGenerator, CHUNKS_FILE, PSEUDO_QUERIES_FILE,
};
use clapr_core::embed::{Encoder, HashingEncoder, HttpEncoder};
use clapr_core::evaluate::report::{
    description_table, gain_box_svg, gain_cdf_svg, metric_table, sweep_svg, sweep_table, text_table,
};
use clapr_core::evaluate::{alpha_sweep, evaluate, ndcg_at_k_with, parse_grid, similarity_gain, structure_stats};
use clapr_core::evaluate::{GainForm, Metric};
use clapr_core::ingest::{
    load_corpus, load_qrels, load_queries, read_run, subset, write_corpus, write_qrels, write_queries, write_run,
    Subset,
};
use clapr_core::pipeline::{embed_passages, embed_pseudo_queries, embed_queries};
use clapr_core::retrieve::{bm25_scores, fuse, global_scores, local_scores, rank, Bm25Params, MissingLocalPolicy};
use clapr_core::synthetic::{planted_benchmark, PlantedConfig};
use clapr_core::{Fusion, Report, Scores, Store};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::*;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Augment(a) => augment(&a),
        Command::Embed(a) => embed(&a),
        Command::ScoreGlobal(a) => score_global(&a),
        Command::ScoreLocal(a) => score_local(&a),
        Command::Fuse(a) => fuse_cmd(&a),
        Command::Eval(a) => eval(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Gain(a) => gain(&a),
        Command::Stats(a) => stats(&a),
        Command::Cost(a) => cost(&a),
        Command::Subset(a) => subset_cmd(&a),
        Command::Planted(a) => planted(&a),
        Command::Pipeline(a) => pipeline(&a),
    }
}

fn invalid(message: impl Into<String>) -> anyhow::Error {
    Validation(message.into()).into()
}

fn require_files(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(invalid(format!("input file {} does not exist", p.display())));
        }
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    ensure_parent(path)?;
    let json = serde_json::to_string_pretty(value)?;
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parse_metric(s: &str) -> Result<Metric> {
    Ok(s.parse::<Metric>()?)
}

fn policy(m: MissingLocal) -> MissingLocalPolicy {
    match m {
        MissingLocal::UseGlobal => MissingLocalPolicy::UseGlobal,
        MissingLocal::Drop => MissingLocalPolicy::Drop,
    }
}

fn agent_config(opts: &AgentOpts) -> AgentConfig {
    AgentConfig {
        endpoint_url: opts.endpoint.clone(),
        model_name: opts.model.clone(),
        api_key_env_var: opts.api_key_env.clone(),
        temperature: opts.temperature,
        max_retries: opts.max_retries,
        concurrency_limit: opts.concurrency,
        skip_word_threshold: opts.skip_words,
        request_timeout_secs: opts.timeout_secs,
    }
}

fn augment(args: &AugmentArgs) -> Result<()> {
    require_files(&[&args.corpus])?;
    let config = agent_config(&args.agent);
    config.validate()?;
    let mut manifest = RunManifest::new("augment", args, &[&args.corpus])?;

    let corpus = load_corpus(&args.corpus)?;
    let agent: Box<dyn TextGenerator> = match args.agent.agent {
        AgentKind::Mock => Box::new(MockAgent),
        AgentKind::Http => Box::new(HttpChatAgent::from_config(&config)),
    };
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let out = augment_corpus(&corpus, &config, agent.as_ref(), Some(&args.out_dir))?;

    let s = out.stats;
    println!(
        "{}",
        text_table(
            &["passages", "chunks", "pseudo-queries", "c/p", "pq/c", "skipped", "fallbacks"],
            &[vec![
                s.passages.to_string(),
                s.chunks.to_string(),
                s.pseudo_queries.to_string(),
                format!("{:.3}", s.chunks_per_passage),
                format!("{:.3}", s.pseudo_queries_per_chunk),
                s.skipped.to_string(),
                (s.chunk_fallbacks + s.query_fallbacks).to_string(),
            ]],
        )
    );
    manifest.output(&args.out_dir.join(CHUNKS_FILE));
    manifest.output(&args.out_dir.join(PSEUDO_QUERIES_FILE));
    manifest.emit(Some(&args.out_dir.join("augment")))?;
    Ok(())
}

fn encoder(opts: &EncoderOpts) -> Result<Box<dyn Encoder>> {
    if opts.batch_size == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    Ok(match opts.encoder {
        EncoderKind::Hashing => Box::new(HashingEncoder::new(opts.dim, opts.seed)?),
        EncoderKind::Http => {
            if opts.dim == 0 {
                return Err(invalid("dimension must be positive"));
            }
            Box::new(HttpEncoder::new(
                opts.url.clone(),
                opts.dim,
                Duration::from_secs(opts.timeout_secs),
            ))
        }
    })
}

fn embed(args: &EmbedArgs) -> Result<()> {
    require_files(&[&args.input])?;
    let enc = encoder(&args.encoder)?;
    let mut manifest = RunManifest::new("embed", args, &[&args.input])?;

    let batch = args.encoder.batch_size;
    let store: Store = match args.kind {
        EmbedKind::Corpus => embed_passages(&load_corpus(&args.input)?, enc.as_ref(), batch)?,
        EmbedKind::Queries => embed_queries(&load_queries(&args.input)?, enc.as_ref(), batch)?,
        EmbedKind::PseudoQueries => embed_pseudo_queries(&load_pseudo_queries(&args.input)?, enc.as_ref(), batch)?,
    };
    ensure_parent(&args.out)?;
    store.save(&args.out)?;
    println!("{} vectors of dim {} -> {}", store.len(), store.dim(), args.out.display());
    manifest.output(&args.out);
    manifest.emit(Some(&args.out))?;
    Ok(())
}

fn check_top_k(top_k: usize) -> Result<()> {
    if top_k == 0 {
        return Err(invalid("top-k must be at least 1"));
    }
    Ok(())
}

fn score_global(args: &ScoreGlobalArgs) -> Result<()> {
    check_top_k(args.top_k)?;
    let mut inputs: Vec<&Path> = vec![&args.corpus, &args.queries];
    if let Scorer::Dense = args.scorer {
        inputs.extend(args.query_vectors.as_deref());
        inputs.extend(args.passage_vectors.as_deref());
    }
    require_files(&inputs)?;
    let params = Bm25Params { k1: args.k1, b: args.b };
    params.validate()?;
    let mut manifest = RunManifest::new("score-global", args, &inputs)?;

    let corpus = load_corpus(&args.corpus)?;
    let queries = load_queries(&args.queries)?;
    let table: Scores = match args.scorer {
        Scorer::Dense => {
            let qs = Store::load(args.query_vectors.as_ref().expect("required by clap"))?;
            let ps = Store::load(args.passage_vectors.as_ref().expect("required by clap"))?;
            global_scores(&queries, &corpus, &qs, &ps, args.top_k)?
        }
        Scorer::Bm25 => bm25_scores(&queries, &corpus, params, args.top_k)?,
    };
    ensure_parent(&args.out)?;
    table.save_tsv(&args.out)?;
    println!("{} queries, {} scores -> {}", table.num_queries(), table.num_entries(), args.out.display());
    manifest.output(&args.out);
    manifest.emit(Some(&args.out))?;
    Ok(())
}

fn score_local(args: &ScoreLocalArgs) -> Result<()> {
    check_top_k(args.top_k)?;
    let inputs: [&Path; 4] = [&args.queries, &args.pseudo_queries, &args.query_vectors, &args.pseudo_vectors];
    require_files(&inputs)?;
    let mut manifest = RunManifest::new("score-local", args, &inputs)?;

    let queries = load_queries(&args.queries)?;
    let pseudo = load_pseudo_queries(&args.pseudo_queries)?;
    let qs = Store::load(&args.query_vectors)?;
    let ps = Store::load(&args.pseudo_vectors)?;
    let table = local_scores(&queries, &pseudo, &qs, &ps, args.top_k)?;
    ensure_parent(&args.out)?;
    table.save_tsv(&args.out)?;
    println!("{} queries, {} scores -> {}", table.num_queries(), table.num_entries(), args.out.display());
    manifest.output(&args.out);
    manifest.emit(Some(&args.out))?;
    Ok(())
}

fn fuse_cmd(args: &FuseArgs) -> Result<()> {
    let config = Fusion::new(args.alpha, args.fusion.top_k, policy(args.fusion.missing_local))?;
    if args.tag.is_empty() || args.tag.contains(char::is_whitespace) {
        return Err(invalid("run tag must be a non-empty word"));
    }
    require_files(&[&args.global, &args.local])?;
    let mut manifest = RunManifest::new("fuse", args, &[&args.global, &args.local])?;

    let global = Scores::load_tsv(&args.global)?;
    let local = Scores::load_tsv(&args.local)?;
    let fused = fuse(&global, &local, &config)?;
    let run = rank(&fused, &args.tag);
    ensure_parent(&args.out)?;
    write_run(&run, &args.out)?;
    println!("{} queries, {} run lines -> {}", fused.num_queries(), run.len(), args.out.display());
    manifest.output(&args.out);
    manifest.emit(Some(&args.out))?;
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    gain: GainForm,
    reports: &'a [Report],
}

fn eval(args: &EvalArgs) -> Result<()> {
    let metrics: Vec<Metric> = args
        .metrics
        .split(',')
        .filter(|m| !m.trim().is_empty())
        .map(|m| parse_metric(m.trim()))
        .collect::<Result<_>>()?;
    if metrics.is_empty() {
        return Err(invalid("no metrics requested"));
    }
    require_files(&[&args.run, &args.qrels])?;
    let mut manifest = RunManifest::new("eval", args, &[&args.run, &args.qrels])?;

    let run = read_run(&args.run)?;
    let qrels = load_qrels(&args.qrels)?;
    let form = match args.gain {
        GainFormArg::Exponential => GainForm::Exponential,
        GainFormArg::Linear => GainForm::Linear,
    };
    let reports: Vec<Report> = metrics
        .iter()
        .map(|&m| match m {
            Metric::Ndcg(k) => ndcg_at_k_with(&run, &qrels, k, form),
            other => evaluate(&run, &qrels, other),
        })
        .collect();
    println!("{}", metric_table(&reports));
    if let Some(out) = &args.out {
        write_json(
            out,
            &EvalOutput {
                gain: form,
                reports: &reports,
            },
        )?;
        manifest.output(out);
    }
    manifest.emit(args.out.as_deref())?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    check_top_k(args.fusion.top_k)?;
    let grid = parse_grid::<f64>(&args.grid)?;
    let metric = parse_metric(&args.metric)?;
    let inputs: [&Path; 3] = [&args.global, &args.local, &args.qrels];
    require_files(&inputs)?;
    let mut manifest = RunManifest::new("sweep", args, &inputs)?;

    let global = Scores::load_tsv(&args.global)?;
    let local = Scores::load_tsv(&args.local)?;
    let qrels = load_qrels(&args.qrels)?;
    let result = alpha_sweep(
        &global,
        &local,
        &qrels,
        &grid,
        metric,
        args.fusion.top_k,
        policy(args.fusion.missing_local),
    )?;
    println!("{}", sweep_table(&result));
    write_json(&args.out, &result)?;
    manifest.output(&args.out);
    if let Some(svg) = &args.svg {
        write_text(svg, &sweep_svg(&result))?;
        manifest.output(svg);
    }
    manifest.emit(Some(&args.out))?;
    Ok(())
}

fn gain(args: &GainArgs) -> Result<()> {
    let inputs: [&Path; 6] = [
        &args.queries,
        &args.qrels,
        &args.pseudo_queries,
        &args.query_vectors,
        &args.passage_vectors,
        &args.pseudo_vectors,
    ];
    require_files(&inputs)?;
    let mut manifest = RunManifest::new("gain", args, &inputs)?;

    let queries = load_queries(&args.queries)?;
    let qrels = load_qrels(&args.qrels)?;
    let pseudo = load_pseudo_queries(&args.pseudo_queries)?;
    let qs = Store::load(&args.query_vectors)?;
    let ps = Store::load(&args.passage_vectors)?;
    let ss = Store::load(&args.pseudo_vectors)?;
    let analysis = similarity_gain(&queries, &qrels, &qs, &ps, &pseudo, &ss)?;
    let summary = analysis.describe()?;
    println!("{}", description_table("gain", &summary));
    println!("queries with positive mean gain: {:.4}", analysis.positive_query_fraction());

    #[derive(Serialize)]
    struct GainOutput<'a, D, A> {
        summary: D,
        positive_query_fraction: f64,
        analysis: &'a A,
    }
    write_json(
        &args.out,
        &GainOutput {
            summary,
            positive_query_fraction: analysis.positive_query_fraction(),
            analysis: &analysis,
        },
    )?;
    manifest.output(&args.out);
    if let Some(svg) = &args.cdf_svg {
        write_text(svg, &gain_cdf_svg(&analysis))?;
        manifest.output(svg);
    }
    if let Some(svg) = &args.box_svg {
        write_text(svg, &gain_box_svg(&analysis))?;
        manifest.output(svg);
    }
    manifest.emit(Some(&args.out))?;
    Ok(())
}

fn stats(args: &StatsArgs) -> Result<()> {
    let inputs: [&Path; 4] = [&args.corpus, &args.queries, &args.chunks, &args.pseudo_queries];
    require_files(&inputs)?;
    let mut manifest = RunManifest::new("stats", args, &inputs)?;

    let corpus = load_corpus(&args.corpus)?;
    let queries = load_queries(&args.queries)?;
    let chunks = load_chunks(&args.chunks)?;
    let pseudo = load_pseudo_queries(&args.pseudo_queries)?;
    let s = structure_stats(&corpus, &queries, &chunks, &pseudo)?;
    println!(
        "{}",
        text_table(
            &["avg |q|", "avg |p|", "|p|/|q|", "c/p", "pq/c", "expansion"],
            &[vec![
                format!("{:.2}", s.avg_query_len),
                format!("{:.2}", s.avg_passage_len),
                format!("{:.2}", s.len_ratio),
                format!("{:.3}", s.c_per_p),
                format!("{:.3}", s.pq_per_c),
                format!("{:.3}", s.index_expansion_factor),
            ]],
        )
    );
    if let Some(out) = &args.out {
        write_json(out, &s)?;
        manifest.output(out);
    }
    manifest.emit(args.out.as_deref())?;
    Ok(())
}

fn cost(args: &CostArgs) -> Result<()> {
    let mut manifest = RunManifest::new("cost", args, &[])?;
    let model = CostModel {
        input_price_per_token: args.input_price,
        output_price_per_token: args.output_price,
        ..CostModel::default()
    };
    let stats = CorpusStats {
        passages: args.passages,
        avg_passage_tokens: args.avg_tokens,
        avg_chunks: args.avg_chunks,
    };
    let estimate = estimate_cost(stats, &model)?;
    println!(
        "{}",
        text_table(
            &["passages", "in tok/p", "out tok/p", "$/passage", "in tokens", "out tokens", "total $"],
            &[vec![
                args.passages.to_string(),
                estimate.input_tokens_per_passage.to_string(),
                estimate.output_tokens_per_passage.to_string(),
                format!("{:.6}", estimate.cost_per_passage),
                estimate.input_tokens.to_string(),
                estimate.output_tokens.to_string(),
                format!("{:.2}", estimate.total_cost),
            ]],
        )
    );
    if let Some(out) = &args.out {
        write_json(out, &estimate)?;
        manifest.output(out);
    }
    manifest.emit(args.out.as_deref())?;
    Ok(())
}

fn write_collection(bench: &Subset, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (corpus, queries, qrels) = (dir.join("corpus.jsonl"), dir.join("queries.jsonl"), dir.join("qrels.tsv"));
    write_corpus(&bench.corpus, &corpus)?;
    write_queries(&bench.queries, &queries)?;
    write_qrels(&bench.qrels, &qrels)?;
    for p in [&corpus, &queries, &qrels] {
        manifest.output(p);
    }
    println!(
        "{} passages, {} queries, {} judgments -> {}",
        bench.corpus.len(),
        bench.queries.len(),
        bench.qrels.len(),
        dir.display()
    );
    Ok(())
}

fn subset_cmd(args: &SubsetArgs) -> Result<()> {
    if args.n_queries == 0 {
        return Err(invalid("n-queries must be at least 1"));
    }
    let inputs: [&Path; 3] = [&args.corpus, &args.queries, &args.qrels];
    require_files(&inputs)?;
    let mut manifest = RunManifest::new("subset", args, &inputs)?;

    let corpus = load_corpus(&args.corpus)?;
    let queries = load_queries(&args.queries)?;
    let qrels = load_qrels(&args.qrels)?;
    let bench = subset(&corpus, &queries, &qrels, args.n_queries, args.n_distractors, args.seed)?;
    write_collection(&bench, &args.out_dir, &mut manifest)?;
    manifest.emit(Some(&args.out_dir.join("subset")))?;
    Ok(())
}

fn planted(args: &PlantedArgs) -> Result<()> {
    let config = PlantedConfig {
        passages: args.passages,
        seed: args.seed,
        ..PlantedConfig::default()
    };
    config.validate()?;
    let mut manifest = RunManifest::new("planted", args, &[])?;
    let bench = planted_benchmark(&config)?;
    write_collection(&bench, &args.out_dir, &mut manifest)?;
    manifest.emit(Some(&args.out_dir.join("planted")))?;
    Ok(())
}

/// Runs the offline chain by invoking the individual subcommands, so every
/// step leaves the same files and manifest it would when run by hand.
fn pipeline(args: &PipelineArgs) -> Result<()> {
    let corpus = args.data_dir.join("corpus.jsonl");
    let queries = args.data_dir.join("queries.jsonl");
    let qrels = args.data_dir.join("qrels.tsv");
    require_files(&[&corpus, &queries, &qrels])?;
    parse_grid::<f64>(&args.grid)?;
    parse_metric(&args.metric)?;
    check_top_k(args.fusion.top_k)?;
    HashingEncoder::new(args.dim, args.seed)?;
    let mut manifest = RunManifest::new("pipeline", args, &[&corpus, &queries, &qrels])?;

    let out = |name: &str| -> PathBuf { args.out_dir.join(name) };
    let fusion = || FusionOpts {
        top_k: args.fusion.top_k,
        missing_local: args.fusion.missing_local,
    };
    let encoder_opts = || EncoderOpts {
        encoder: EncoderKind::Hashing,
        dim: args.dim,
        seed: args.seed,
        url: String::new(),
        batch_size: 64,
        timeout_secs: 0,
    };
    let defaults = AgentConfig::default();

    augment(&AugmentArgs {
        corpus: corpus.clone(),
        out_dir: args.out_dir.clone(),
        agent: AgentOpts {
            agent: AgentKind::Mock,
            endpoint: defaults.endpoint_url,
            model: defaults.model_name,
            api_key_env: defaults.api_key_env_var,
            temperature: defaults.temperature,
            max_retries: defaults.max_retries,
            concurrency: args.concurrency,
            skip_words: defaults.skip_word_threshold,
            timeout_secs: defaults.request_timeout_secs,
        },
    })?;
    let pseudo = out(PSEUDO_QUERIES_FILE);
    for (input, kind, store) in [
        (&corpus, EmbedKind::Corpus, "passages.clpv"),
        (&queries, EmbedKind::Queries, "queries.clpv"),
        (&pseudo, EmbedKind::PseudoQueries, "pseudo_queries.clpv"),
    ] {
        embed(&EmbedArgs {
            input: input.clone(),
            kind,
            out: out(store),
            encoder: encoder_opts(),
        })?;
    }
    score_global(&ScoreGlobalArgs {
        corpus: corpus.clone(),
        queries: queries.clone(),
        scorer: Scorer::Dense,
        query_vectors: Some(out("queries.clpv")),
        passage_vectors: Some(out("passages.clpv")),
        k1: 1.2,
        b: 0.75,
        top_k: args.fusion.top_k,
        out: out("global.tsv"),
    })?;
    score_local(&ScoreLocalArgs {
        queries: queries.clone(),
        pseudo_queries: pseudo.clone(),
        query_vectors: out("queries.clpv"),
        pseudo_vectors: out("pseudo_queries.clpv"),
        top_k: args.fusion.top_k,
        out: out("local.tsv"),
    })?;
    sweep(&SweepArgs {
        global: out("global.tsv"),
        local: out("local.tsv"),
        qrels: qrels.clone(),
        grid: args.grid.clone(),
        metric: args.metric.clone(),
        fusion: fusion(),
        out: out("sweep.json"),
        svg: Some(out("sweep.svg")),
    })?;
    let best: serde_json::Value = serde_json::from_str(&fs::read_to_string(out("sweep.json"))?)?;
    let best_alpha = best["best_alpha"].as_f64().context("sweep.json lacks best_alpha")?;
    fuse_cmd(&FuseArgs {
        global: out("global.tsv"),
        local: out("local.tsv"),
        alpha: best_alpha,
        fusion: fusion(),
        tag: "clapr".into(),
        out: out("fused.run"),
    })?;
    let metrics = format!("{},mrr@10,recall@{}", args.metric, args.fusion.top_k);
    eval(&EvalArgs {
        run: out("fused.run"),
        qrels: qrels.clone(),
        metrics,
        gain: GainFormArg::Exponential,
        out: Some(out("eval.json")),
    })?;
    gain(&GainArgs {
        queries: queries.clone(),
        qrels,
        pseudo_queries: pseudo.clone(),
        query_vectors: out("queries.clpv"),
        passage_vectors: out("passages.clpv"),
        pseudo_vectors: out("pseudo_queries.clpv"),
        out: out("gain.json"),
        cdf_svg: Some(out("gain_cdf.svg")),
        box_svg: Some(out("gain_box.svg")),
    })?;
    stats(&StatsArgs {
        corpus,
        queries,
        chunks: out(CHUNKS_FILE),
        pseudo_queries: pseudo,
        out: Some(out("stats.json")),
    })?;

    for name in [
        CHUNKS_FILE,
        PSEUDO_QUERIES_FILE,
        "passages.clpv",
        "queries.clpv",
        "pseudo_queries.clpv",
        "global.tsv",
        "local.tsv",
        "sweep.json",
        "sweep.svg",
        "fused.run",
        "eval.json",
        "gain.json",
        "gain_cdf.svg",
        "gain_box.svg",
        "stats.json",
    ] {
        manifest.output(&out(name));
    }
    manifest.emit(Some(&out("pipeline")))?;
    Ok(())
}
