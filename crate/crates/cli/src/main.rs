mod manifest;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use premsel_core::eval::QuerySet;
use premsel_core::pairs::write_pairs;
use premsel_core::retrieval::ModelMethod;
use premsel_core::wiki::{build_corpus, load_pages, read_tag_list, BuildConfig, CategoryRules, DEFAULT_EXCLUDE_TAGS};
use premsel_core::{
    compute_stats, evaluate, export_pairs, make_queries, CandidatePool, Corpus, EvaluationConfig, Method, PairConfig,
    PremiseGraph, PvDbowModel, PvDbowParams, RetrievalModel, ScoreTable, Scorer, Strategy, TfIdfModel, Tokenizer,
};

use manifest::{digest_path, digest_report, now_unix, RunManifest};

#[derive(Parser, Debug)]
#[command(
    name = "premsel",
    version,
    about = "Build, inspect and benchmark premise-selection corpora"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Worker threads for parallel stages (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Seed for every random choice in the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Parse a wiki dump or page directory into corpus JSON files.
    Build(BuildArgs),
    /// Check a corpus for structural problems.
    Validate(ValidateArgs),
    /// Write the token stream of every statement as JSON lines.
    Tokenize(TokenizeArgs),
    /// Corpus and premise-graph statistics.
    Stats(StatsArgs),
    /// k-hop premise sets.
    Hops(HopsArgs),
    /// Fit a TF-IDF or PV-DBOW model on statement texts.
    Train(TrainArgs),
    /// Rank premises for every query and report MAP.
    Evaluate(EvaluateArgs),
    /// Labelled (statement, candidate) pairs for a pairwise scorer.
    ExportPairs(ExportPairsArgs),
    /// Re-run a recorded command and compare its outputs.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Serialize)]
struct BuildArgs {
    /// MediaWiki XML export or directory of .wiki files.
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// TOML category rules; the bundled rules when absent.
    #[arg(long)]
    category_rules: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    min_count: usize,
    /// Maintenance tags excluding a page, one per line.
    #[arg(long)]
    exclude_tags: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Where to write the report (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct TokenizeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "tokenised")]
    strategy: Strategy,
    /// Drop `$` delimiters in character-level streams.
    #[arg(long)]
    no_delimiters: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct HopsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, short = 'k', default_value_t = 1)]
    k: usize,
    /// Restrict to these entries; every entry with premises when absent.
    #[arg(long)]
    id: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum TrainMethod {
    Tfidf,
    Pvdbow,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long, value_enum)]
    method: TrainMethod,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "tokenised")]
    strategy: Strategy,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    negative: usize,
    #[arg(long, default_value_t = 2)]
    min_count: u64,
    #[arg(long, default_value_t = 0.025)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum EvalMethod {
    Tfidf,
    Pvdbow,
    ExternalScores,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum PoolArg {
    /// Every corpus entry.
    All,
    /// Only entries in the `--category`.
    Category,
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    /// Trained model file.
    #[arg(long, conflicts_with = "scores")]
    model: Option<PathBuf>,
    /// Tab-separated query_id, candidate_id, score records.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    /// Defaults to the model's method, or external-scores with --scores.
    #[arg(long, value_enum)]
    method: Option<EvalMethod>,
    /// Defaults to the model's strategy.
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long, default_value_t = 1)]
    hops: usize,
    #[arg(long)]
    category: Option<String>,
    #[arg(long, value_enum, default_value = "category")]
    pool: PoolArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ExportPairsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 1)]
    hops: usize,
    #[arg(long, default_value_t = 4)]
    negative_ratio: usize,
    #[arg(long, default_value_t = 0.1)]
    dev_fraction: f64,
    #[arg(long)]
    category: Option<String>,
    /// Output directory for train.tsv, dev.tsv, queries.tsv and candidates.tsv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
}

/// Files a command read and wrote, for the manifest.
struct Artifacts {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    /// Output whose manifest this is.
    primary: PathBuf,
    /// Outputs hashed without timing.
    reports: Vec<PathBuf>,
}

impl Artifacts {
    fn new(inputs: &[&Path], output: &Path) -> Self {
        Artifacts {
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            outputs: vec![output.to_path_buf()],
            primary: output.to_path_buf(),
            reports: Vec::new(),
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_corpus(dir: &Path) -> Result<Corpus> {
    Corpus::read_dir(dir).with_context(|| format!("loading corpus from {}", dir.display()))
}

fn cmd_build(a: &BuildArgs) -> Result<Artifacts> {
    let pages = load_pages(&a.source).with_context(|| format!("loading pages from {}", a.source.display()))?;
    info!("loaded {} pages", pages.len());
    let rules = match &a.category_rules {
        Some(p) => CategoryRules::from_file(p)?,
        None => CategoryRules::default(),
    };
    let exclude_tags = match &a.exclude_tags {
        Some(p) => read_tag_list(p)?,
        None => DEFAULT_EXCLUDE_TAGS.iter().map(|t| t.to_string()).collect(),
    };
    let config = BuildConfig {
        rules,
        min_count: a.min_count,
        exclude_tags,
    };
    let (corpus, report) = build_corpus(&pages, &config)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    corpus.write_dir(&a.out)?;
    write_json(&a.out.join("build-report.json"), &report)?;
    info!(
        "{} entries, {} excluded pages, {} failures, {} pages with unresolved links",
        corpus.len(),
        report.excluded.len(),
        report.failures.len(),
        report.unresolved_links.len()
    );
    for f in &report.failures {
        warn!("{}: {}", f.title, f.message);
    }
    let mut inputs: Vec<&Path> = vec![&a.source];
    if let Some(p) = &a.category_rules {
        inputs.push(p);
    }
    if let Some(p) = &a.exclude_tags {
        inputs.push(p);
    }
    Ok(Artifacts::new(&inputs, &a.out))
}

fn cmd_validate(a: &ValidateArgs) -> Result<Option<Artifacts>> {
    let corpus = load_corpus(&a.corpus)?;
    let report = corpus.validate();
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    if !report.is_valid() {
        for issue in report.issues.iter().take(20) {
            eprintln!("{issue}");
        }
        match &a.out {
            Some(out) => bail!("{} validation issues, report in {}", report.issues.len(), out.display()),
            None => bail!("{} validation issues", report.issues.len()),
        }
    }
    println!("valid: {} entries", corpus.len());
    Ok(a.out.as_ref().map(|out| Artifacts::new(&[&a.corpus], out)))
}

fn cmd_tokenize(a: &TokenizeArgs) -> Result<Artifacts> {
    let corpus = load_corpus(&a.corpus)?;
    let tokenizer = Tokenizer::new(a.strategy).with_delimiters(!a.no_delimiters);
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = BufWriter::new(file);
    for e in corpus.entries() {
        serde_json::to_writer(&mut w, &tokenizer.stream(&e.id, &e.statement_text))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(Artifacts::new(&[&a.corpus], &a.out))
}

fn cmd_stats(a: &StatsArgs) -> Result<Artifacts> {
    let corpus = load_corpus(&a.corpus)?;
    let graph = PremiseGraph::build(&corpus);
    let stats = compute_stats(&corpus, &graph);
    info!(
        "{} entries, graph {} nodes / {} edges",
        stats.total_entries, stats.node_count, stats.edge_count
    );
    write_json(&a.out, &stats)?;
    Ok(Artifacts::new(&[&a.corpus], &a.out))
}

fn cmd_hops(a: &HopsArgs) -> Result<Artifacts> {
    let corpus = load_corpus(&a.corpus)?;
    let graph = PremiseGraph::build(&corpus);
    let sets = if a.id.is_empty() {
        graph.k_hop_all(a.k)?
    } else {
        a.id.iter()
            .map(|id| Ok((id.clone(), graph.k_hop_premises(id, a.k)?)))
            .collect::<Result<BTreeMap<_, _>>>()?
    };
    write_json(&a.out, &sets)?;
    Ok(Artifacts::new(&[&a.corpus], &a.out))
}

fn cmd_train(a: &TrainArgs, seed: u64) -> Result<Artifacts> {
    let corpus = load_corpus(&a.corpus)?;
    let tokenizer = Tokenizer::new(a.strategy);
    let streams: Vec<_> = corpus
        .entries()
        .iter()
        .map(|e| tokenizer.stream(&e.id, &e.statement_text))
        .collect();
    let model = match a.method {
        TrainMethod::Tfidf => RetrievalModel::Tfidf(TfIdfModel::fit(&streams)?),
        TrainMethod::Pvdbow => {
            let params = PvDbowParams {
                dim: a.dim,
                epochs: a.epochs,
                negative: a.negative,
                min_count: a.min_count,
                alpha: a.alpha,
                seed,
                ..Default::default()
            };
            let m = PvDbowModel::train(&streams, &params)?;
            info!("epoch losses {:?}", m.epoch_losses);
            RetrievalModel::Pvdbow(m)
        }
    };
    model.save(&a.out)?;
    info!(
        "model with {} documents written to {}",
        model.doc_ids().len(),
        a.out.display()
    );
    Ok(Artifacts::new(&[&a.corpus], &a.out))
}

fn cmd_evaluate(a: &EvaluateArgs, seed: u64) -> Result<Artifacts> {
    let corpus = load_corpus(&a.corpus)?;
    let graph = PremiseGraph::build(&corpus);
    let pool = if a.pool == PoolArg::Category {
        CandidatePool::CategoryRestricted
    } else {
        CandidatePool::AllEntries
    };
    let mut inputs: Vec<&Path> = vec![&a.corpus];
    let report = match (&a.model, &a.scores) {
        (Some(path), None) => {
            let model = RetrievalModel::load(path).with_context(|| format!("loading model {}", path.display()))?;
            inputs.push(path);
            let method = match a.method {
                Some(EvalMethod::Tfidf) => Method::Tfidf,
                Some(EvalMethod::Pvdbow) => Method::Pvdbow,
                Some(EvalMethod::ExternalScores) => bail!("--method external-scores needs --scores"),
                None => match model.method() {
                    ModelMethod::Tfidf => Method::Tfidf,
                    ModelMethod::Pvdbow => Method::Pvdbow,
                },
            };
            let config = EvaluationConfig {
                strategy: a.strategy.unwrap_or(model.strategy()),
                method,
                hop_k: a.hops,
                category_filter: a.category.clone(),
                candidate_pool: pool,
                seed,
            };
            evaluate(&corpus, &graph, Scorer::Model(&model), &config)?
        }
        (None, Some(path)) => {
            if matches!(a.method, Some(EvalMethod::Tfidf | EvalMethod::Pvdbow)) {
                bail!("--scores goes with --method external-scores");
            }
            let table = ScoreTable::load(path).with_context(|| format!("loading scores {}", path.display()))?;
            inputs.push(path);
            let config = EvaluationConfig {
                strategy: a.strategy.unwrap_or(Strategy::TokenisedExpression),
                method: Method::ExternalScores,
                hop_k: a.hops,
                category_filter: a.category.clone(),
                candidate_pool: pool,
                seed,
            };
            evaluate(&corpus, &graph, Scorer::External(&table), &config)?
        }
        _ => bail!("give exactly one of --model or --scores"),
    };
    println!(
        "MAP {:.6} over {} queries ({} skipped, pool {})",
        report.map_score,
        report.num_queries,
        report.skipped_queries.len(),
        report.candidate_pool_size
    );
    write_json(&a.out, &report)?;
    let mut art = Artifacts::new(&inputs, &a.out);
    art.reports.push(a.out.clone());
    Ok(art)
}

fn write_tsv_texts(path: &Path, rows: impl Iterator<Item = (String, String)>) -> Result<()> {
    use premsel_core::pairs::escape_field;
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for (id, text) in rows {
        writeln!(w, "{}\t{}", escape_field(&id), escape_field(&text))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_export_pairs(a: &ExportPairsArgs, seed: u64) -> Result<Artifacts> {
    let corpus = load_corpus(&a.corpus)?;
    let graph = PremiseGraph::build(&corpus);
    let config = EvaluationConfig {
        hop_k: a.hops,
        category_filter: a.category.clone(),
        candidate_pool: if a.category.is_some() {
            CandidatePool::CategoryRestricted
        } else {
            CandidatePool::AllEntries
        },
        seed,
        ..Default::default()
    };
    let queries: QuerySet = make_queries(&corpus, &graph, &config)?;
    let split = export_pairs(
        &corpus,
        &queries,
        &PairConfig {
            negative_ratio: a.negative_ratio,
            dev_fraction: a.dev_fraction,
            seed,
        },
    )?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for (name, pairs) in [("train.tsv", &split.train), ("dev.tsv", &split.dev)] {
        let path = a.out.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        write_pairs(&mut w, pairs)?;
        w.flush()?;
    }
    write_tsv_texts(
        &a.out.join("queries.tsv"),
        queries.queries.iter().map(|q| (q.id.clone(), q.text.clone())),
    )?;
    write_tsv_texts(
        &a.out.join("candidates.tsv"),
        queries.pool.iter().map(|id| {
            (
                id.clone(),
                corpus.get(id).map(|e| e.statement_text.clone()).unwrap_or_default(),
            )
        }),
    )?;
    println!(
        "{} train pairs, {} dev pairs, {} queries",
        split.train.len(),
        split.dev.len(),
        queries.queries.len()
    );
    Ok(Artifacts::new(&[&a.corpus], &a.out))
}

fn digest_outputs(art: &Artifacts) -> Result<BTreeMap<String, String>> {
    art.outputs
        .iter()
        .map(|p| {
            let digest = if art.reports.contains(p) {
                digest_report(p)?
            } else {
                digest_path(p)?
            };
            Ok((p.display().to_string(), digest))
        })
        .collect()
}

fn digest_inputs(art: &Artifacts) -> Result<BTreeMap<String, String>> {
    art.inputs
        .iter()
        .map(|p| Ok((p.display().to_string(), digest_path(p)?)))
        .collect()
}

/// Runs one parsed command, returning what it read and wrote.
fn dispatch(cli: &Cli) -> Result<Option<Artifacts>> {
    Ok(match &cli.command {
        Command::Build(a) => Some(cmd_build(a)?),
        Command::Validate(a) => cmd_validate(a)?,
        Command::Tokenize(a) => Some(cmd_tokenize(a)?),
        Command::Stats(a) => Some(cmd_stats(a)?),
        Command::Hops(a) => Some(cmd_hops(a)?),
        Command::Train(a) => Some(cmd_train(a, cli.seed)?),
        Command::Evaluate(a) => Some(cmd_evaluate(a, cli.seed)?),
        Command::ExportPairs(a) => Some(cmd_export_pairs(a, cli.seed)?),
        Command::Replay(a) => {
            replay(&a.manifest)?;
            None
        }
    })
}

fn subcommand_name(c: &Command) -> String {
    serde_json::to_value(c)
        .ok()
        .and_then(|v| v.get("subcommand").and_then(|s| s.as_str().map(String::from)))
        .unwrap_or_default()
}

fn run_recorded(cli: &Cli, argv: &[String]) -> Result<()> {
    let started = now_unix();
    let Some(art) = dispatch(cli)? else {
        return Ok(());
    };
    let manifest = RunManifest {
        tool: "premsel".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand_name(&cli.command),
        argv: argv.to_vec(),
        flags: serde_json::to_value(&cli.command)?,
        seed: cli.seed,
        workers: cli.workers,
        inputs: digest_inputs(&art)?,
        outputs: digest_outputs(&art)?,
        started_at_unix: started,
        finished_at_unix: now_unix(),
    };
    let path = manifest.write(&art.primary)?;
    info!("manifest written to {}", path.display());
    Ok(())
}

fn replay(path: &Path) -> Result<()> {
    let recorded = RunManifest::read(path)?;
    if recorded.subcommand == "replay" {
        bail!("a replay manifest cannot be replayed");
    }
    for (input, digest) in &recorded.inputs {
        let now = digest_path(Path::new(input))?;
        if &now != digest {
            bail!("input {input} changed since the recorded run");
        }
    }
    let argv: Vec<String> = std::iter::once("premsel".to_string())
        .chain(recorded.argv.iter().cloned())
        .collect();
    let cli = Cli::try_parse_from(&argv).context("recorded arguments no longer parse")?;
    let art = dispatch(&cli)?.context("recorded command produced no artifacts")?;
    let outputs = digest_outputs(&art)?;
    let mut mismatched = Vec::new();
    for (out, digest) in &recorded.outputs {
        if outputs.get(out) != Some(digest) {
            mismatched.push(out.clone());
        }
    }
    if !mismatched.is_empty() {
        bail!("outputs differ from the recorded run: {}", mismatched.join(", "));
    }
    println!("replay matches: {} output(s) identical", recorded.outputs.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run_recorded(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
