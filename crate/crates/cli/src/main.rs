mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kgqa_core::analytics::{self, build_freq_table, compute_metrics, render_text, write_metrics_csv, Metric};
use kgqa_core::eval::{
    evaluate as run_evaluation, load_benchmark, majority_baseline, run_experiment, Adapter, Benchmark,
    ExperimentInputs, ExternalScores,
};
use kgqa_core::kg::{load_edge_files, kg_stats, LoadOptions, RelationMapping};
use kgqa_core::sampler::{compute_training_stats, sample as draw_sample, SampleSpec, Strategy, Tail};
use kgqa_core::scorer::{import_external_dynamics, initial_scorer, train_scorer, write_curve_csv, EmbeddingScorer, Scorer};
use kgqa_core::synth::{synthesize_qa, QuestionPool, SynthesisConfig, TemplateTable};
use kgqa_core::text::{StopwordList, WhitespaceTokenizer};

use config::ConfigFile;

#[derive(Debug, Parser)]
#[command(name = "kgqa", version, about = "Knowledge-graph QA synthesis, sampling and evaluation")]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON or TOML document with per-command sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest edge files and write a synthetic QA pool.
    Synthesize(SynthesizeArgs),
    /// Train the built-in scorer on a pool and record its training dynamics.
    Train(TrainArgs),
    /// Select a subset of a pool.
    Sample(SampleArgs),
    /// Score a benchmark and report accuracy.
    Evaluate(EvaluateArgs),
    /// Break benchmark accuracy down by answer similarity, length and vocabulary overlap.
    Analyze(AnalyzeArgs),
    /// Run a strategy x K x seed grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct SynthesizeArgs {
    /// KGTK-style edge files; several files are read in parallel.
    #[arg(long = "edges", required = true, num_args = 1..)]
    edges: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Relation to dimension TSV; defaults to the bundled mapping.
    #[arg(long)]
    relations: Option<PathBuf>,
    /// Relation to template TSV; defaults to the bundled templates.
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Candidates per question.
    #[arg(long)]
    n: Option<usize>,
    /// Fail on unmapped relations instead of dropping them.
    #[arg(long)]
    strict: bool,
    /// Write the ingest and skip summary here as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    pool: PathBuf,
    /// Trained scorer (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Per-question per-epoch records (JSONL).
    #[arg(long)]
    dynamics: Option<PathBuf>,
    /// Per-question training statistics (JSONL).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Training curve (CSV).
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// random, dimension, uniform, vanilla_confidence, confidence, variability, margin
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Percentage of the pool, 0 to 100.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    tail: Option<Tail>,
    #[arg(long)]
    dimension: Option<kgqa_core::kg::Dimension>,
    /// Dynamics log (JSONL) for the training-dynamics strategies.
    #[arg(long)]
    dynamics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScorerSource {
    /// Scorer written by `train`.
    #[arg(long, conflicts_with = "scores")]
    model: Option<PathBuf>,
    /// Externally produced scores (JSONL with question_id and scores).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Score with the untrained scorer built from this pool (K=0).
    #[arg(long, conflicts_with_all = ["model", "scores"])]
    vanilla: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long)]
    benchmark: PathBuf,
    /// unified, csqa, siqa, piqa, anli, winogrande
    #[arg(long, default_value = "unified")]
    adapter: String,
    /// Separate label file for adapters that need one.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Benchmark name; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    bench: BenchmarkArgs,
    #[command(flatten)]
    scorer: ScorerSource,
    /// Report JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-question predictions (JSONL).
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    bench: BenchmarkArgs,
    #[command(flatten)]
    scorer: ScorerSource,
    /// Synthetic pool the vocabulary frequencies come from.
    #[arg(long)]
    pool: PathBuf,
    /// Comma-separated subset of as, al, vo.
    #[arg(long, value_delimiter = ',', default_value = "as,al,vo")]
    metrics: Vec<Metric>,
    /// Report JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-question metric values (CSV).
    #[arg(long)]
    metrics_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Directory for report.json, sweep.csv and curves.csv.
    #[arg(long)]
    out_dir: PathBuf,
    /// Overrides `sweep.pool` of the config.
    #[arg(long)]
    pool: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(threads) = cli.threads.or(config.doc.threads) {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring thread pool")?;
    }
    let seed = cli.seed.or(config.doc.seed);
    match cli.command {
        Command::Synthesize(args) => synthesize(args, &config, seed),
        Command::Train(args) => train(args, &config, seed),
        Command::Sample(args) => sample(args, &config, seed),
        Command::Evaluate(args) => evaluate(args, &config, seed),
        Command::Analyze(args) => analyze(args, &config, seed),
        Command::Sweep(args) => sweep(args, &config, seed),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            let mut out = create(p)?;
            writeln!(out, "{text}")?;
            out.flush()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SynthesizeReport<'a> {
    config: &'a serde_json::Value,
    load: kgqa_core::kg::LoadReport,
    kg: kgqa_core::kg::KgStats,
    skips: kgqa_core::synth::SkipReport,
}

fn synthesize(args: SynthesizeArgs, config: &ConfigFile, seed: Option<u64>) -> Result<()> {
    let section = &config.doc.synthesize;
    let relations = args.relations.as_ref().or(section.relations.as_ref());
    let mapping = match relations {
        Some(p) => RelationMapping::from_file(&config.resolve(p, args.relations.is_some()))?,
        None => RelationMapping::default_cskg(),
    };
    let strict = args.strict || section.strict;
    let loaded = load_edge_files(&args.edges, &mapping, LoadOptions { strict })?;

    let mut synth = SynthesisConfig { seed: seed.unwrap_or(0), ..SynthesisConfig::default() };
    if let Some(n) = args.n.or(section.n) {
        synth.n = n;
    }
    if let Some(j) = section.max_answer_jaccard {
        synth.max_answer_jaccard = j;
    }
    if let Some(r) = section.retry_cap {
        synth.retry_cap = r;
    }
    if let Some(p) = args.templates.as_ref().or(section.templates.as_ref()) {
        synth.templates = TemplateTable::from_file(&config.resolve(p, args.templates.is_some()))?;
    }
    if let Some(p) = args.stopwords.as_ref().or(section.stopwords.as_ref()) {
        synth.stopwords = StopwordList::from_file(&config.resolve(p, args.stopwords.is_some()))?;
    }
    let out = synthesize_qa(&loaded.set, &synth)?;
    out.pool.save(&args.out)?;
    eprintln!(
        "{} statements loaded ({} dropped), {} questions written to {}",
        loaded.report.loaded,
        loaded.report.dropped,
        out.pool.len(),
        args.out.display()
    );
    if let Some(path) = &args.report {
        let report =
            SynthesizeReport { config: &config.snapshot, kg: kg_stats(&loaded.set), load: loaded.report, skips: out.skips };
        write_json(Some(path), &report)?;
    }
    Ok(())
}

fn train(args: TrainArgs, config: &ConfigFile, seed: Option<u64>) -> Result<()> {
    let pool = QuestionPool::load(&args.pool)?;
    let mut hyper = config.doc.train.clone();
    if let Some(s) = seed {
        hyper.seed = s;
    }
    if let Some(e) = args.epochs {
        hyper.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        hyper.learning_rate = lr;
    }
    if let Some(b) = args.batch_size {
        hyper.batch_size = b;
    }
    if let Some(m) = args.margin {
        hyper.margin = m;
    }
    let scorer = initial_scorer(&pool, config.doc.scorer.clone(), hyper.seed)?;
    let trained = train_scorer(scorer, &pool, &hyper)?;
    trained.scorer.save(&args.model)?;
    if let Some(path) = &args.dynamics {
        trained.log.save(path)?;
    }
    if let Some(path) = &args.stats {
        let stats = compute_training_stats(&trained.log)?;
        let mut out = create(path)?;
        out.write_all(stats.to_jsonl_string().as_bytes())?;
        out.flush()?;
    }
    if let Some(path) = &args.curve {
        write_curve_csv(&trained.curve, create(path)?)?;
    }
    if let Some(last) = trained.curve.last() {
        eprintln!(
            "trained on {} questions for {} epochs: loss {:.4}, train accuracy {:.4}",
            pool.len(),
            last.epoch,
            last.mean_loss,
            last.train_accuracy
        );
    }
    Ok(())
}

fn sample(args: SampleArgs, config: &ConfigFile, seed: Option<u64>) -> Result<()> {
    let pool = QuestionPool::load(&args.pool)?;
    let mut spec = match (&config.doc.sample, args.strategy, args.k) {
        (_, Some(strategy), Some(k)) => SampleSpec::new(strategy, k),
        (Some(spec), strategy, k) => {
            let mut spec = spec.clone();
            if let Some(s) = strategy {
                spec.strategy = s;
            }
            if let Some(k) = k {
                spec.k = k;
            }
            spec
        }
        (None, _, _) => bail!("--strategy and --k are required without a `sample` config section"),
    };
    if args.tail.is_some() {
        spec.tail = args.tail;
    }
    if args.dimension.is_some() {
        spec.dimension = args.dimension;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    let stats = if spec.strategy.uses_dynamics() {
        let path = args.dynamics.as_ref().with_context(|| format!("strategy `{}` needs --dynamics", spec.strategy))?;
        Some(compute_training_stats(&import_external_dynamics(path)?)?)
    } else {
        None
    };
    let subset = draw_sample(&pool, &spec, stats.as_ref())?;
    subset.save(&args.out)?;
    eprintln!("{} of {} questions written to {}", subset.len(), pool.len(), args.out.display());
    Ok(())
}

fn load_bench(args: &BenchmarkArgs) -> Result<Benchmark> {
    let adapter = Adapter::preset(&args.adapter)?;
    let mut bench = load_benchmark(&args.benchmark, &adapter, args.labels.as_deref())?;
    if let Some(name) = &args.name {
        bench.name = name.clone();
    }
    Ok(bench)
}

fn load_scorer(source: &ScorerSource, config: &ConfigFile, seed: Option<u64>) -> Result<Box<dyn Scorer>> {
    match (&source.model, &source.scores, &source.vanilla) {
        (Some(path), _, _) => Ok(Box::new(EmbeddingScorer::load(path)?)),
        (_, Some(path), _) => Ok(Box::new(ExternalScores::load(path)?)),
        (_, _, Some(pool)) => {
            let pool = QuestionPool::load(pool)?;
            Ok(Box::new(initial_scorer(&pool, config.doc.scorer.clone(), seed.unwrap_or(0))?))
        }
        _ => bail!("one of --model, --scores or --vanilla is required"),
    }
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    config: &'a serde_json::Value,
    benchmark: String,
    questions: usize,
    correct: usize,
    accuracy: f64,
    ties: usize,
    majority: f64,
}

fn evaluate(args: EvaluateArgs, config: &ConfigFile, seed: Option<u64>) -> Result<()> {
    let bench = load_bench(&args.bench)?;
    let scorer = load_scorer(&args.scorer, config, seed)?;
    let eval = run_evaluation(scorer.as_ref(), &bench)?;
    if let Some(path) = &args.predictions {
        let mut out = create(path)?;
        for p in &eval.predictions {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    let report = EvaluateReport {
        config: &config.snapshot,
        benchmark: eval.benchmark.clone(),
        questions: eval.total,
        correct: eval.correct,
        accuracy: eval.accuracy,
        ties: eval.ties,
        majority: majority_baseline(&bench),
    };
    write_json(args.out.as_deref(), &report)
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    config: &'a serde_json::Value,
    accuracy: f64,
    #[serde(flatten)]
    report: analytics::AnalysisReport,
}

fn analyze(args: AnalyzeArgs, config: &ConfigFile, seed: Option<u64>) -> Result<()> {
    let bench = load_bench(&args.bench)?;
    let scorer = load_scorer(&args.scorer, config, seed)?;
    let pool = QuestionPool::load(&args.pool)?;
    let eval = run_evaluation(scorer.as_ref(), &bench)?;
    let tok = WhitespaceTokenizer;
    let freq = build_freq_table(pool.iter(), &tok);
    let with_similarity = args.metrics.contains(&Metric::AnswerSimilarity);
    let metrics = compute_metrics(&bench.questions, &freq, &tok, with_similarity)?;
    if let Some(path) = &args.metrics_csv {
        write_metrics_csv(&metrics, create(path)?)?;
    }
    let report = analytics::analyze(&bench.name, &metrics, &eval.correctness(), &args.metrics)?;
    print!("{}", render_text(&report));
    if let Some(path) = &args.out {
        write_json(Some(path), &AnalyzeReport { config: &config.snapshot, accuracy: eval.accuracy, report })?;
    }
    Ok(())
}

fn sweep(args: SweepArgs, config: &ConfigFile, seed: Option<u64>) -> Result<()> {
    let mut experiment = config.doc.sweep.clone();
    if let Some(s) = seed {
        experiment.seeds = vec![s];
    }
    let pool_path = match (&args.pool, &experiment.pool) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => config.resolve(p, false),
        (None, None) => bail!("no pool: pass --pool or set `sweep.pool` in the config"),
    };
    let pool = QuestionPool::load(&pool_path)?;
    if experiment.benchmarks.is_empty() {
        bail!("the `sweep` config section lists no benchmarks");
    }
    let mut benchmarks = Vec::with_capacity(experiment.benchmarks.len());
    for source in &experiment.benchmarks {
        let adapter = Adapter::preset(&source.adapter)?;
        let path = config.resolve(&source.path, false);
        let labels = source.labels.as_ref().map(|l| config.resolve(l, false));
        let mut bench = load_benchmark(&path, &adapter, labels.as_deref())?;
        if let Some(name) = &source.name {
            bench.name = name.clone();
        }
        benchmarks.push(bench);
    }
    let dynamics = match &experiment.dynamics {
        Some(p) => Some(import_external_dynamics(&config.resolve(p, false))?),
        None => None,
    };
    let mut report =
        run_experiment(&experiment, &ExperimentInputs { pool: &pool, benchmarks: &benchmarks, dynamics: dynamics.as_ref() })?;
    report.config = serde_json::json!({ "document": config.snapshot, "effective": report.config });
    if let Err(e) = report.check_averages(&experiment.domains) {
        bail!("report does not reconcile: {e}");
    }

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut out = create(&args.out_dir.join("report.json"))?;
    writeln!(out, "{}", report.to_json_pretty())?;
    out.flush()?;
    report.write_sweep_csv(create(&args.out_dir.join("sweep.csv"))?)?;
    report.write_curves_csv(create(&args.out_dir.join("curves.csv"))?)?;
    let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
    eprintln!("{} cells ({failed} failed), results in {}", report.cells.len(), args.out_dir.display());
    Ok(())
}
