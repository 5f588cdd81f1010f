//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N ...: PASS|FAIL (...)` line and then asserts.
//!
//! Run with `cargo test -p kgqa-core --test acceptance -- --nocapture` or
//! plain `cargo test`; lines are written straight to stdout either way.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kgqa_core::analytics::{self, build_freq_table, compute_metrics, quartile_partition, DomainTable, Metric};
use kgqa_core::eval::{
    evaluate, run_experiment, Adapter, Benchmark, BenchmarkQuestion, CellStatus, ExperimentConfig, ExperimentInputs,
};
use kgqa_core::kg::{load_edge_files, parse_edges, Dimension, LoadOptions, RelationMapping};
use kgqa_core::sampler::{compute_training_stats, sample, target_size, SampleSpec, Strategy, Tail, TrainingStats};
use kgqa_core::scorer::{
    argmax, confidence, gradient_check, initial_scorer, kink_distance, margin_loss, train_scorer, DynamicsLog,
    DynamicsRecord, EmbeddingScorer, EncodedItem, ScorerConfig, TrainHyper, Vocabulary,
};
use kgqa_core::synth::{synthesize_qa, verbalize, PoolHeader, QuestionPool, SynthesisConfig, SyntheticQuestion};
use kgqa_core::text::{StopwordList, WhitespaceTokenizer};
use kgqa_core::toy::{separable_kg, separable_kg_tsv, ToyKgConfig, BUNDLED_BENCHMARK_JSONL, BUNDLED_KG_TSV};

// Timed criteria must not share the CPU with each other.
static SERIAL: Mutex<()> = Mutex::new(());

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("criterion {id} {name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

/// Collects failed sub-checks so a criterion reports all of them at once.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    fn finish(self, id: u32, name: &str, detail: String) {
        let pass = self.failures.is_empty();
        let detail = if pass { detail } else { format!("{detail}; {}", self.failures.join("; ")) };
        report(id, name, pass, &detail);
        assert!(pass, "criterion {id} failed: {detail}");
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Oracle tokenizer: split on anything not alphanumeric, lowercase whole words.
fn oracle_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(|w| w.to_lowercase()).collect()
}

fn oracle_set(text: &str) -> HashSet<String> {
    oracle_tokens(text).into_iter().collect()
}

const WORDS: &[&str] = &[
    "apple", "Bread", "cat", "dog", "Eagle", "fire", "garden", "house", "ice", "jump", "kite", "lamp", "moon", "night",
    "ocean", "pencil", "queen", "river", "stone", "tree", "umbrella", "violin", "water", "xylophone", "yarn", "zebra",
    "café", "naïve", "piano", "42", "x7",
];
const GLUE: &[&str] = &[" ", "  ", ", ", "-", "'s ", "! ", "? ", "_", "/", " (", ") "];

fn fuzz_text(r: &mut ChaCha8Rng, min_words: usize, max_words: usize) -> String {
    let n = r.gen_range(min_words..=max_words);
    let mut s = String::new();
    for i in 0..n {
        if i > 0 {
            s.push_str(GLUE.choose(r).unwrap());
        }
        s.push_str(WORDS.choose(r).unwrap());
    }
    s
}

fn fuzz_benchmark(seed: u64, size: usize) -> Benchmark {
    let mut r = rng(seed);
    let questions = (0..size)
        .map(|i| {
            let n = r.gen_range(2..=5);
            let candidates: Vec<String> = (0..n).map(|_| fuzz_text(&mut r, 1, 6)).collect();
            BenchmarkQuestion {
                id: format!("f{:04}", (i * 7919) % size),
                question: fuzz_text(&mut r, 3, 12),
                answer_index: r.gen_range(0..n),
                candidates,
            }
        })
        .collect();
    Benchmark { name: "fuzz".into(), questions }
}

fn fuzz_pool(seed: u64, size: usize) -> QuestionPool {
    let mut r = rng(seed);
    let questions = (0..size)
        .map(|i| {
            // Leave a few vocabulary words out so some benchmark tokens are unseen.
            let mut text = fuzz_text(&mut r, 2, 8);
            text = text.replace("zebra", "horse").replace("42", "43");
            SyntheticQuestion {
                id: format!("p{i:05}"),
                question: text,
                candidates: vec![fuzz_text(&mut r, 1, 3).replace("zebra", "mule"), "plain".into(), "other".into()],
                answer_index: 0,
                dimension: Dimension::ALL[i % Dimension::COUNT],
                source_statement_id: format!("s{i}"),
            }
        })
        .collect();
    QuestionPool::new(PoolHeader::new(seed), questions)
}

fn oracle_quartiles(items: &[(String, f64)]) -> (Vec<Vec<String>>, Vec<f64>) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|a, b| {
        let (ia, ib) = (&items[*a], &items[*b]);
        ia.1.partial_cmp(&ib.1).unwrap().then(ia.0.cmp(&ib.0))
    });
    let n = items.len();
    let mut blocks = Vec::new();
    let mut cuts = Vec::new();
    let mut start = 0;
    for q in 0..4 {
        let size = (n - q).div_ceil(4);
        let block: Vec<usize> = order[start..start + size].to_vec();
        if q < 3 {
            cuts.push(items[*block.last().unwrap()].1);
        }
        blocks.push(block.iter().map(|i| items[*i].0.clone()).collect());
        start += size;
    }
    (blocks, cuts)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_log(seed: u64, ids: &[String], epochs: usize) -> DynamicsLog {
    let mut r = rng(seed);
    let mut records = Vec::new();
    for id in ids {
        let n = r.gen_range(2..=5);
        let answer = r.gen_range(0..n);
        for epoch in 0..=epochs {
            let scores: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
            records.push(DynamicsRecord::from_scores(id.clone(), epoch, scores, answer));
        }
    }
    records.shuffle(&mut r);
    DynamicsLog::from_records(records).unwrap()
}

fn oracle_softmax_prob(scores: &[f64], y: usize) -> f64 {
    let denom: f64 = scores.iter().map(|s| (s - scores[y]).exp()).sum();
    1.0 / denom
}

#[test]
fn criterion_1_metric_oracles() {
    let _g = lock();
    let start = Instant::now();
    let mut c = Checks::default();
    let bench = fuzz_benchmark(101, 500);
    let pool = fuzz_pool(202, 2000);
    let tok = WhitespaceTokenizer;

    let freq = build_freq_table(pool.iter(), &tok);
    let mut oracle_freq: HashMap<String, u64> = HashMap::new();
    for q in pool.iter() {
        for text in std::iter::once(&q.question).chain(q.candidates.iter()) {
            for t in oracle_tokens(text) {
                *oracle_freq.entry(t).or_default() += 1;
            }
        }
    }
    c.check(freq.distinct() == oracle_freq.len(), || "frequency table size".into());
    for (t, n) in &oracle_freq {
        c.check(freq.get(t) == Some(*n), || format!("frequency of `{t}`"));
    }

    let metrics = compute_metrics(&bench.questions, &freq, &tok, true).unwrap();
    let mut unseen_total = 0usize;
    for (q, m) in bench.questions.iter().zip(&metrics) {
        let sets: Vec<HashSet<String>> = q.candidates.iter().map(|t| oracle_set(t)).collect();
        let (mut sum, mut pairs) = (0.0, 0.0);
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                let inter = sets[i].intersection(&sets[j]).count() as f64;
                let union = sets[i].union(&sets[j]).count() as f64;
                sum += inter / union;
                pairs += 1.0;
            }
        }
        let want_as = sum / pairs;
        c.check(close(m.answer_similarity.unwrap(), want_as, 1e-12), || format!("AS {}", q.id));

        let want_al: usize = q.candidates.iter().map(|t| oracle_tokens(t).len()).sum();
        c.check(m.answer_length == want_al, || format!("AL {}", q.id));

        let union: BTreeSet<String> = sets.iter().flatten().cloned().collect();
        let unseen = union.iter().filter(|t| !oracle_freq.contains_key(*t)).count();
        let want_vo = union.iter().map(|t| 1.0 / *oracle_freq.get(t).unwrap_or(&1) as f64).sum::<f64>() / union.len() as f64;
        c.check(close(m.vocab_overlap.value, want_vo, 1e-12), || format!("VO {}", q.id));
        c.check(m.vocab_overlap.tokens == union.len(), || format!("VO token count {}", q.id));
        c.check(m.vocab_overlap.unseen == unseen, || format!("VO unseen count {}", q.id));
        unseen_total += unseen;
    }

    let correct: HashMap<String, bool> = bench.questions.iter().map(|q| (q.id.clone(), q.id.ends_with('3'))).collect();
    for metric in Metric::ALL {
        let values: Vec<(String, f64)> =
            metrics.iter().map(|m| (m.question_id.clone(), m.value(metric).unwrap())).collect();
        let got = quartile_partition(&values).unwrap();
        let (blocks, cuts) = oracle_quartiles(&values);
        c.check(got.blocks.to_vec() == blocks, || format!("{} quartile blocks", metric.as_str()));
        c.check(got.cuts.to_vec() == cuts, || format!("{} quartile cuts", metric.as_str()));
        let part = analytics::partition_accuracy(metric.as_str(), &got, &correct).unwrap();
        for (q, block) in part.quartiles.iter().zip(&blocks) {
            let right = block.iter().filter(|id| correct[*id]).count();
            c.check(q.count == block.len() && q.correct == right, || format!("{} quartile counts", metric.as_str()));
        }
    }

    let ids: Vec<String> = bench.questions.iter().map(|q| q.id.clone()).collect();
    let log = random_log(303, &ids, 5);
    let stats = compute_training_stats(&log).unwrap();
    c.check(stats.len() == ids.len() && stats.epochs() == 5, || "stats size".into());
    for id in &ids {
        let track = log.track(id).unwrap();
        let trained: Vec<&DynamicsRecord> = track.iter().filter(|r| r.epoch >= 1).collect();
        let e = trained.len() as f64;
        let conf: Vec<f64> = trained.iter().map(|r| oracle_softmax_prob(&r.scores, r.answer_index)).collect();
        let mean = conf.iter().sum::<f64>() / e;
        let var = conf.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / e;
        let mut by_max = 0.0;
        let mut by_mean = 0.0;
        for r in &trained {
            let y = r.answer_index;
            let others: Vec<f64> = (0..r.scores.len()).filter(|i| *i != y).map(|i| r.scores[i]).collect();
            let top = others.iter().cloned().fold(f64::MIN, f64::max);
            by_max += r.scores[y] - top;
            by_mean += r.scores[y] - others.iter().sum::<f64>() / others.len() as f64;
        }
        let zero = track.iter().find(|r| r.epoch == 0).unwrap();
        let s = stats.get(id).unwrap();
        c.check(close(s.mean_confidence, mean, 1e-12), || format!("mean confidence {id}"));
        c.check(close(s.variability, var.sqrt(), 1e-12), || format!("variability {id}"));
        c.check(close(s.mean_margin, by_max / e, 1e-12), || format!("margin {id}"));
        c.check(close(s.mean_margin_avg, by_mean / e, 1e-12), || format!("mean-distractor margin {id}"));
        c.check(close(s.vanilla_confidence, oracle_softmax_prob(&zero.scores, zero.answer_index), 1e-12), || {
            format!("vanilla confidence {id}")
        });
    }

    let elapsed = start.elapsed();
    c.check(elapsed < Duration::from_secs(10), || format!("runtime {elapsed:?} >= 10s"));
    c.finish(
        1,
        "metric oracle equivalence",
        format!("500 questions, {unseen_total} unseen tokens, {:.2}s", elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_2_margin_loss() {
    let _g = lock();
    let mut c = Checks::default();
    c.check(margin_loss(&[0.9, 0.4], 0, 1.0).unwrap() == 0.25, || "0.9/0.4 case".into());
    c.check(margin_loss(&[3.0, 1.5, 0.2], 0, 1.0).unwrap() == 0.0, || "saturated case".into());
    c.check(margin_loss(&[0.0, 0.0], 1, 1.0).unwrap() == 0.5, || "equal-scores case".into());
    c.check(margin_loss(&[1.0], 0, 1.0).is_err(), || "n < 2 accepted".into());

    let mut r = rng(2);
    for trial in 0..1000 {
        let n = r.gen_range(2..=6);
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();
        let y = r.gen_range(0..n);
        let shift = r.gen_range(-50.0..50.0);
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let eta = r.gen_range(0.1..3.0);
        let (l0, l1) = (margin_loss(&scores, y, eta).unwrap(), margin_loss(&shifted, y, eta).unwrap());
        c.check(close(l0, l1, 1e-9), || format!("loss shift, trial {trial}"));
        c.check(close(confidence(&scores, y), confidence(&shifted, y), 1e-9), || format!("confidence shift, trial {trial}"));
        c.check(argmax(&scores).index == argmax(&shifted).index, || format!("argmax shift, trial {trial}"));
    }
    c.finish(2, "margin-loss correctness", "3 hand cases, 1000 shifted vectors".into());
}

fn random_batch(r: &mut ChaCha8Rng, scorer: &EmbeddingScorer, vocab: &[String]) -> Vec<EncodedItem> {
    let size = r.gen_range(1..=12);
    let words = |r: &mut ChaCha8Rng, k: usize| -> String {
        (0..k).map(|_| vocab.choose(r).unwrap().as_str()).collect::<Vec<_>>().join(" ")
    };
    (0..size)
        .map(|_| {
            let n = r.gen_range(2..=5);
            let len = r.gen_range(2..=8);
            let question = words(r, len);
            let candidates: Vec<String> = (0..n)
                .map(|_| {
                    let len = r.gen_range(1..=4);
                    words(r, len)
                })
                .collect();
            scorer.encode(&question, &candidates, r.gen_range(0..n))
        })
        .collect()
}

#[test]
fn criterion_3_gradient_check() {
    let _g = lock();
    let mut c = Checks::default();
    let mut r = rng(3);
    let vocab_words: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::from_texts(vocab_words.iter().map(String::as_str));
    let (h, margin) = (1e-5, 1.0);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut batches = 0usize;
    let mut attempts = 0usize;
    while batches < 100 && attempts < 10_000 {
        attempts += 1;
        let config = ScorerConfig { init_scale: r.gen_range(0.05..0.5), ..ScorerConfig::default() };
        let scorer = EmbeddingScorer::new(vocab.clone(), config, r.gen()).unwrap();
        let batch = random_batch(&mut r, &scorer, &vocab_words);
        if kink_distance(&scorer, &batch, margin) < 1e-3 {
            continue;
        }
        let g = gradient_check(&scorer, &batch, h, margin).unwrap();
        worst = worst.max(g.max_relative_error);
        checked += g.parameters_checked;
        batches += 1;
        c.check(g.max_relative_error < 1e-4, || format!("batch {batches}: relative error {:e}", g.max_relative_error));
    }
    c.check(batches == 100, || format!("only {batches} kink-free batches"));
    c.finish(
        3,
        "gradient check",
        format!("{batches} batches, {checked} parameters, max relative error {worst:.2e}"),
    );
}

fn round_robin_pool(n: usize) -> QuestionPool {
    let questions = (0..n)
        .map(|i| SyntheticQuestion {
            id: format!("q{i:05}"),
            question: format!("question {i}"),
            candidates: vec![format!("a{i}"), format!("b{i}"), format!("c{i}")],
            answer_index: i % 3,
            dimension: Dimension::ALL[i % Dimension::COUNT],
            source_statement_id: format!("s{i}"),
        })
        .collect();
    QuestionPool::new(PoolHeader::new(0), questions)
}

fn stat_of(stats: &TrainingStats, strategy: Strategy, id: &str) -> f64 {
    let s = stats.get(id).unwrap();
    match strategy {
        Strategy::VanillaConfidence => s.vanilla_confidence,
        Strategy::Confidence => s.mean_confidence,
        Strategy::Variability => s.variability,
        Strategy::Margin => s.mean_margin,
        _ => unreachable!(),
    }
}

#[test]
fn criterion_4_sampling_contracts() {
    let _g = lock();
    let mut c = Checks::default();
    let n = 10_000;
    let pool = round_robin_pool(n);
    let ids: Vec<String> = pool.iter().map(|q| q.id.clone()).collect();
    let log = random_log(4, &ids, 3);
    // Setup excluded from the timed part.
    let stats = compute_training_stats(&log).unwrap();
    let ks = [0.0, 1.0, 5.0, 10.0, 33.0, 50.0, 100.0];
    let start = Instant::now();
    let mut samples = 0usize;
    let ids_of = |p: &QuestionPool| -> HashSet<String> { p.iter().map(|q| q.id.clone()).collect() };

    let mut previous: Option<HashSet<String>> = None;
    for &k in &ks {
        let target = target_size(k, n);
        c.check(target == (k / 100.0 * n as f64).round() as usize, || format!("target size K={k}"));

        let s = sample(&pool, &SampleSpec::new(Strategy::Random, k).with_seed(9), None).unwrap();
        samples += 1;
        c.check(s.len() == target, || format!("random K={k}: {} != {target}", s.len()));
        let now = ids_of(&s);
        if let Some(prev) = &previous {
            c.check(prev.is_subset(&now), || format!("random K={k} does not contain the smaller sample"));
        }
        previous = Some(now);

        let s = sample(&pool, &SampleSpec::new(Strategy::Uniform, k).with_seed(9), None).unwrap();
        samples += 1;
        c.check(s.len() == target, || format!("uniform K={k}: {} != {target}", s.len()));
        let mut per_dim: BTreeMap<Dimension, usize> = Dimension::ALL.iter().map(|d| (*d, 0)).collect();
        for q in s.iter() {
            *per_dim.get_mut(&q.dimension).unwrap() += 1;
        }
        let (lo, hi) = (per_dim.values().min().unwrap(), per_dim.values().max().unwrap());
        c.check(hi - lo <= 1, || format!("uniform K={k}: spread {}", hi - lo));

        for dim in Dimension::ALL {
            let eligible = pool.iter().filter(|q| q.dimension == dim).count();
            let s = sample(&pool, &SampleSpec::new(Strategy::Dimension, k).with_dimension(dim).with_seed(9), None).unwrap();
            samples += 1;
            c.check(s.len() == target.min(eligible), || format!("dimension {dim} K={k}: size {}", s.len()));
            c.check(s.iter().all(|q| q.dimension == dim), || format!("dimension {dim} K={k}: impure"));
        }

        for strategy in [Strategy::VanillaConfidence, Strategy::Confidence, Strategy::Variability, Strategy::Margin] {
            for tail in [Tail::High, Tail::Low] {
                let spec = SampleSpec::new(strategy, k).with_tail(tail);
                let s = sample(&pool, &spec, Some(&stats)).unwrap();
                samples += 1;
                c.check(s.len() == target, || format!("{strategy}:{tail} K={k}: size {}", s.len()));
                let chosen = ids_of(&s);
                let (inside, outside): (Vec<f64>, Vec<f64>) = {
                    let mut a = Vec::new();
                    let mut b = Vec::new();
                    for id in &ids {
                        let v = stat_of(&stats, strategy, id);
                        if chosen.contains(id) {
                            a.push(v)
                        } else {
                            b.push(v)
                        }
                    }
                    (a, b)
                };
                if inside.is_empty() || outside.is_empty() {
                    continue;
                }
                let ok = match tail {
                    Tail::High => inside.iter().cloned().fold(f64::INFINITY, f64::min) >= outside.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    Tail::Low => inside.iter().cloned().fold(f64::NEG_INFINITY, f64::max) <= outside.iter().cloned().fold(f64::INFINITY, f64::min),
                };
                c.check(ok, || format!("{strategy}:{tail} K={k}: tail ordering violated"));
            }
        }
    }
    let elapsed = start.elapsed();
    c.check(elapsed < Duration::from_secs(5), || format!("runtime {elapsed:?} >= 5s"));
    c.finish(4, "sampling contracts", format!("{samples} samples of a 10000-question pool, {:.2}s", elapsed.as_secs_f64()));
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn criterion_5_synthesis_invariants() {
    let _g = lock();
    let mut c = Checks::default();
    let set = separable_kg(&ToyKgConfig { statements: 10_000, ..ToyKgConfig::default() });
    let config = SynthesisConfig { seed: 5, ..SynthesisConfig::default() };
    let single = with_threads(1, || synthesize_qa(&set, &config).unwrap());
    let multi = with_threads(4, || synthesize_qa(&set, &config).unwrap());
    let pool = &single.pool;
    let n = config.n;
    c.check(pool.len() == 10_000, || format!("{} questions generated", pool.len()));

    let stop: HashSet<String> = StopwordList::english().to_sorted_vec().into_iter().collect();
    let content = |t: &str| -> HashSet<String> { oracle_set(t).into_iter().filter(|w| !stop.contains(w)).collect() };
    let by_id: HashMap<&str, &kgqa_core::kg::Statement> = set.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut positions = vec![0usize; n];
    for q in pool.iter() {
        c.check(q.candidates.len() == n, || format!("{}: {} candidates", q.id, q.candidates.len()));
        let statement = by_id[q.source_statement_id.as_str()];
        let (_, answer) = verbalize(statement, &config.templates).unwrap();
        let matches = q.candidates.iter().filter(|t| **t == answer).count();
        c.check(matches == 1 && q.candidates[q.answer_index] == answer, || format!("{}: answer not unique", q.id));
        let sets: Vec<HashSet<String>> = q.candidates.iter().map(|t| content(t)).collect();
        for i in 0..n {
            for j in i + 1..n {
                c.check(sets[i].is_disjoint(&sets[j]), || format!("{}: candidates {i} and {j} overlap", q.id));
            }
        }
        positions[q.answer_index] += 1;
    }

    let total = pool.len() as f64;
    let p = 1.0 / n as f64;
    let sigma = (total * p * (1.0 - p)).sqrt();
    for (i, count) in positions.iter().enumerate() {
        let z = (*count as f64 - total * p) / sigma;
        c.check(z.abs() <= 3.0, || format!("position {i}: z = {z:.2}"));
    }

    let (a, b) = (single.pool.to_jsonl_string(), multi.pool.to_jsonl_string());
    c.check(a == b, || "1-thread and 4-thread outputs differ".into());
    c.finish(
        5,
        "synthesis invariants",
        format!("{} questions, positions {positions:?}, 1 vs 4 threads identical={}", pool.len(), a == b),
    );
}

fn toy_pool(seed: u64) -> QuestionPool {
    let loaded =
        parse_edges(BUNDLED_KG_TSV.as_bytes(), "toy_kg.tsv", &RelationMapping::default_cskg(), LoadOptions { strict: true })
            .unwrap();
    assert!(loaded.set.len() >= 2000);
    synthesize_qa(&loaded.set, &SynthesisConfig { seed, ..SynthesisConfig::default() }).unwrap().pool
}

fn toy_benchmark() -> Benchmark {
    Adapter::Unified.parse(BUNDLED_BENCHMARK_JSONL.as_bytes(), "toy").unwrap()
}

#[test]
fn criterion_6_adaptation_gain() {
    let _g = lock();
    let start = Instant::now();
    let mut c = Checks::default();
    let pool = toy_pool(0);
    let bench = toy_benchmark();
    let seeds: Vec<u64> = (0..5).collect();
    let config = ExperimentConfig {
        name: "toy-gain".into(),
        k: vec![0.0, 100.0],
        seeds: seeds.clone(),
        ..ExperimentConfig::default()
    };
    let report =
        run_experiment(&config, &ExperimentInputs { pool: &pool, benchmarks: std::slice::from_ref(&bench), dynamics: None })
            .unwrap();
    let mut gains = Vec::new();
    let mut monotone = 0;
    for seed in &seeds {
        let vanilla = report.cell("random", 0.0, *seed).unwrap();
        let full = report.cell("random", 100.0, *seed).unwrap();
        c.check(vanilla.status == CellStatus::Ok && full.status == CellStatus::Ok, || format!("seed {seed}: cell error"));
        let gain = full.accuracies["toy"] - vanilla.accuracies["toy"];
        gains.push(gain);
        c.check(gain >= 0.2, || format!("seed {seed}: gain {gain:.3}"));
        let losses: Vec<f64> = full.curve.iter().filter(|p| p.epoch >= 1).map(|p| p.mean_loss).collect();
        c.check(losses.len() == 5, || format!("seed {seed}: {} epochs in curve", losses.len()));
        if losses.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
    }
    c.check(monotone >= 4, || format!("loss non-increasing in only {monotone} of 5 seeds"));
    let elapsed = start.elapsed();
    c.check(elapsed < Duration::from_secs(60), || format!("runtime {elapsed:?} >= 60s"));
    let gains: Vec<String> = gains.iter().map(|g| format!("{g:.3}")).collect();
    c.finish(
        6,
        "desk-scale adaptation gain",
        format!(
            "{} questions, gains [{}], monotone loss {monotone}/5, {:.2}s",
            pool.len(),
            gains.join(", "),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_7_report_reconciliation() {
    let _g = lock();
    let mut c = Checks::default();
    let pool = toy_pool(7);
    let names = ["siqa", "csqa", "anli", "piqa", "wg"];
    let base = toy_benchmark();
    let benchmarks: Vec<Benchmark> = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut b = base.clone();
            b.name = name.to_string();
            // Different slices, and one fuzzed benchmark that the scorer cannot solve.
            b.questions = if i == 4 {
                fuzz_benchmark(77, 120).questions
            } else {
                b.questions.into_iter().skip(i * 100).take(150 + 10 * i).collect()
            };
            b
        })
        .collect();
    let config = ExperimentConfig {
        name: "reconcile".into(),
        strategies: ["random", "uniform", "confidence:high", "margin:low"].iter().map(|s| s.parse().unwrap()).collect(),
        k: vec![0.0, 10.0, 50.0],
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    };
    let report =
        run_experiment(&config, &ExperimentInputs { pool: &pool, benchmarks: &benchmarks, dynamics: None }).unwrap();
    let table = DomainTable::default();
    c.check(report.check_averages(&table).is_ok(), || format!("{:?}", report.check_averages(&table)));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    for cell in &report.cells {
        c.check(cell.status == CellStatus::Ok, || format!("{} K={} seed={}: {:?}", cell.strategy, cell.k, cell.seed, cell.error));
        let a = |n: &str| cell.accuracies[n];
        let all = mean(&names.map(a));
        let hdo = mean(&[a("siqa"), a("csqa")]);
        let ldo = mean(&[a("anli"), a("piqa"), a("wg")]);
        c.check(close(cell.avg.unwrap(), all, 1e-9), || format!("{} avg", cell.strategy));
        c.check(close(cell.avg_hdo.unwrap(), hdo, 1e-9), || format!("{} avg_hdo", cell.strategy));
        c.check(close(cell.avg_ldo.unwrap(), ldo, 1e-9), || format!("{} avg_ldo", cell.strategy));
    }

    // Quartile reports of a vanilla and an adapted scorer on every benchmark.
    let tok = WhitespaceTokenizer;
    let freq = build_freq_table(pool.iter(), &tok);
    let vanilla = initial_scorer(&pool, ScorerConfig::default(), 0).unwrap();
    let adapted = train_scorer(vanilla.clone(), &pool, &TrainHyper::default()).unwrap().scorer;
    let mut partitions = 0;
    for scorer in [&vanilla, &adapted] {
        for b in &benchmarks {
            let eval = evaluate(scorer, b).unwrap();
            let metrics = compute_metrics(&b.questions, &freq, &tok, true).unwrap();
            let analysis = analytics::analyze(&b.name, &metrics, &eval.correctness(), &Metric::ALL).unwrap();
            for p in &analysis.partitions {
                partitions += 1;
                let count: usize = p.quartiles.iter().map(|q| q.count).sum();
                let right: usize = p.quartiles.iter().map(|q| q.correct).sum();
                c.check(count == eval.total && right == eval.correct, || format!("{} {}: counts", b.name, p.metric));
                c.check(p.overall_accuracy == eval.accuracy, || format!("{} {}: overall accuracy", b.name, p.metric));
                c.check(p.reconciles(), || format!("{} {}: weighted accuracy", b.name, p.metric));
            }
        }
    }
    c.finish(
        7,
        "report reconciliation",
        format!("{} cells, {partitions} quartile reports", report.cells.len()),
    );
}

fn throughput_shards(root: &std::path::Path, name: &str, statements: usize, shards: usize) -> Vec<PathBuf> {
    let dir = root.join(name);
    std::fs::create_dir_all(&dir).unwrap();
    let tsv = separable_kg_tsv(&ToyKgConfig { statements, classes: 64, fillers: 4000, seed: 8 });
    let mut lines = tsv.lines();
    let header = lines.next().unwrap();
    let rows: Vec<&str> = lines.collect();
    let per = rows.len().div_ceil(shards);
    rows.chunks(per)
        .enumerate()
        .map(|(i, chunk)| {
            let path = dir.join(format!("shard{i}.tsv"));
            let mut body = String::with_capacity(chunk.len() * 64);
            body.push_str(header);
            body.push('\n');
            for row in chunk {
                body.push_str(row);
                body.push('\n');
            }
            std::fs::write(&path, body).unwrap();
            path
        })
        .collect()
}

fn ingest_and_synthesize(paths: &[PathBuf]) -> (usize, Duration) {
    let start = Instant::now();
    let loaded = load_edge_files(paths, &RelationMapping::default_cskg(), LoadOptions { strict: true }).unwrap();
    let out = synthesize_qa(&loaded.set, &SynthesisConfig::default()).unwrap();
    (out.pool.len(), start.elapsed())
}

#[test]
fn criterion_8_throughput() {
    let _g = lock();
    let mut c = Checks::default();
    let dir = tempfile::tempdir().unwrap();
    let one_file = throughput_shards(dir.path(), "whole", 100_000, 1);
    let four_files = throughput_shards(dir.path(), "split", 100_000, 4);

    let (generated, serial) = with_threads(1, || ingest_and_synthesize(&one_file));
    c.check(generated == 100_000, || format!("{generated} questions generated"));
    c.check(serial < Duration::from_secs(30), || format!("single-threaded {serial:?} >= 30s"));

    // Scaling compares the same four-shard input at 1 and 4 workers.
    let (_, t1) = with_threads(1, || ingest_and_synthesize(&four_files));
    let (_, t4) = with_threads(4, || ingest_and_synthesize(&four_files));
    let speedup = t1.as_secs_f64() / t4.as_secs_f64();
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let scaled = (3.2..=4.8).contains(&speedup);
    let detail = format!(
        "100000 statements single-threaded {:.2}s; 4 shards 1 worker {:.2}s, 4 workers {:.2}s, speedup {speedup:.2}x, {cpus} CPU(s)",
        serial.as_secs_f64(),
        t1.as_secs_f64(),
        t4.as_secs_f64()
    );
    if cpus >= 4 || scaled {
        c.check(scaled, || format!("speedup {speedup:.2}x outside 3.2x to 4.8x"));
        c.finish(8, "throughput", detail);
    } else {
        // Four workers cannot run concurrently on this host. The criterion is
        // reported as failed, but only the single-threaded budget aborts the
        // run so the remaining test targets still execute.
        let budget_ok = c.failures.is_empty();
        let why = if budget_ok { String::new() } else { format!("; {}", c.failures.join("; ")) };
        report(8, "throughput", false, &format!("{detail}; 4-worker scaling needs 4 CPUs{why}"));
        assert!(budget_ok, "criterion 8 single-threaded budget failed: {detail}{why}");
    }
}
