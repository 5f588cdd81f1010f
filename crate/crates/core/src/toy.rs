//! A small synthetic knowledge graph whose questions a bag-of-tokens scorer
//! can learn, plus a benchmark drawn from the same token classes.
//!
//! Every statement belongs to a class `c`: its head carries the token
//! `subj<c>` and its tail the token `obj<c>`. Tails of one class share a
//! token, so the non-overlap rule forces every distractor to come from a
//! different class and the class pairing alone identifies the answer.

use std::fmt::Write as _;

use rand::Rng;

use crate::eval::{Benchmark, BenchmarkQuestion};
use crate::kg::{Dimension, RelationMapping, Statement, StatementSet};
use crate::rng;

/// One relation per dimension, all present in the bundled mapping.
pub const TOY_RELATIONS: [(&str, Dimension); Dimension::COUNT] = [
    ("/r/FormOf", Dimension::Lexical),
    ("/r/Synonym", Dimension::Similarity),
    ("/r/Antonym", Dimension::Distinctness),
    ("/r/IsA", Dimension::Taxonomic),
    ("/r/PartOf", Dimension::PartWhole),
    ("/r/CreatedBy", Dimension::Creation),
    ("/r/UsedFor", Dimension::Utility),
    ("/r/ComparedTo", Dimension::Comparative),
    ("/r/HasProperty", Dimension::Quality),
    ("/r/Causes", Dimension::Temporal),
    ("/r/AtLocation", Dimension::Spatial),
    ("/r/Desires", Dimension::Motivational),
    ("/r/RelatedTo", Dimension::RelationalOther),
];

/// The bundled 2,400-statement edge file, generated by [`separable_kg_tsv`]
/// with the default [`ToyKgConfig`].
pub const BUNDLED_KG_TSV: &str = include_str!("../data/toy_kg.tsv");

/// The bundled 600-question benchmark, generated by [`aligned_benchmark`]
/// with the default [`ToyBenchmarkConfig`] and written as unified JSONL.
pub const BUNDLED_BENCHMARK_JSONL: &str = include_str!("../data/toy_benchmark.jsonl");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyKgConfig {
    pub statements: usize,
    pub classes: usize,
    pub fillers: usize,
    pub seed: u64,
}

impl Default for ToyKgConfig {
    fn default() -> Self {
        Self { statements: 2400, classes: 16, fillers: 400, seed: 11 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyBenchmarkConfig {
    pub name: String,
    pub questions: usize,
    pub n: usize,
    pub classes: usize,
    pub fillers: usize,
    pub seed: u64,
}

impl Default for ToyBenchmarkConfig {
    fn default() -> Self {
        Self { name: "toy".into(), questions: 600, n: 3, classes: 16, fillers: 400, seed: 13 }
    }
}

pub fn separable_kg(config: &ToyKgConfig) -> StatementSet {
    let mut rng = rng::stream(config.seed, "toy-kg");
    let statements = (0..config.statements)
        .map(|i| {
            let class = rng.gen_range(0..config.classes);
            let (relation, dimension) = TOY_RELATIONS[i % TOY_RELATIONS.len()];
            Statement {
                id: format!("toy{i:06}"),
                head: format!("subj{class} item{}", rng.gen_range(0..config.fillers)),
                relation: relation.to_string(),
                tail: format!("obj{class} trait{}", rng.gen_range(0..config.fillers)),
                qualifiers: Default::default(),
                dimension,
            }
        })
        .collect();
    StatementSet::new("toy_kg.tsv", statements)
}

/// KGTK-style edge file for [`separable_kg`].
pub fn separable_kg_tsv(config: &ToyKgConfig) -> String {
    let set = separable_kg(config);
    let mut out = String::from("id\tnode1\trelation\tnode2\tnode1;label\tnode2;label\n");
    for s in &set {
        let node = |text: &str| format!("/c/en/{}", text.replace(' ', "_"));
        writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", s.id, node(&s.head), s.relation, node(&s.tail), s.head, s.tail)
            .expect("string write");
    }
    out
}

/// The default mapping restricted to [`TOY_RELATIONS`].
pub fn toy_mapping() -> RelationMapping {
    TOY_RELATIONS.iter().map(|(r, d)| (r.to_string(), *d)).collect()
}

/// Questions built from the toy classes: the correct candidate is the only
/// one carrying the question's class token.
pub fn aligned_benchmark(config: &ToyBenchmarkConfig) -> Benchmark {
    assert!(config.n >= 2 && config.n <= config.classes, "need 2 <= n <= classes");
    let mut rng = rng::stream(config.seed, "toy-benchmark");
    let questions = (0..config.questions)
        .map(|i| {
            let class = rng.gen_range(0..config.classes);
            let answer_index = rng.gen_range(0..config.n);
            let mut classes = vec![class];
            while classes.len() < config.n {
                let c = rng.gen_range(0..config.classes);
                if !classes.contains(&c) {
                    classes.push(c);
                }
            }
            let mut candidates: Vec<String> = classes[1..]
                .iter()
                .map(|c| format!("obj{c} trait{}", rng.gen_range(0..config.fillers)))
                .collect();
            candidates.insert(answer_index, format!("obj{class} trait{}", rng.gen_range(0..config.fillers)));
            BenchmarkQuestion {
                id: format!("{}-{i:05}", config.name),
                question: format!("Which one goes with subj{class} item{}?", rng.gen_range(0..config.fillers)),
                candidates,
                answer_index,
            }
        })
        .collect();
    Benchmark { name: config.name.clone(), questions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Adapter;
    use crate::kg::{parse_edges, LoadOptions};

    #[test]
    fn bundled_kg_matches_generator() {
        assert_eq!(BUNDLED_KG_TSV, separable_kg_tsv(&ToyKgConfig::default()));
        let loaded = parse_edges(BUNDLED_KG_TSV.as_bytes(), "toy_kg.tsv", &toy_mapping(), LoadOptions { strict: true }).unwrap();
        assert_eq!(loaded.set.statements, separable_kg(&ToyKgConfig::default()).statements);
    }

    #[test]
    fn bundled_benchmark_matches_generator() {
        let generated = aligned_benchmark(&ToyBenchmarkConfig::default());
        let bundled = Adapter::Unified.parse(BUNDLED_BENCHMARK_JSONL.as_bytes(), "toy").unwrap();
        assert_eq!(bundled.questions, generated.questions);
    }

    #[test]
    fn every_dimension_is_populated() {
        let set = separable_kg(&ToyKgConfig::default());
        assert!(set.dimension_counts().values().all(|c| *c > 100));
        let mapping = RelationMapping::default_cskg();
        for (r, d) in TOY_RELATIONS {
            assert_eq!(mapping.get(r), Some(d));
        }
    }
}
