use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distractors::{sample_distractors, DistractorIndex};
use super::templates::{verbalize, TemplateTable};
use super::{PoolHeader, QuestionPool, SkipReport, SyntheticQuestion};
use crate::kg::{Statement, StatementSet};
use crate::text::{sha256_hex, StopwordFilter, StopwordList, WhitespaceTokenizer};
use crate::{rng, Error, Result, SkipCause};

/// Tokenizer whose output the answer non-overlap rule is stated over.
pub fn content_tokenizer(stopwords: &StopwordList) -> StopwordFilter<WhitespaceTokenizer> {
    StopwordFilter::new(WhitespaceTokenizer, stopwords.clone())
}

#[derive(Debug, Clone)]
pub struct SynthesisConfig {
    /// Candidates per question.
    pub n: usize,
    pub seed: u64,
    /// Largest content-token Jaccard similarity allowed between two candidates.
    pub max_answer_jaccard: f64,
    /// Draws per distractor slot and eligibility tier.
    pub retry_cap: usize,
    pub templates: TemplateTable,
    pub stopwords: StopwordList,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            n: 3,
            seed: 0,
            max_answer_jaccard: 0.0,
            retry_cap: 20,
            templates: TemplateTable::default_cskg(),
            stopwords: StopwordList::english(),
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if self.retry_cap == 0 {
            return Err(Error::Config("retry_cap must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.max_answer_jaccard) {
            return Err(Error::Config(format!("max_answer_jaccard must be in [0, 1), got {}", self.max_answer_jaccard)));
        }
        Ok(())
    }

    pub fn snapshot(&self, source_name: &str) -> SynthesisSnapshot {
        let templates: String = self.templates.entries().iter().map(|(r, t)| format!("{r}\t{t}\n")).collect();
        let stopwords = self.stopwords.to_sorted_vec().join("\n");
        SynthesisSnapshot {
            source_name: source_name.to_string(),
            n: self.n,
            seed: self.seed,
            max_answer_jaccard: self.max_answer_jaccard,
            retry_cap: self.retry_cap,
            templates_sha256: sha256_hex(templates.as_bytes()),
            stopwords_sha256: sha256_hex(stopwords.as_bytes()),
        }
    }
}

/// Generation settings recorded in a pool header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSnapshot {
    pub source_name: String,
    pub n: usize,
    pub seed: u64,
    pub max_answer_jaccard: f64,
    pub retry_cap: usize,
    pub templates_sha256: String,
    pub stopwords_sha256: String,
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub pool: QuestionPool,
    pub skips: SkipReport,
}

fn synthesize_one(statement: &Statement, config: &SynthesisConfig, index: &DistractorIndex) -> Result<SyntheticQuestion> {
    let skip = |cause| Error::Synthesis { statement: statement.id.clone(), cause };
    let (question, answer) = verbalize(statement, &config.templates).map_err(|_| skip(SkipCause::MissingTemplate))?;
    if index.fingerprint(&answer).is_empty() {
        return Err(skip(SkipCause::EmptyAnswer));
    }
    let mut rng = rng::stream(config.seed, &statement.id);
    let answer_index = rng.gen_range(0..config.n);
    let mut candidates = sample_distractors(statement, &answer, index, config.n - 1, &mut rng)?;
    candidates.insert(answer_index, answer);
    Ok(SyntheticQuestion {
        id: format!("q-{}", statement.id),
        question,
        candidates,
        answer_index,
        dimension: statement.dimension,
        source_statement_id: statement.id.clone(),
    })
}

/// One question per statement, in statement order. Every statement draws from
/// its own random stream keyed by `(seed, statement id)`, so the output does
/// not depend on the number of rayon workers.
pub fn synthesize_qa(set: &StatementSet, config: &SynthesisConfig) -> Result<Synthesized> {
    config.validate()?;
    let index = DistractorIndex::build(set, &config.stopwords, config.max_answer_jaccard, config.retry_cap);
    let results: Vec<Result<SyntheticQuestion>> =
        set.statements.par_iter().map(|s| synthesize_one(s, config, &index)).collect();

    let mut skips = SkipReport { total_statements: set.len(), ..Default::default() };
    let mut questions = Vec::with_capacity(results.len());
    for result in results {
        match result {
            Ok(q) => questions.push(q),
            Err(Error::Synthesis { cause, .. }) => *skips.skipped.entry(cause).or_insert(0) += 1,
            Err(e) => return Err(e),
        }
    }
    skips.generated = questions.len();
    let mut header = PoolHeader::new(config.seed);
    header.generation = Some(config.snapshot(&set.source_name));
    Ok(Synthesized { pool: QuestionPool::new(header, questions), skips })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Dimension;
    use crate::text::{jaccard, Tokenizer};

    fn st(id: &str, head: &str, relation: &str, tail: &str, dimension: Dimension) -> Statement {
        Statement {
            id: id.into(),
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
            qualifiers: Default::default(),
            dimension,
        }
    }

    fn three() -> StatementSet {
        StatementSet::new(
            "t",
            vec![
                st("1", "go jogging", "/r/Causes", "get tired", Dimension::Temporal),
                st("2", "fork", "/r/AtLocation", "kitchen drawer", Dimension::Spatial),
                st("3", "dog", "/r/IsA", "pet", Dimension::Taxonomic),
            ],
        )
    }

    #[test]
    fn three_statements_three_questions() {
        let out = synthesize_qa(&three(), &SynthesisConfig::default()).unwrap();
        assert_eq!(out.pool.len(), 3);
        let tok = content_tokenizer(&StopwordList::english());
        for (q, s) in out.pool.iter().zip(three().iter()) {
            assert_eq!(q.candidates.len(), 3);
            assert_eq!(q.answer(), s.tail);
            assert_eq!(q.source_statement_id, s.id);
            assert_eq!(q.dimension, s.dimension);
            for i in 0..3 {
                for j in i + 1..3 {
                    assert_eq!(jaccard(&tok.token_set(&q.candidates[i]), &tok.token_set(&q.candidates[j])), 0.0);
                }
            }
        }
        assert_eq!(out.skips.generated, 3);
        assert_eq!(out.skips.skipped_total(), 0);
    }

    #[test]
    fn empty_set_empty_pool() {
        let out = synthesize_qa(&StatementSet::default(), &SynthesisConfig::default()).unwrap();
        assert!(out.pool.is_empty());
        assert_eq!(out.skips.total_statements, 0);
    }

    #[test]
    fn config_errors_abort() {
        let cfg = SynthesisConfig { n: 1, ..Default::default() };
        assert!(matches!(synthesize_qa(&three(), &cfg), Err(Error::Config(_))));
        let cfg = SynthesisConfig { max_answer_jaccard: 1.0, ..Default::default() };
        assert!(matches!(synthesize_qa(&three(), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn statement_errors_become_skip_counts() {
        let mut set = three();
        set.statements.push(st("4", "x", "/r/Unknown", "thing", Dimension::Lexical));
        set.statements.push(st("5", "x", "/r/IsA", "the of", Dimension::Taxonomic));
        let out = synthesize_qa(&set, &SynthesisConfig::default()).unwrap();
        assert_eq!(out.pool.len(), 3);
        assert_eq!(out.skips.skipped[&SkipCause::MissingTemplate], 1);
        assert_eq!(out.skips.skipped[&SkipCause::EmptyAnswer], 1);

        // n larger than the number of usable tails
        let cfg = SynthesisConfig { n: 5, ..Default::default() };
        let out = synthesize_qa(&three(), &cfg).unwrap();
        assert_eq!(out.skips.skipped[&SkipCause::InsufficientDistractors], 3);
    }

    #[test]
    fn same_seed_same_pool_other_seed_differs() {
        let set = crate::toy::separable_kg(&crate::toy::ToyKgConfig { statements: 300, ..Default::default() });
        let cfg = SynthesisConfig { seed: 7, ..Default::default() };
        let a = synthesize_qa(&set, &cfg).unwrap().pool.to_jsonl_string();
        let b = synthesize_qa(&set, &cfg).unwrap().pool.to_jsonl_string();
        assert_eq!(a, b);
        let c = synthesize_qa(&set, &SynthesisConfig { seed: 8, ..cfg }).unwrap().pool.to_jsonl_string();
        assert_ne!(a, c);
    }
}
