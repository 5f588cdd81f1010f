//! Task-property metrics and per-quartile accuracy.
//!
//! - answer similarity (AS): Jaccard overlap of candidate token sets
//! - answer length (AL): total candidate tokens
//! - vocabulary overlap (VO): mean reciprocal frequency, in the synthetic
//!   pool, of the candidates' tokens; unseen tokens count as frequency 1

mod metrics;
mod partition;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{answer_length, answer_similarity, build_freq_table, vocab_overlap, vocab_overlap_detail, FreqTable, VocabOverlap};
pub use partition::{
    domain_averages, partition_accuracy, quartile_partition, DomainAverages, DomainLabel, DomainTable, PartitionReport,
    QuartileAccuracy, Quartiles,
};

use crate::text::Tokenizer;
use crate::{Error, MultipleChoice, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AnswerSimilarity,
    AnswerLength,
    VocabOverlap,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::AnswerSimilarity, Metric::AnswerLength, Metric::VocabOverlap];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::AnswerSimilarity => "answer_similarity",
            Metric::AnswerLength => "answer_length",
            Metric::VocabOverlap => "vocab_overlap",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "answer_similarity" | "as" => Ok(Metric::AnswerSimilarity),
            "answer_length" | "al" => Ok(Metric::AnswerLength),
            "vocab_overlap" | "vocabulary_overlap" | "vo" => Ok(Metric::VocabOverlap),
            _ => Err(Error::Metric(format!("unknown metric `{s}`"))),
        }
    }
}

/// All metrics of one question. AS is absent when not requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionMetrics {
    pub question_id: String,
    pub answer_similarity: Option<f64>,
    pub answer_length: usize,
    pub vocab_overlap: VocabOverlap,
}

impl QuestionMetrics {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::AnswerSimilarity => self.answer_similarity,
            Metric::AnswerLength => Some(self.answer_length as f64),
            Metric::VocabOverlap => Some(self.vocab_overlap.value),
        }
    }
}

/// Per-question metrics, computed in parallel and returned in input order.
pub fn compute_metrics<T: MultipleChoice + Sync>(
    items: &[T],
    freq: &FreqTable,
    tokenizer: &dyn Tokenizer,
    with_similarity: bool,
) -> Result<Vec<QuestionMetrics>> {
    items
        .par_iter()
        .map(|item| {
            Ok(QuestionMetrics {
                question_id: item.id().to_string(),
                answer_similarity: if with_similarity { Some(answer_similarity(item, tokenizer)?) } else { None },
                answer_length: answer_length(item, tokenizer),
                vocab_overlap: vocab_overlap_detail(item, freq, tokenizer)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub benchmark: String,
    pub questions: usize,
    /// Candidate tokens absent from the synthetic pool, summed over questions;
    /// each was scored with frequency 1.
    pub unseen_tokens: usize,
    pub partitions: Vec<PartitionReport>,
}

/// Quartile reports of `metrics_wanted` over a benchmark and its predictions.
pub fn analyze(
    benchmark: &str,
    metrics: &[QuestionMetrics],
    correct: &HashMap<String, bool>,
    metrics_wanted: &[Metric],
) -> Result<AnalysisReport> {
    let mut partitions = Vec::with_capacity(metrics_wanted.len());
    for metric in metrics_wanted {
        let values: Vec<(String, f64)> = metrics
            .iter()
            .map(|m| {
                m.value(*metric)
                    .map(|v| (m.question_id.clone(), v))
                    .ok_or_else(|| Error::Metric(format!("{} was not computed", metric.as_str())))
            })
            .collect::<Result<_>>()?;
        let quartiles = quartile_partition(&values)?;
        partitions.push(partition_accuracy(metric.as_str(), &quartiles, correct)?);
    }
    Ok(AnalysisReport {
        benchmark: benchmark.to_string(),
        questions: metrics.len(),
        unseen_tokens: metrics.iter().map(|m| m.vocab_overlap.unseen).sum(),
        partitions,
    })
}

/// Aligned plain-text table of an analysis report.
pub fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "benchmark: {}  questions: {}  unseen tokens: {}", report.benchmark, report.questions, report.unseen_tokens);
    let _ = writeln!(out, "{:<18} {:<8} {:>6} {:>8} {:>9} {:>12}", "metric", "quartile", "count", "correct", "accuracy", "upper_bound");
    for p in &report.partitions {
        for (i, q) in p.quartiles.iter().enumerate() {
            let bound = p.cuts.get(i).map_or_else(|| "-".to_string(), |c| format!("{c:.4}"));
            let _ = writeln!(
                out,
                "{:<18} {:<8} {:>6} {:>8} {:>9.4} {:>12}",
                p.metric,
                format!("Q{}", i + 1),
                q.count,
                q.correct,
                q.accuracy,
                bound
            );
        }
        let _ = writeln!(out, "{:<18} {:<8} {:>6} {:>8} {:>9.4} {:>12}", p.metric, "all", p.total, p.correct, p.overall_accuracy, "-");
    }
    out
}

/// `question_id,answer_similarity,answer_length,vocab_overlap`; AS is empty
/// when not computed.
pub fn write_metrics_csv<W: Write>(metrics: &[QuestionMetrics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["question_id", "answer_similarity", "answer_length", "vocab_overlap"])?;
    for m in metrics {
        let similarity = m.answer_similarity.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([m.question_id.clone(), similarity, m.answer_length.to_string(), m.vocab_overlap.value.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(std::path::Path::new("<metrics>"), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::BenchmarkQuestion;
    use crate::synth::{content_tokenizer, synthesize_qa, SynthesisConfig};
    use crate::text::{StopwordList, WhitespaceTokenizer};
    use crate::toy::{separable_kg, ToyKgConfig};

    fn bench() -> Vec<BenchmarkQuestion> {
        (0..8)
            .map(|i| BenchmarkQuestion {
                id: format!("b{i}"),
                question: "pick one".into(),
                candidates: vec!["x ".repeat(i + 1), "y".into()],
                answer_index: 0,
            })
            .collect()
    }

    #[test]
    fn synthetic_pool_has_zero_similarity() {
        let set = separable_kg(&ToyKgConfig { statements: 300, ..Default::default() });
        let cfg = SynthesisConfig { seed: 2, ..Default::default() };
        let pool = synthesize_qa(&set, &cfg).unwrap().pool;
        let tok = content_tokenizer(&StopwordList::english());
        for q in &pool.questions {
            assert_eq!(answer_similarity(q, &tok).unwrap(), 0.0, "{}", q.id);
        }
    }

    #[test]
    fn analyze_by_length() {
        let items = bench();
        let freq = build_freq_table(items.iter(), &WhitespaceTokenizer);
        let m = compute_metrics(&items, &freq, &WhitespaceTokenizer, true).unwrap();
        assert_eq!(m[3].answer_length, 5);
        let correct: HashMap<String, bool> = items.iter().map(|q| (q.id.clone(), q.id.as_str() < "b4")).collect();
        let report = analyze("toy", &m, &correct, &[Metric::AnswerLength]).unwrap();
        let accs: Vec<f64> = report.partitions[0].quartiles.iter().map(|q| q.accuracy).collect();
        assert_eq!(accs, vec![1.0, 1.0, 0.0, 0.0]);
        let text = render_text(&report);
        assert!(text.contains("answer_length      Q1"));
        let mut csv_out = Vec::new();
        write_metrics_csv(&m, &mut csv_out).unwrap();
        let csv_text = String::from_utf8(csv_out).unwrap();
        assert!(csv_text.starts_with("question_id,answer_similarity,answer_length,vocab_overlap\nb0,0,2,"));
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!("AS".parse::<Metric>().unwrap(), Metric::AnswerSimilarity);
        assert_eq!("vocab-overlap".parse::<Metric>().unwrap(), Metric::VocabOverlap);
        assert!("entropy".parse::<Metric>().is_err());
    }
}
