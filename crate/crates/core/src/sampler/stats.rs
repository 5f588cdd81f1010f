use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::scorer::DynamicsLog;
use crate::text::sha256_hex;
use crate::{Error, Result};

/// How the per-epoch margin compares the answer with the distractors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginConvention {
    /// `S_y - max_{i != y} S_i`.
    #[default]
    Max,
    /// `S_y - mean_{i != y} S_i`.
    Mean,
}

/// Statistics of one question over training epochs `1..=E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionStats {
    pub mean_confidence: f64,
    /// Population standard deviation of the true-label confidence.
    pub variability: f64,
    /// Mean margin under [`MarginConvention::Max`].
    pub mean_margin: f64,
    /// Mean margin under [`MarginConvention::Mean`].
    pub mean_margin_avg: f64,
    /// Confidence at epoch 0.
    pub vanilla_confidence: f64,
}

impl QuestionStats {
    pub fn margin(&self, convention: MarginConvention) -> f64 {
        match convention {
            MarginConvention::Max => self.mean_margin,
            MarginConvention::Mean => self.mean_margin_avg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    question_id: String,
    #[serde(flatten)]
    stats: QuestionStats,
}

/// Per-question statistics in log order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingStats {
    epochs: usize,
    rows: Vec<Row>,
    index: HashMap<String, usize>,
}

impl TrainingStats {
    /// Number of training epochs the statistics average over.
    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, question_id: &str) -> Option<&QuestionStats> {
        self.index.get(question_id).map(|i| &self.rows[*i].stats)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &QuestionStats)> {
        self.rows.iter().map(|r| (r.question_id.as_str(), &r.stats))
    }

    /// SHA-256 of the JSON lines written by [`TrainingStats::to_jsonl_string`].
    pub fn digest(&self) -> String {
        sha256_hex(self.to_jsonl_string().as_bytes())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("stats serialize"));
            out.push('\n');
        }
        out
    }
}

fn margins(scores: &[f64], answer: usize) -> (f64, f64) {
    let sy = scores[answer];
    let others = scores.iter().enumerate().filter(|(i, _)| *i != answer).map(|(_, s)| *s);
    let (mut max, mut sum, mut n) = (f64::NEG_INFINITY, 0.0, 0usize);
    for s in others {
        max = max.max(s);
        sum += s;
        n += 1;
    }
    (sy - max, sy - sum / n as f64)
}

/// Derives per-question statistics from a complete log with at least one
/// training epoch.
pub fn compute_training_stats(log: &DynamicsLog) -> Result<TrainingStats> {
    let epochs = log.final_epoch();
    if epochs == 0 {
        return Err(Error::Gaps(vec!["log has no training epochs (only epoch 0)".into()]));
    }
    let e = epochs as f64;
    let mut rows = Vec::with_capacity(log.len());
    let mut index = HashMap::with_capacity(log.len());
    for (id, track) in log.tracks() {
        let trained = &track[1..];
        let mean_confidence = trained.iter().map(|r| r.confidence).sum::<f64>() / e;
        let variance = trained.iter().map(|r| (r.confidence - mean_confidence).powi(2)).sum::<f64>() / e;
        let (mut max_sum, mut mean_sum) = (0.0, 0.0);
        for r in trained {
            let (by_max, by_mean) = margins(&r.scores, r.answer_index);
            max_sum += by_max;
            mean_sum += by_mean;
        }
        index.insert(id.to_string(), rows.len());
        rows.push(Row {
            question_id: id.to_string(),
            stats: QuestionStats {
                mean_confidence,
                variability: variance.sqrt(),
                mean_margin: max_sum / e,
                mean_margin_avg: mean_sum / e,
                vanilla_confidence: track[0].confidence,
            },
        });
    }
    Ok(TrainingStats { epochs, rows, index })
}
