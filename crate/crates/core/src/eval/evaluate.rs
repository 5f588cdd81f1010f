use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Benchmark;
use crate::scorer::{argmax, Scorer};
use crate::{Error, MultipleChoice, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionPrediction {
    pub question_id: String,
    pub predicted: usize,
    pub answer_index: usize,
    /// Several candidates shared the top score; the lowest index was taken.
    pub tied: bool,
}

impl QuestionPrediction {
    pub fn correct(&self) -> bool {
        self.predicted == self.answer_index
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub benchmark: String,
    pub predictions: Vec<QuestionPrediction>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub ties: usize,
}

impl Evaluation {
    /// Question id to whether it was answered correctly.
    pub fn correctness(&self) -> HashMap<String, bool> {
        self.predictions.iter().map(|p| (p.question_id.clone(), p.correct())).collect()
    }
}

/// `correct / total`, or 0 for an empty benchmark.
pub fn accuracy(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

/// Scores every question and predicts the top-scoring candidate.
pub fn evaluate(scorer: &dyn Scorer, benchmark: &Benchmark) -> Result<Evaluation> {
    let predictions: Vec<QuestionPrediction> = benchmark
        .questions
        .par_iter()
        .map(|q| {
            let fail = |message: String| Error::Evaluation { question: q.id.clone(), message };
            let scores = scorer.score(q).map_err(|e| fail(e.to_string()))?;
            if scores.len() != q.candidates().len() {
                return Err(fail(format!("{} scores for {} candidates", scores.len(), q.candidates().len())));
            }
            if scores.iter().any(|s| !s.is_finite()) {
                return Err(fail("non-finite score".into()));
            }
            let top = argmax(&scores);
            Ok(QuestionPrediction { question_id: q.id.clone(), predicted: top.index, answer_index: q.answer_index, tied: top.tied })
        })
        .collect::<Result<_>>()?;
    let correct = predictions.iter().filter(|p| p.correct()).count();
    let ties = predictions.iter().filter(|p| p.tied).count();
    let total = predictions.len();
    Ok(Evaluation { benchmark: benchmark.name.clone(), predictions, correct, total, accuracy: accuracy(correct, total), ties })
}

/// Accuracy of always answering the most frequent answer position (lowest
/// position on ties).
pub fn majority_baseline(benchmark: &Benchmark) -> f64 {
    let mut counts: Vec<usize> = Vec::new();
    for q in &benchmark.questions {
        if counts.len() <= q.answer_index {
            counts.resize(q.answer_index + 1, 0);
        }
        counts[q.answer_index] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    accuracy(best, benchmark.len())
}

#[derive(Debug, Deserialize)]
struct ScoreLine {
    question_id: String,
    scores: Vec<f64>,
}

/// Scores produced elsewhere, keyed by question id. Lines may carry extra
/// fields, so dynamics files are accepted too; with several epochs the last
/// line for an id wins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalScores {
    scores: HashMap<String, Vec<f64>>,
}

impl ExternalScores {
    pub fn new(scores: HashMap<String, Vec<f64>>) -> Self {
        Self { scores }
    }

    pub fn read_jsonl<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut scores = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(Path::new(source_name), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: ScoreLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                source_name: source_name.into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            scores.insert(row.question_id, row.scores);
        }
        Ok(Self { scores })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(BufReader::new(file), &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl Scorer for ExternalScores {
    fn score(&self, item: &dyn MultipleChoice) -> Result<Vec<f64>> {
        self.scores
            .get(item.id())
            .cloned()
            .ok_or_else(|| Error::Evaluation { question: item.id().to_string(), message: "no external scores".into() })
    }
}
