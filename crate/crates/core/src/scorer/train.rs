use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::{DynamicsLog, DynamicsRecord};
use super::loss::{argmax, margin_loss};
use super::model::{EmbeddingScorer, EncodedItem, ScorerConfig, SparseGrad, Vocabulary};
use crate::synth::QuestionPool;
use crate::{rng, Error, MultipleChoice, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self { margin: 1.0, learning_rate: 0.05, epochs: 5, batch_size: 32, seed: 0 }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Config(format!("margin must be positive, got {}", self.margin)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Epoch-end evaluation of the training pool; epoch 0 is before any update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct Training {
    pub scorer: EmbeddingScorer,
    pub log: DynamicsLog,
    pub curve: Vec<CurvePoint>,
}

fn snapshot(
    scorer: &EmbeddingScorer,
    pool: &QuestionPool,
    encoded: &[EncodedItem],
    epoch: usize,
    margin: f64,
) -> Result<(Vec<DynamicsRecord>, CurvePoint)> {
    let rows: Vec<Result<(DynamicsRecord, f64, bool)>> = pool
        .questions
        .par_iter()
        .zip(encoded.par_iter())
        .map(|(q, item)| {
            let scores = scorer.score_encoded(item);
            let mut loss = margin_loss(&scores, item.answer_index, margin)?;
            if scores.iter().any(|s| !s.is_finite()) {
                loss = f64::NAN;
            }
            let correct = argmax(&scores).index == item.answer_index;
            Ok((DynamicsRecord::from_scores(q.id.clone(), epoch, scores, item.answer_index), loss, correct))
        })
        .collect();
    let mut records = Vec::with_capacity(rows.len());
    let (mut loss_sum, mut correct) = (0.0, 0usize);
    for row in rows {
        let (record, loss, ok) = row?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, batch: 0, loss });
        }
        loss_sum += loss;
        correct += usize::from(ok);
        records.push(record);
    }
    let n = pool.len().max(1) as f64;
    Ok((records, CurvePoint { epoch, mean_loss: loss_sum / n, train_accuracy: correct as f64 / n }))
}

/// Records the untrained scorer on every question as epoch 0.
pub fn vanilla_scores(pool: &QuestionPool, scorer: &EmbeddingScorer) -> Result<DynamicsLog> {
    let encoded: Vec<EncodedItem> = pool.questions.par_iter().map(|q| scorer.encode_item(q)).collect();
    let (records, _) = snapshot(scorer, pool, &encoded, 0, TrainHyper::default().margin)?;
    DynamicsLog::from_records(records)
}

/// Fresh scorer over the pool's vocabulary, initialized from `hyper.seed`.
pub fn initial_scorer(pool: &QuestionPool, config: ScorerConfig, seed: u64) -> Result<EmbeddingScorer> {
    EmbeddingScorer::new(Vocabulary::from_items(pool.questions.iter()), config, seed)
}

/// Trains a default-configured scorer on `pool`.
pub fn train(pool: &QuestionPool, hyper: &TrainHyper) -> Result<Training> {
    let scorer = initial_scorer(pool, ScorerConfig::default(), hyper.seed)?;
    train_scorer(scorer, pool, hyper)
}

/// Mini-batch SGD on the mean margin loss, snapshotting every question at
/// the end of each epoch.
pub fn train_scorer(mut scorer: EmbeddingScorer, pool: &QuestionPool, hyper: &TrainHyper) -> Result<Training> {
    hyper.validate()?;
    if pool.is_empty() {
        return Err(Error::Config("cannot train on an empty pool".into()));
    }
    if let Some(q) = pool.questions.iter().find(|q| q.candidates().len() < 2) {
        return Err(Error::Contract(format!("question `{}` has fewer than 2 candidates", q.id)));
    }
    let encoded: Vec<EncodedItem> = pool.questions.par_iter().map(|q| scorer.encode_item(q)).collect();

    let (mut records, first) = snapshot(&scorer, pool, &encoded, 0, hyper.margin)?;
    let mut curve = vec![first];
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng::stream(hyper.seed, &format!("epoch-{epoch}")));
        for (batch_no, batch) in order.chunks(hyper.batch_size).enumerate() {
            let weight = 1.0 / batch.len() as f64;
            let mut grad = SparseGrad::default();
            let mut batch_loss = 0.0;
            for &i in batch {
                let scores = scorer.accumulate_grad(&encoded[i], hyper.margin, weight, &mut grad)?;
                // a NaN score would vanish inside the hinge's max(0, .)
                if scores.iter().any(|s| !s.is_finite()) {
                    batch_loss = f64::NAN;
                }
                batch_loss += weight * margin_loss(&scores, encoded[i].answer_index, hyper.margin)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: batch_no, loss: batch_loss });
            }
            scorer.apply(&grad, hyper.learning_rate);
        }
        let (epoch_records, point) = snapshot(&scorer, pool, &encoded, epoch, hyper.margin)?;
        records.extend(epoch_records);
        curve.push(point);
    }
    let log = DynamicsLog::from_records(records)?;
    Ok(Training { scorer, log, curve })
}

/// Writes `epoch,mean_loss,train_accuracy` rows.
pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for point in curve {
        w.serialize(point)?;
    }
    w.flush().map_err(|e| Error::io(std::path::Path::new("<curve>"), e))
}
