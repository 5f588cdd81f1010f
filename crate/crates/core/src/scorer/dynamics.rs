//! Per-question, per-epoch training records.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::loss::softmax;
use crate::{Error, Result};

/// One line of the dynamics wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsRecord {
    pub question_id: String,
    pub epoch: usize,
    pub scores: Vec<f64>,
    pub answer_index: usize,
    pub confidence: f64,
}

impl DynamicsRecord {
    /// Builds a record whose confidence is the softmax probability of the answer.
    pub fn from_scores(question_id: impl Into<String>, epoch: usize, scores: Vec<f64>, answer_index: usize) -> Self {
        let confidence = softmax(&scores)[answer_index];
        Self { question_id: question_id.into(), epoch, scores, answer_index, confidence }
    }

    pub fn correct_score(&self) -> f64 {
        self.scores[self.answer_index]
    }

    fn validate(&self) -> Result<()> {
        let id = &self.question_id;
        if self.scores.len() < 2 {
            return Err(Error::Validation(format!("`{id}` epoch {}: fewer than 2 scores", self.epoch)));
        }
        if self.answer_index >= self.scores.len() {
            return Err(Error::Validation(format!("`{id}` epoch {}: answer_index out of range", self.epoch)));
        }
        if self.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Validation(format!("`{id}` epoch {}: non-finite score", self.epoch)));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::Validation(format!(
                "`{id}` epoch {}: confidence {} is not a probability",
                self.epoch, self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct QuestionTrack {
    id: String,
    records: Vec<DynamicsRecord>,
}

/// Complete log for epochs `0..=final_epoch`; epoch 0 is the untrained pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DynamicsLog {
    final_epoch: usize,
    tracks: Vec<QuestionTrack>,
    index: HashMap<String, usize>,
}

impl DynamicsLog {
    /// Validates and assembles records given in any order. Questions keep the
    /// order in which they first appear.
    pub fn from_records(records: Vec<DynamicsRecord>) -> Result<Self> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut cells: Vec<HashMap<usize, DynamicsRecord>> = Vec::new();
        let mut ids: Vec<String> = Vec::new();
        let mut final_epoch = 0;
        for record in records {
            record.validate()?;
            final_epoch = final_epoch.max(record.epoch);
            let slot = *index.entry(record.question_id.clone()).or_insert_with(|| {
                ids.push(record.question_id.clone());
                cells.push(HashMap::new());
                cells.len() - 1
            });
            if let Some(prev) = cells[slot].values().next() {
                if prev.scores.len() != record.scores.len() || prev.answer_index != record.answer_index {
                    return Err(Error::Validation(format!(
                        "`{}` changes its candidate count or answer index across epochs",
                        record.question_id
                    )));
                }
            }
            let epoch = record.epoch;
            if cells[slot].insert(epoch, record).is_some() {
                return Err(Error::Validation(format!("`{}` has two records for epoch {epoch}", ids[slot])));
            }
        }

        let mut gaps = Vec::new();
        let mut tracks = Vec::with_capacity(ids.len());
        for (id, mut by_epoch) in ids.into_iter().zip(cells) {
            let mut records = Vec::with_capacity(final_epoch + 1);
            for epoch in 0..=final_epoch {
                match by_epoch.remove(&epoch) {
                    Some(r) => records.push(r),
                    None => gaps.push(format!("{id}@{epoch}")),
                }
            }
            tracks.push(QuestionTrack { id, records });
        }
        if !gaps.is_empty() {
            return Err(Error::Gaps(gaps));
        }
        Ok(Self { final_epoch, tracks, index })
    }

    pub fn final_epoch(&self) -> usize {
        self.final_epoch
    }

    /// Number of questions.
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn question_ids(&self) -> impl Iterator<Item = &str> {
        self.tracks.iter().map(|t| t.id.as_str())
    }

    pub fn contains(&self, question_id: &str) -> bool {
        self.index.contains_key(question_id)
    }

    pub fn get(&self, question_id: &str, epoch: usize) -> Option<&DynamicsRecord> {
        self.index.get(question_id).and_then(|i| self.tracks[*i].records.get(epoch))
    }

    /// All epochs of one question, epoch 0 first.
    pub fn track(&self, question_id: &str) -> Option<&[DynamicsRecord]> {
        self.index.get(question_id).map(|i| self.tracks[*i].records.as_slice())
    }

    pub fn tracks(&self) -> impl Iterator<Item = (&str, &[DynamicsRecord])> {
        self.tracks.iter().map(|t| (t.id.as_str(), t.records.as_slice()))
    }

    pub fn record_count(&self) -> usize {
        self.tracks.len() * (self.final_epoch + 1)
    }

    /// Records ordered by epoch, then question.
    pub fn records(&self) -> impl Iterator<Item = &DynamicsRecord> {
        (0..=self.final_epoch).flat_map(move |e| self.tracks.iter().map(move |t| &t.records[e]))
    }

    /// The log cut down to epochs `0..=epoch`.
    pub fn truncated(&self, epoch: usize) -> Self {
        let final_epoch = epoch.min(self.final_epoch);
        let tracks = self
            .tracks
            .iter()
            .map(|t| QuestionTrack { id: t.id.clone(), records: t.records[..=final_epoch].to_vec() })
            .collect();
        Self { final_epoch, tracks, index: self.index.clone() }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in self.records() {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n").map_err(|e| Error::io(Path::new("<dynamics>"), e))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_jsonl(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(Path::new(source_name), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: DynamicsRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                source_name: source_name.into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(record);
        }
        Self::from_records(records)
    }

    /// Set of question ids, for coverage checks.
    pub fn id_set(&self) -> BTreeSet<&str> {
        self.question_ids().collect()
    }
}

/// Loads and validates a dynamics file produced elsewhere (for example by a
/// language-model run).
pub fn import_external_dynamics(path: &Path) -> Result<DynamicsLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    DynamicsLog::read_jsonl(BufReader::new(file), &path.display().to_string())
}
