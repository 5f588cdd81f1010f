//! Multiple-choice question synthesis from knowledge-graph statements.

mod distractors;
mod generate;
mod templates;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kg::Dimension;
use crate::sampler::SampleProvenance;
use crate::{Error, MultipleChoice, Result, SkipCause};

pub use distractors::{sample_distractors, DistractorIndex};
pub use generate::{content_tokenizer, synthesize_qa, SynthesisConfig, SynthesisSnapshot, Synthesized};
pub use templates::{verbalize, TemplateTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticQuestion {
    pub id: String,
    pub question: String,
    pub candidates: Vec<String>,
    pub answer_index: usize,
    pub dimension: Dimension,
    pub source_statement_id: String,
}

impl SyntheticQuestion {
    pub fn answer(&self) -> &str {
        &self.candidates[self.answer_index]
    }
}

impl MultipleChoice for SyntheticQuestion {
    fn id(&self) -> &str {
        &self.id
    }
    fn question(&self) -> &str {
        &self.question
    }
    fn candidates(&self) -> &[String] {
        &self.candidates
    }
    fn answer_index(&self) -> usize {
        self.answer_index
    }
}

/// First line of a pool file. Carries the generation settings of a
/// synthesized pool or the selection settings of a sampled one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolHeader {
    pub kind: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<SynthesisSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<SampleProvenance>,
}

impl PoolHeader {
    pub const KIND: &'static str = "pool_header";

    pub fn new(seed: u64) -> Self {
        Self { kind: Self::KIND.to_string(), seed, generation: None, provenance: None }
    }
}

impl Default for PoolHeader {
    fn default() -> Self {
        Self::new(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuestionPool {
    pub header: PoolHeader,
    pub questions: Vec<SyntheticQuestion>,
}

impl QuestionPool {
    pub fn new(header: PoolHeader, questions: Vec<SyntheticQuestion>) -> Self {
        Self { header, questions }
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SyntheticQuestion> {
        self.questions.iter()
    }

    pub fn dimension_counts(&self) -> BTreeMap<Dimension, usize> {
        let mut counts: BTreeMap<Dimension, usize> = Dimension::ALL.iter().map(|d| (*d, 0)).collect();
        for q in &self.questions {
            *counts.get_mut(&q.dimension).expect("all dimensions present") += 1;
        }
        counts
    }

    /// Writes the header line followed by one question per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n").map_err(|e| Error::io(Path::new("<pool>"), e))?;
        for q in &self.questions {
            serde_json::to_writer(&mut out, q)?;
            out.write_all(b"\n").map_err(|e| Error::io(Path::new("<pool>"), e))?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_jsonl(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a pool file. The header line is optional.
    pub fn read_jsonl<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut header = None;
        let mut questions = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(Path::new(source_name), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { source_name: source_name.into(), line: i + 1, message };
            if i == 0 && line.contains(PoolHeader::KIND) {
                let h: PoolHeader = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
                if h.kind == PoolHeader::KIND {
                    header = Some(h);
                    continue;
                }
            }
            let q: SyntheticQuestion = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            if q.candidates.len() < 2 {
                return Err(parse_err(format!("question `{}` has fewer than 2 candidates", q.id)));
            }
            if q.answer_index >= q.candidates.len() {
                return Err(parse_err(format!("question `{}` has answer_index {} out of range", q.id, q.answer_index)));
            }
            if !ids.insert(q.id.clone()) {
                return Err(parse_err(format!("duplicate question id `{}`", q.id)));
            }
            questions.push(q);
        }
        Ok(Self { header: header.unwrap_or_default(), questions })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(BufReader::new(file), &path.display().to_string())
    }
}

/// Per-cause counts of statements that produced no question.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub total_statements: usize,
    pub generated: usize,
    pub skipped: BTreeMap<SkipCause, usize>,
}

impl SkipReport {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }
}
