use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::synth::PoolHeader;
use crate::{Error, MultipleChoice, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkQuestion {
    pub id: String,
    pub question: String,
    pub candidates: Vec<String>,
    pub answer_index: usize,
}

impl MultipleChoice for BenchmarkQuestion {
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

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Benchmark {
    pub name: String,
    pub questions: Vec<BenchmarkQuestion>,
}

impl Benchmark {
    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    /// Unified JSONL: one `{id, question, candidates, answer_index}` per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for q in &self.questions {
            serde_json::to_writer(&mut out, q)?;
            out.write_all(b"\n").map_err(|e| Error::io(Path::new(&self.name), e))?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

/// How an answer field encodes the correct candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerEncoding {
    /// `0` is the first candidate.
    ZeroBased,
    /// `1` is the first candidate.
    OneBased,
    /// `A` is the first candidate.
    Letter,
}

impl AnswerEncoding {
    fn decode(self, raw: &str) -> std::result::Result<usize, String> {
        let raw = raw.trim();
        match self {
            AnswerEncoding::ZeroBased => raw.parse().map_err(|_| format!("answer `{raw}` is not an index")),
            AnswerEncoding::OneBased => match raw.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(format!("answer `{raw}` is not a 1-based index")),
            },
            AnswerEncoding::Letter => {
                let mut chars = raw.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii_alphabetic() => Ok((c.to_ascii_uppercase() as u8 - b'A') as usize),
                    _ => Err(format!("answer `{raw}` is not a letter")),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    /// One field per candidate, in order.
    Fields(Vec<String>),
    /// An array field; `text` names the text member of object elements.
    List { field: String, text: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    Field(String),
    /// One label per line in a separate file.
    LabelsFile,
}

/// Maps the fields of a JSONL record onto a question. Field names may be
/// dotted paths into nested objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub name: String,
    #[serde(default)]
    pub id: Option<String>,
    /// Joined with a space.
    pub question: Vec<String>,
    pub candidates: CandidateSource,
    pub answer: AnswerSource,
    pub encoding: AnswerEncoding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adapter {
    Unified,
    Columns(ColumnMap),
}

fn fields(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

impl Adapter {
    /// Built-in layouts: `unified`, `csqa`, `siqa`, `piqa`, `anli`, `winogrande` (alias `wg`).
    pub fn preset(name: &str) -> Result<Self> {
        let map = |name: &str, id, question, candidates, answer, encoding| {
            Adapter::Columns(ColumnMap { name: name.into(), id, question, candidates, answer, encoding })
        };
        Ok(match name.to_ascii_lowercase().as_str() {
            "unified" => Adapter::Unified,
            "csqa" => map(
                "csqa",
                Some("id".into()),
                fields(&["question.stem"]),
                CandidateSource::List { field: "question.choices".into(), text: Some("text".into()) },
                AnswerSource::Field("answerKey".into()),
                AnswerEncoding::Letter,
            ),
            "siqa" => map(
                "siqa",
                None,
                fields(&["context", "question"]),
                CandidateSource::Fields(fields(&["answerA", "answerB", "answerC"])),
                AnswerSource::LabelsFile,
                AnswerEncoding::OneBased,
            ),
            "piqa" => map(
                "piqa",
                None,
                fields(&["goal"]),
                CandidateSource::Fields(fields(&["sol1", "sol2"])),
                AnswerSource::LabelsFile,
                AnswerEncoding::ZeroBased,
            ),
            "anli" => map(
                "anli",
                Some("story_id".into()),
                fields(&["obs1", "obs2"]),
                CandidateSource::Fields(fields(&["hyp1", "hyp2"])),
                AnswerSource::LabelsFile,
                AnswerEncoding::OneBased,
            ),
            "winogrande" | "wg" => map(
                "winogrande",
                Some("qID".into()),
                fields(&["sentence"]),
                CandidateSource::Fields(fields(&["option1", "option2"])),
                AnswerSource::Field("answer".into()),
                AnswerEncoding::OneBased,
            ),
            other => return Err(Error::Config(format!("unknown adapter `{other}`"))),
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Adapter::Unified => "unified",
            Adapter::Columns(m) => &m.name,
        }
    }

    pub fn needs_labels(&self) -> bool {
        matches!(self, Adapter::Columns(ColumnMap { answer: AnswerSource::LabelsFile, .. }))
    }

    /// Parses a benchmark whose answers are inline.
    pub fn parse<R: BufRead>(&self, reader: R, name: &str) -> Result<Benchmark> {
        self.parse_with_labels(reader, None::<&[u8]>, name)
    }

    pub fn parse_with_labels<R: BufRead, L: BufRead>(&self, reader: R, labels: Option<L>, name: &str) -> Result<Benchmark> {
        let labels: Option<Vec<String>> = match labels {
            Some(l) => Some(
                l.lines()
                    .collect::<std::io::Result<Vec<_>>>()
                    .map_err(|e| Error::io(Path::new(name), e))?
                    .into_iter()
                    .filter(|s| !s.trim().is_empty())
                    .collect(),
            ),
            None => None,
        };
        if self.needs_labels() && labels.is_none() {
            return Err(Error::Config(format!("adapter `{}` needs a labels file", self.name())));
        }
        let mut questions = Vec::new();
        let mut ids = std::collections::HashSet::new();
        let mut record = 0usize;
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(Path::new(name), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let value: std::result::Result<Value, _> = serde_json::from_str(&line);
            if questions.is_empty() && record == 0 {
                if let Ok(v) = &value {
                    if v.get("kind").and_then(Value::as_str) == Some(PoolHeader::KIND) {
                        continue;
                    }
                }
            }
            record += 1;
            let fail = |message: String| Error::Adapter { adapter: self.name().to_string(), record, message };
            let value = value.map_err(|e| fail(e.to_string()))?;
            let q = match self {
                Adapter::Unified => unified(&value, name, record),
                Adapter::Columns(map) => map.extract(&value, labels.as_deref(), name, record),
            }
            .map_err(fail)?;
            if q.candidates.len() < 2 {
                return Err(fail(format!("has {} candidate(s), need at least 2", q.candidates.len())));
            }
            if q.answer_index >= q.candidates.len() {
                return Err(fail(format!("answer_index {} out of range for {} candidates", q.answer_index, q.candidates.len())));
            }
            if !ids.insert(q.id.clone()) {
                return Err(fail(format!("duplicate id `{}`", q.id)));
            }
            questions.push(q);
        }
        if let Some(l) = &labels {
            if l.len() != questions.len() {
                return Err(Error::Adapter {
                    adapter: self.name().to_string(),
                    record: l.len().min(questions.len()) + 1,
                    message: format!("{} labels for {} records", l.len(), questions.len()),
                });
            }
        }
        Ok(Benchmark { name: name.to_string(), questions })
    }

    pub fn load(&self, path: &Path, labels: Option<&Path>, name: &str) -> Result<Benchmark> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        match labels {
            Some(lp) => {
                let lf = File::open(lp).map_err(|e| Error::io(lp, e))?;
                self.parse_with_labels(BufReader::new(file), Some(BufReader::new(lf)), name)
            }
            None => self.parse(BufReader::new(file), name),
        }
    }
}

fn lookup<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(value, |v, key| v.get(key))
}

fn as_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn unified(value: &Value, name: &str, record: usize) -> std::result::Result<BenchmarkQuestion, String> {
    let mut q: BenchmarkQuestion = match value.get("id") {
        Some(_) => serde_json::from_value(value.clone()).map_err(|e| e.to_string())?,
        None => {
            let mut with_id = value.clone();
            with_id
                .as_object_mut()
                .ok_or("record is not an object")?
                .insert("id".into(), Value::String(format!("{name}-{record:05}")));
            serde_json::from_value(with_id).map_err(|e| e.to_string())?
        }
    };
    q.question = q.question.trim().to_string();
    Ok(q)
}

impl ColumnMap {
    fn extract(&self, value: &Value, labels: Option<&[String]>, name: &str, record: usize) -> std::result::Result<BenchmarkQuestion, String> {
        let text = |path: &str| lookup(value, path).and_then(as_text).ok_or_else(|| format!("missing text field `{path}`"));
        let id = match &self.id {
            Some(path) => text(path)?,
            None => format!("{name}-{record:05}"),
        };
        let question = self.question.iter().map(|p| text(p)).collect::<std::result::Result<Vec<_>, _>>()?.join(" ");
        let candidates = match &self.candidates {
            CandidateSource::Fields(paths) => paths.iter().map(|p| text(p)).collect::<std::result::Result<Vec<_>, _>>()?,
            CandidateSource::List { field, text: member } => {
                let list = lookup(value, field).and_then(Value::as_array).ok_or_else(|| format!("missing array field `{field}`"))?;
                list.iter()
                    .map(|el| match member {
                        Some(m) => el.get(m).and_then(as_text),
                        None => as_text(el),
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| format!("`{field}` has a non-text element"))?
            }
        };
        let raw = match &self.answer {
            AnswerSource::Field(path) => text(path)?,
            AnswerSource::LabelsFile => labels
                .and_then(|l| l.get(record - 1))
                .cloned()
                .ok_or_else(|| "no label for this record".to_string())?,
        };
        let answer_index = self.encoding.decode(&raw)?;
        Ok(BenchmarkQuestion { id, question: question.trim().to_string(), candidates, answer_index })
    }
}

/// Loads `path` with `adapter`; the benchmark is named after the file stem.
pub fn load_benchmark(path: &Path, adapter: &Adapter, labels: Option<&Path>) -> Result<Benchmark> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "benchmark".into());
    adapter.load(path, labels, &name)
}
