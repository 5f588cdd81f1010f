//! Bag-of-token-embeddings scorer.
//!
//! A question and each candidate are encoded as the mean embedding of their
//! in-vocabulary tokens. The score of candidate `i` is
//! `scale * cos(u, v_i) + b_i`, where `u` is the question vector, `v_i` the
//! candidate vector and `b_i` the mean bias of the candidate's tokens. A zero
//! vector has cosine 0 with everything.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::margin_loss_grad;
use super::Scorer;
use crate::text::{Tokenizer, WhitespaceTokenizer};
use crate::{rng, Error, MultipleChoice, Result};

const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Embeddings drawn from `uniform(-init_scale, init_scale)`, biases 0.
    Uniform,
    /// All parameters 0; every candidate ties.
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub dim: usize,
    pub init_scale: f64,
    /// Multiplier on the cosine term.
    pub score_scale: f64,
    pub init: Init,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self { dim: 64, init_scale: 0.05, score_scale: 4.0, init: Init::Uniform }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("scorer dim must be positive".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Config("init_scale must be positive".into()));
        }
        if !(self.score_scale > 0.0 && self.score_scale.is_finite()) {
            return Err(Error::Config("score_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Token to row mapping, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_texts<'a, I: IntoIterator<Item = &'a str>>(texts: I) -> Self {
        let mut vocab = Self::default();
        for text in texts {
            for token in WhitespaceTokenizer.tokenize(text) {
                if !vocab.index.contains_key(&token) {
                    vocab.index.insert(token.clone(), vocab.tokens.len() as u32);
                    vocab.tokens.push(token);
                }
            }
        }
        vocab
    }

    /// Every question and candidate text of `items`.
    pub fn from_items<'a, T: MultipleChoice + 'a>(items: impl IntoIterator<Item = &'a T>) -> Self {
        let mut texts: Vec<&str> = Vec::new();
        for item in items {
            texts.push(item.question());
            texts.extend(item.candidates().iter().map(String::as_str));
        }
        Self::from_texts(texts)
    }

    fn rebuild_index(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }
}

/// Token ids with their weight in a mean (count / in-vocabulary length).
pub(crate) type Bag = Vec<(u32, f64)>;

/// A question encoded against a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedItem {
    pub(crate) question: Bag,
    pub(crate) candidates: Vec<Bag>,
    pub answer_index: usize,
}

impl EncodedItem {
    pub fn n(&self) -> usize {
        self.candidates.len()
    }
}

/// Per-row gradient accumulator in first-touched order.
#[derive(Debug, Clone, Default)]
pub(crate) struct SparseGrad {
    pub(crate) rows: Vec<(u32, Vec<f64>, f64)>,
    slot: HashMap<u32, usize>,
}

impl SparseGrad {
    fn row(&mut self, id: u32, dim: usize) -> &mut (u32, Vec<f64>, f64) {
        let next = self.rows.len();
        let slot = *self.slot.entry(id).or_insert(next);
        if slot == next {
            self.rows.push((id, vec![0.0; dim], 0.0));
        }
        &mut self.rows[slot]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingScorer {
    config: ScorerConfig,
    vocab: Vocabulary,
    /// Row-major `vocab.len() x dim`.
    embeddings: Vec<f64>,
    bias: Vec<f64>,
}

struct Forward {
    u: Vec<f64>,
    u_norm: f64,
    vs: Vec<Vec<f64>>,
    v_norms: Vec<f64>,
    cosines: Vec<f64>,
    scores: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl EmbeddingScorer {
    pub fn new(vocab: Vocabulary, config: ScorerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let size = vocab.len() * config.dim;
        let embeddings = match config.init {
            Init::Zeros => vec![0.0; size],
            Init::Uniform => {
                let mut rng = rng::stream(seed, "scorer-init");
                (0..size).map(|_| rng.gen_range(-config.init_scale..config.init_scale)).collect()
            }
        };
        let bias = vec![0.0; vocab.len()];
        Ok(Self { config, vocab, embeddings, bias })
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn parameter_count(&self) -> usize {
        self.embeddings.len() + self.bias.len()
    }

    fn bag(&self, text: &str) -> Bag {
        let ids: Vec<u32> = WhitespaceTokenizer.tokenize(text).iter().filter_map(|t| self.vocab.get(t)).collect();
        let mut bag: Bag = Vec::new();
        let w = if ids.is_empty() { 0.0 } else { 1.0 / ids.len() as f64 };
        for id in ids {
            match bag.iter_mut().find(|(t, _)| *t == id) {
                Some(entry) => entry.1 += w,
                None => bag.push((id, w)),
            }
        }
        bag
    }

    pub fn encode(&self, question: &str, candidates: &[String], answer_index: usize) -> EncodedItem {
        EncodedItem {
            question: self.bag(question),
            candidates: candidates.iter().map(|c| self.bag(c)).collect(),
            answer_index,
        }
    }

    pub fn encode_item(&self, item: &dyn MultipleChoice) -> EncodedItem {
        self.encode(item.question(), item.candidates(), item.answer_index())
    }

    fn embed(&self, bag: &Bag) -> Vec<f64> {
        let d = self.config.dim;
        let mut out = vec![0.0; d];
        for (id, w) in bag {
            let row = &self.embeddings[*id as usize * d..(*id as usize + 1) * d];
            out.iter_mut().zip(row).for_each(|(o, e)| *o += w * e);
        }
        out
    }

    fn forward(&self, item: &EncodedItem) -> Forward {
        let u = self.embed(&item.question);
        let u_norm = dot(&u, &u).sqrt();
        let vs: Vec<Vec<f64>> = item.candidates.iter().map(|c| self.embed(c)).collect();
        let v_norms: Vec<f64> = vs.iter().map(|v| dot(v, v).sqrt()).collect();
        let cosines: Vec<f64> = vs
            .iter()
            .zip(&v_norms)
            .map(|(v, vn)| if u_norm < NORM_FLOOR || *vn < NORM_FLOOR { 0.0 } else { dot(&u, v) / (u_norm * vn) })
            .collect();
        let scores = cosines
            .iter()
            .zip(&item.candidates)
            .map(|(cos, bag)| {
                let b: f64 = bag.iter().map(|(id, w)| w * self.bias[*id as usize]).sum();
                self.config.score_scale * cos + b
            })
            .collect();
        Forward { u, u_norm, vs, v_norms, cosines, scores }
    }

    pub fn score_encoded(&self, item: &EncodedItem) -> Vec<f64> {
        self.forward(item).scores
    }

    /// Adds `weight * d(loss)/d(params)` for one item into `grad`; returns the
    /// item's scores.
    pub(crate) fn accumulate_grad(&self, item: &EncodedItem, margin: f64, weight: f64, grad: &mut SparseGrad) -> Result<Vec<f64>> {
        let d = self.config.dim;
        let fw = self.forward(item);
        let dscores = margin_loss_grad(&fw.scores, item.answer_index, margin)?;
        let scale = self.config.score_scale;
        let mut du = vec![0.0; d];
        for (i, g) in dscores.iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            for (id, w) in &item.candidates[i] {
                grad.row(*id, d).2 += weight * g * w;
            }
            let (vn, cos) = (fw.v_norms[i], fw.cosines[i]);
            if fw.u_norm < NORM_FLOOR || vn < NORM_FLOOR {
                continue;
            }
            let v = &fw.vs[i];
            let inv = 1.0 / (fw.u_norm * vn);
            // d cos / du = v / (|u||v|) - cos * u / |u|^2, and symmetrically for v
            for k in 0..d {
                du[k] += g * scale * (v[k] * inv - cos * fw.u[k] / (fw.u_norm * fw.u_norm));
            }
            let dv: Vec<f64> = (0..d).map(|k| g * scale * (fw.u[k] * inv - cos * v[k] / (vn * vn))).collect();
            for (id, w) in &item.candidates[i] {
                let row = &mut grad.row(*id, d).1;
                row.iter_mut().zip(&dv).for_each(|(r, x)| *r += weight * w * x);
            }
        }
        if du.iter().any(|x| *x != 0.0) {
            for (id, w) in &item.question {
                let row = &mut grad.row(*id, d).1;
                row.iter_mut().zip(&du).for_each(|(r, x)| *r += weight * w * x);
            }
        }
        Ok(fw.scores)
    }

    pub(crate) fn apply(&mut self, grad: &SparseGrad, learning_rate: f64) {
        let d = self.config.dim;
        for (id, emb, bias) in &grad.rows {
            let row = &mut self.embeddings[*id as usize * d..(*id as usize + 1) * d];
            row.iter_mut().zip(emb).for_each(|(p, g)| *p -= learning_rate * g);
            self.bias[*id as usize] -= learning_rate * bias;
        }
    }

    /// Flat parameter index of embedding `(id, k)`, or of the bias when `k == dim`.
    pub(crate) fn param_mut(&mut self, id: u32, k: usize) -> &mut f64 {
        let d = self.config.dim;
        if k == d {
            &mut self.bias[id as usize]
        } else {
            &mut self.embeddings[id as usize * d + k]
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut scorer: Self = serde_json::from_str(&text)?;
        scorer.vocab.rebuild_index();
        let expected = scorer.vocab.len() * scorer.config.dim;
        if scorer.embeddings.len() != expected || scorer.bias.len() != scorer.vocab.len() {
            return Err(Error::Config(format!("{}: parameter shapes do not match the vocabulary", path.display())));
        }
        Ok(scorer)
    }
}

impl Scorer for EmbeddingScorer {
    fn score(&self, item: &dyn MultipleChoice) -> Result<Vec<f64>> {
        Ok(self.score_encoded(&self.encode_item(item)))
    }
}
