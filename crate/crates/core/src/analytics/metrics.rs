use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::text::{jaccard, Tokenizer};
use crate::{Error, MultipleChoice, Result};

fn candidate_sets(item: &dyn MultipleChoice, tokenizer: &dyn Tokenizer) -> Vec<BTreeSet<String>> {
    item.candidates().iter().map(|c| tokenizer.token_set(c)).collect()
}

/// Jaccard similarity of the candidates' token sets; the mean over unordered
/// pairs when there are more than two.
pub fn answer_similarity(item: &dyn MultipleChoice, tokenizer: &dyn Tokenizer) -> Result<f64> {
    let sets = candidate_sets(item, tokenizer);
    if sets.len() < 2 {
        return Err(Error::Metric(format!("`{}`: answer similarity needs at least 2 candidates", item.id())));
    }
    if let Some(i) = sets.iter().position(BTreeSet::is_empty) {
        return Err(Error::Metric(format!("`{}`: candidate {i} has no tokens", item.id())));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            sum += jaccard(&sets[i], &sets[j]);
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

/// Total token count over all candidates, with multiplicity.
pub fn answer_length(item: &dyn MultipleChoice, tokenizer: &dyn Tokenizer) -> usize {
    item.candidates().iter().map(|c| tokenizer.tokenize(c).len()).sum()
}

/// Token occurrence counts over a synthetic pool.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqTable {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl FreqTable {
    /// `None` for tokens never seen.
    pub fn get(&self, token: &str) -> Option<u64> {
        self.counts.get(token).copied()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn add_text(&mut self, text: &str, tokenizer: &dyn Tokenizer) {
        for token in tokenizer.tokenize(text) {
            *self.counts.entry(token).or_insert(0) += 1;
            self.total += 1;
        }
    }
}

/// Counts every token of every question and candidate text.
pub fn build_freq_table<'a, T, I>(items: I, tokenizer: &dyn Tokenizer) -> FreqTable
where
    T: MultipleChoice + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut table = FreqTable::default();
    for item in items {
        table.add_text(item.question(), tokenizer);
        for c in item.candidates() {
            table.add_text(c, tokenizer);
        }
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabOverlap {
    pub value: f64,
    /// Size of the union of candidate token sets.
    pub tokens: usize,
    /// Union tokens absent from the table, counted with frequency 1.
    pub unseen: usize,
}

/// Mean reciprocal pool frequency of the union of candidate tokens.
pub fn vocab_overlap_detail(item: &dyn MultipleChoice, freq: &FreqTable, tokenizer: &dyn Tokenizer) -> Result<VocabOverlap> {
    let union: BTreeSet<String> = candidate_sets(item, tokenizer).into_iter().flatten().collect();
    if union.is_empty() {
        return Err(Error::Metric(format!("`{}`: candidates have no tokens", item.id())));
    }
    let mut sum = 0.0;
    let mut unseen = 0;
    for token in &union {
        let f = match freq.get(token) {
            Some(f) => f.max(1),
            None => {
                unseen += 1;
                1
            }
        };
        sum += 1.0 / f as f64;
    }
    Ok(VocabOverlap { value: sum / union.len() as f64, tokens: union.len(), unseen })
}

pub fn vocab_overlap(item: &dyn MultipleChoice, freq: &FreqTable, tokenizer: &dyn Tokenizer) -> Result<f64> {
    vocab_overlap_detail(item, freq, tokenizer).map(|v| v.value)
}
