use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;

use crate::kg::{Dimension, Statement, StatementSet};
use crate::text::{fnv1a64, StopwordFilter, StopwordList, Tokenizer, WhitespaceTokenizer};
use crate::{Error, Result, SkipCause};

/// Sorted, deduplicated token hashes. Hash collisions can only make two
/// texts look more similar, so overlap checks on fingerprints never accept
/// a pair that truly overlaps.
pub(crate) type Fingerprint = Vec<u64>;

#[derive(Debug, Clone)]
struct Tail {
    text: String,
    fingerprint: Fingerprint,
}

/// Candidate distractor texts grouped by relation and dimension, with
/// precomputed content-token fingerprints.
#[derive(Debug, Clone)]
pub struct DistractorIndex {
    tokenizer: StopwordFilter<WhitespaceTokenizer>,
    tails: Vec<Tail>,
    by_relation: HashMap<String, Vec<u32>>,
    by_dimension: Vec<Vec<u32>>,
    all: Vec<u32>,
    max_jaccard: f64,
    retry_cap: usize,
}

pub(crate) fn fingerprint_with(tokenizer: &impl Tokenizer, text: &str) -> Fingerprint {
    let mut fp: Vec<u64> = tokenizer.tokenize(text).iter().map(|t| fnv1a64(t.as_bytes())).collect();
    fp.sort_unstable();
    fp.dedup();
    fp
}

/// Jaccard similarity of two fingerprints.
pub(crate) fn fingerprint_jaccard(a: &[u64], b: &[u64]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

impl DistractorIndex {
    /// Indexes the tails of `set`. Tails without content tokens are left out.
    pub fn build(set: &StatementSet, stopwords: &StopwordList, max_jaccard: f64, retry_cap: usize) -> Self {
        let tokenizer = StopwordFilter::new(WhitespaceTokenizer, stopwords.clone());
        let prepared: Vec<(String, Fingerprint)> = set
            .statements
            .par_iter()
            .map(|s| {
                let text = s.tail.split_whitespace().collect::<Vec<_>>().join(" ");
                let fp = fingerprint_with(&tokenizer, &text);
                (text, fp)
            })
            .collect();

        let mut tails = Vec::new();
        let mut tail_ids: HashMap<String, u32> = HashMap::new();
        let mut by_relation: HashMap<String, (Vec<u32>, HashSet<u32>)> = HashMap::new();
        let mut by_dimension: Vec<(Vec<u32>, HashSet<u32>)> = vec![Default::default(); Dimension::COUNT];
        let mut all = Vec::new();
        for (statement, (text, fingerprint)) in set.statements.iter().zip(prepared) {
            if fingerprint.is_empty() {
                continue;
            }
            let id = match tail_ids.get(&text) {
                Some(id) => *id,
                None => {
                    let id = tails.len() as u32;
                    tail_ids.insert(text.clone(), id);
                    tails.push(Tail { text, fingerprint });
                    all.push(id);
                    id
                }
            };
            let rel = by_relation.entry(statement.relation.clone()).or_default();
            if rel.1.insert(id) {
                rel.0.push(id);
            }
            let dim = &mut by_dimension[statement.dimension.index()];
            if dim.1.insert(id) {
                dim.0.push(id);
            }
        }
        Self {
            tokenizer,
            tails,
            by_relation: by_relation.into_iter().map(|(k, (v, _))| (k, v)).collect(),
            by_dimension: by_dimension.into_iter().map(|(v, _)| v).collect(),
            all,
            max_jaccard,
            retry_cap,
        }
    }

    pub fn fingerprint(&self, text: &str) -> Vec<u64> {
        fingerprint_with(&self.tokenizer, text)
    }

    /// Number of distinct indexed tail texts.
    pub fn len(&self) -> usize {
        self.tails.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tails.is_empty()
    }

    fn compatible(&self, candidate: &Tail, answer: &str, answer_fp: &[u64], chosen: &[u32]) -> bool {
        candidate.text != answer
            && fingerprint_jaccard(&candidate.fingerprint, answer_fp) <= self.max_jaccard
            && chosen.iter().all(|c| {
                let other = &self.tails[*c as usize];
                other.text != candidate.text && fingerprint_jaccard(&other.fingerprint, &candidate.fingerprint) <= self.max_jaccard
            })
    }
}

/// Draws `count` distractors for `statement` whose answer text is `answer`.
///
/// Each slot tries tails of the same relation, then the same dimension, then
/// the whole graph, with up to `retry_cap` draws per tier. A candidate is
/// accepted when it differs from the answer and from the distractors already
/// chosen, and its content-token Jaccard similarity with each of them is at
/// most the configured threshold.
pub fn sample_distractors<R: Rng + ?Sized>(
    statement: &Statement,
    answer: &str,
    index: &DistractorIndex,
    count: usize,
    rng: &mut R,
) -> Result<Vec<String>> {
    let answer_fp = index.fingerprint(answer);
    let empty = Vec::new();
    let tiers: [&Vec<u32>; 3] = [
        index.by_relation.get(&statement.relation).unwrap_or(&empty),
        &index.by_dimension[statement.dimension.index()],
        &index.all,
    ];
    let mut chosen: Vec<u32> = Vec::with_capacity(count);
    'slot: for _ in 0..count {
        for tier in tiers {
            if tier.is_empty() {
                continue;
            }
            for _ in 0..index.retry_cap {
                let id = tier[rng.gen_range(0..tier.len())];
                if index.compatible(&index.tails[id as usize], answer, &answer_fp, &chosen) {
                    chosen.push(id);
                    continue 'slot;
                }
            }
        }
        return Err(Error::Synthesis { statement: statement.id.clone(), cause: SkipCause::InsufficientDistractors });
    }
    Ok(chosen.into_iter().map(|id| index.tails[id as usize].text.clone()).collect())
}
