//! Tokenization and token-set helpers shared by synthesis, scoring and analytics.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use crate::Error;

/// Splits text into tokens. Implementations must be deterministic.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;

    /// Distinct tokens of `text`.
    fn token_set(&self, text: &str) -> BTreeSet<String> {
        self.tokenize(text).into_iter().collect()
    }
}

/// Lowercases, turns every non-alphanumeric character into a separator and
/// splits on whitespace.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut tokens = Vec::new();
        let mut current = String::new();
        for ch in text.chars() {
            if ch.is_alphanumeric() {
                current.extend(ch.to_lowercase());
            } else if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
        tokens
    }
}

/// Greedy longest-match subword tokenizer driven by a vocabulary file.
///
/// Words come from [`WhitespaceTokenizer`]; each word is split into the longest
/// vocabulary prefix, then the longest vocabulary piece (with or without the
/// continuation marker) of the remainder, and so on. Characters with no
/// matching piece are emitted on their own.
#[derive(Debug, Clone)]
pub struct SubwordTokenizer {
    vocab: HashSet<String>,
    continuation: String,
    max_piece_chars: usize,
}

impl SubwordTokenizer {
    pub fn new<I, S>(pieces: I, continuation: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vocab: HashSet<String> = pieces.into_iter().map(Into::into).collect();
        let continuation = continuation.into();
        let max_piece_chars = vocab
            .iter()
            .map(|p| p.trim_start_matches(continuation.as_str()).chars().count())
            .max()
            .unwrap_or(1)
            .max(1);
        Self { vocab, continuation, max_piece_chars }
    }

    /// One piece per line; blank lines and `#` comments are ignored.
    pub fn from_file(path: &Path, continuation: &str) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let pieces = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase);
        Ok(Self::new(pieces, continuation))
    }

    fn split_word(&self, word: &str, out: &mut Vec<String>) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        while start < chars.len() {
            let longest = self.max_piece_chars.min(chars.len() - start);
            let mut matched = None;
            for len in (1..=longest).rev() {
                let piece: String = chars[start..start + len].iter().collect();
                if start > 0 {
                    let marked = format!("{}{}", self.continuation, piece);
                    if self.vocab.contains(&marked) {
                        matched = Some((len, marked));
                        break;
                    }
                }
                if self.vocab.contains(&piece) {
                    matched = Some((len, piece));
                    break;
                }
            }
            let (len, piece) = matched.unwrap_or_else(|| (1, chars[start].to_string()));
            out.push(piece);
            start += len;
        }
    }
}

impl Tokenizer for SubwordTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in WhitespaceTokenizer.tokenize(text) {
            self.split_word(&word, &mut out);
        }
        out
    }
}

/// A fixed set of function words, compared after lowercasing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

impl StopwordList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self { words: words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).collect() }
    }

    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Sorted copy of the list, for snapshots.
    pub fn to_sorted_vec(&self) -> Vec<String> {
        let mut v: Vec<String> = self.words.iter().cloned().collect();
        v.sort();
        v
    }
}

/// Wraps a tokenizer and drops stopwords from its output.
#[derive(Debug, Clone)]
pub struct StopwordFilter<T> {
    inner: T,
    stopwords: StopwordList,
}

impl<T: Tokenizer> StopwordFilter<T> {
    pub fn new(inner: T, stopwords: StopwordList) -> Self {
        Self { inner, stopwords }
    }
}

impl<T: Tokenizer> Tokenizer for StopwordFilter<T> {
    fn tokenize(&self, text: &str) -> Vec<String> {
        self.inner
            .tokenize(text)
            .into_iter()
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }
}

/// Jaccard similarity of two token sets. Two empty sets score 0.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Stable 64-bit FNV-1a hash, used for token fingerprints and seed derivation.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Lowercase hex SHA-256, used for config and statistics digests.
pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
