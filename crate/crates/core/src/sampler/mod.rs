//! Selecting K% of a question pool.
//!
//! Seven strategies: `random`, `dimension`, `uniform`, and four driven by
//! training dynamics (`vanilla_confidence`, `confidence`, `variability`,
//! `margin`) which take the `high` or `low` end of a statistic.

mod stats;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use stats::{compute_training_stats, MarginConvention, QuestionStats, TrainingStats};

use crate::kg::Dimension;
use crate::synth::{PoolHeader, QuestionPool};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Dimension,
    Uniform,
    VanillaConfidence,
    Confidence,
    Variability,
    Margin,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Random,
        Strategy::Dimension,
        Strategy::Uniform,
        Strategy::VanillaConfidence,
        Strategy::Confidence,
        Strategy::Variability,
        Strategy::Margin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Dimension => "dimension",
            Strategy::Uniform => "uniform",
            Strategy::VanillaConfidence => "vanilla_confidence",
            Strategy::Confidence => "confidence",
            Strategy::Variability => "variability",
            Strategy::Margin => "margin",
        }
    }

    /// Whether the strategy ranks questions by a training statistic.
    pub fn uses_dynamics(self) -> bool {
        matches!(self, Strategy::VanillaConfidence | Strategy::Confidence | Strategy::Variability | Strategy::Margin)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == norm)
            .ok_or_else(|| Error::Spec(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    High,
    Low,
}

impl FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Tail::High),
            "low" => Ok(Tail::Low),
            _ => Err(Error::Spec(format!("unknown tail `{s}` (expected high or low)"))),
        }
    }
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tail::High => "high",
            Tail::Low => "low",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub strategy: Strategy,
    /// Percentage of the pool, in `[0, 100]`.
    pub k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<Tail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<Dimension>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub margin_convention: MarginConvention,
}

impl SampleSpec {
    pub fn new(strategy: Strategy, k: f64) -> Self {
        Self { strategy, k, tail: None, dimension: None, seed: 0, margin_convention: MarginConvention::Max }
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn with_dimension(mut self, dimension: Dimension) -> Self {
        self.dimension = Some(dimension);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.k) {
            return Err(Error::Spec(format!("K must lie in [0, 100], got {}", self.k)));
        }
        match (self.strategy.uses_dynamics(), self.tail) {
            (true, None) => return Err(Error::Spec(format!("strategy `{}` needs a tail (high or low)", self.strategy))),
            (false, Some(_)) => return Err(Error::Spec(format!("strategy `{}` takes no tail", self.strategy))),
            _ => {}
        }
        match (self.strategy == Strategy::Dimension, self.dimension) {
            (true, None) => Err(Error::Spec("strategy `dimension` needs a dimension".into())),
            (false, Some(_)) => Err(Error::Spec(format!("strategy `{}` takes no dimension", self.strategy))),
            _ => Ok(()),
        }
    }

    /// `round(K / 100 * pool_size)`, half up.
    pub fn target_size(&self, pool_size: usize) -> usize {
        target_size(self.k, pool_size)
    }
}

/// `round(k / 100 * n)`, half up.
pub fn target_size(k: f64, n: usize) -> usize {
    (k * n as f64 / 100.0 + 0.5).floor() as usize
}

/// Written into the header of a sampled pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleProvenance {
    pub strategy: Strategy,
    pub k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<Tail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<Dimension>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_convention: Option<MarginConvention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats_sha256: Option<String>,
    pub source_size: usize,
}

fn permuted(mut indices: Vec<usize>, seed: u64, label: &str) -> Vec<usize> {
    indices.shuffle(&mut rng::stream(seed, label));
    indices
}

fn select_uniform(pool: &QuestionPool, target: usize, seed: u64) -> Vec<usize> {
    let mut by_dim: Vec<Vec<usize>> = vec![Vec::new(); Dimension::COUNT];
    for (i, q) in pool.questions.iter().enumerate() {
        by_dim[q.dimension.index()].push(i);
    }
    let base = target / Dimension::COUNT;
    let remainder = target % Dimension::COUNT;
    let mut order: Vec<usize> = (0..Dimension::COUNT).collect();
    // most populated first, ties by canonical dimension order
    order.sort_by(|a, b| by_dim[*b].len().cmp(&by_dim[*a].len()).then(a.cmp(b)));
    let mut quota = [base; Dimension::COUNT];
    for d in order.into_iter().take(remainder) {
        quota[d] += 1;
    }
    let mut picked = Vec::with_capacity(target);
    for (d, members) in by_dim.into_iter().enumerate() {
        let take = quota[d].min(members.len());
        let label = format!("sample-uniform-{}", Dimension::ALL[d]);
        picked.extend(permuted(members, seed, &label).into_iter().take(take));
    }
    picked
}

fn dynamics_key(spec: &SampleSpec, s: &QuestionStats) -> f64 {
    match spec.strategy {
        Strategy::VanillaConfidence => s.vanilla_confidence,
        Strategy::Confidence => s.mean_confidence,
        Strategy::Variability => s.variability,
        Strategy::Margin => s.margin(spec.margin_convention),
        _ => unreachable!("not a dynamics strategy"),
    }
}

fn select_dynamics(pool: &QuestionPool, spec: &SampleSpec, stats: &TrainingStats, target: usize) -> Result<Vec<usize>> {
    let mut missing = Vec::new();
    let mut keyed: Vec<(f64, &str, usize)> = Vec::with_capacity(pool.len());
    for (i, q) in pool.questions.iter().enumerate() {
        match stats.get(&q.id) {
            Some(s) => keyed.push((dynamics_key(spec, s), q.id.as_str(), i)),
            None => missing.push(q.id.clone()),
        }
    }
    if !missing.is_empty() {
        let shown: Vec<_> = missing.iter().take(10).cloned().collect();
        return Err(Error::Spec(format!(
            "training statistics missing for {} question(s): {}",
            missing.len(),
            shown.join(", ")
        )));
    }
    let high = spec.tail == Some(Tail::High);
    keyed.sort_by(|a, b| {
        let by_value = a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal);
        let by_value = if high { by_value.reverse() } else { by_value };
        by_value.then_with(|| a.1.cmp(b.1))
    });
    Ok(keyed.into_iter().take(target).map(|(_, _, i)| i).collect())
}

/// Indices into `pool.questions` chosen by `spec`, in the order the strategy
/// ranks them (permutation order, or statistic order for dynamics).
pub fn select_indices(pool: &QuestionPool, spec: &SampleSpec, stats: Option<&TrainingStats>) -> Result<Vec<usize>> {
    spec.validate()?;
    let target = spec.target_size(pool.len());
    if spec.strategy.uses_dynamics() && stats.is_none() {
        return Err(Error::Spec(format!("strategy `{}` needs training statistics", spec.strategy)));
    }
    if target == 0 {
        return Ok(Vec::new());
    }
    match spec.strategy {
        Strategy::Random => {
            let order = permuted((0..pool.len()).collect(), spec.seed, "sample-random");
            Ok(order.into_iter().take(target).collect())
        }
        Strategy::Dimension => {
            let dim = spec.dimension.expect("validated");
            let members: Vec<usize> =
                pool.questions.iter().enumerate().filter(|(_, q)| q.dimension == dim).map(|(i, _)| i).collect();
            if members.is_empty() {
                return Err(Error::Spec(format!("pool has no questions of dimension `{dim}`")));
            }
            let label = format!("sample-dimension-{dim}");
            Ok(permuted(members, spec.seed, &label).into_iter().take(target).collect())
        }
        Strategy::Uniform => Ok(select_uniform(pool, target, spec.seed)),
        _ => select_dynamics(pool, spec, stats.expect("checked above"), target),
    }
}

/// Draws the subset described by `spec`. The result keeps pool order and
/// carries a provenance header.
pub fn sample(pool: &QuestionPool, spec: &SampleSpec, stats: Option<&TrainingStats>) -> Result<QuestionPool> {
    let mut indices = select_indices(pool, spec, stats)?;
    indices.sort_unstable();
    let dynamics = spec.strategy.uses_dynamics();
    let provenance = SampleProvenance {
        strategy: spec.strategy,
        k: spec.k,
        tail: spec.tail,
        dimension: spec.dimension,
        seed: spec.seed,
        margin_convention: (spec.strategy == Strategy::Margin).then_some(spec.margin_convention),
        stats_sha256: if dynamics { stats.map(TrainingStats::digest) } else { None },
        source_size: pool.len(),
    };
    let header = PoolHeader {
        kind: PoolHeader::KIND.to_string(),
        seed: spec.seed,
        generation: pool.header.generation.clone(),
        provenance: Some(provenance),
    };
    let questions = indices.into_iter().map(|i| pool.questions[i].clone()).collect();
    Ok(QuestionPool::new(header, questions))
}
