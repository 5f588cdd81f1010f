use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Four contiguous rank blocks of a metric, lowest values first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub blocks: [Vec<String>; 4],
    /// Largest value in each of the first three blocks.
    pub cuts: [f64; 3],
}

/// Sorts by `(value, id)` and splits into four blocks whose sizes differ by
/// at most one, larger blocks first.
pub fn quartile_partition(items: &[(String, f64)]) -> Result<Quartiles> {
    if items.len() < 4 {
        return Err(Error::Partition(format!("need at least 4 items, got {}", items.len())));
    }
    if let Some((id, v)) = items.iter().find(|(_, v)| v.is_nan()) {
        return Err(Error::Partition(format!("`{id}` has metric value {v}")));
    }
    let mut sorted: Vec<&(String, f64)> = items.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let (base, extra) = (items.len() / 4, items.len() % 4);
    let mut blocks: [Vec<String>; 4] = Default::default();
    let mut cuts = [0.0; 3];
    let mut start = 0;
    for (q, block) in blocks.iter_mut().enumerate() {
        let size = base + usize::from(q < extra);
        *block = sorted[start..start + size].iter().map(|(id, _)| id.clone()).collect();
        if q < 3 {
            cuts[q] = sorted[start + size - 1].1;
        }
        start += size;
    }
    Ok(Quartiles { blocks, cuts })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileAccuracy {
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub metric: String,
    pub cuts: [f64; 3],
    pub quartiles: Vec<QuartileAccuracy>,
    pub total: usize,
    pub correct: usize,
    pub overall_accuracy: f64,
}

impl PartitionReport {
    /// Question-count-weighted mean of the quartile accuracies.
    pub fn weighted_quartile_accuracy(&self) -> f64 {
        let sum: f64 = self.quartiles.iter().map(|q| q.count as f64 * q.accuracy).sum();
        sum / self.total as f64
    }

    /// Integer counts add up exactly and the weighted mean matches the overall
    /// accuracy within `1e-9`.
    pub fn reconciles(&self) -> bool {
        let count: usize = self.quartiles.iter().map(|q| q.count).sum();
        let correct: usize = self.quartiles.iter().map(|q| q.correct).sum();
        count == self.total
            && correct == self.correct
            && (self.weighted_quartile_accuracy() - self.overall_accuracy).abs() <= 1e-9
    }
}

fn ratio(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

/// Accuracy per quartile from per-question correctness.
pub fn partition_accuracy(metric: &str, quartiles: &Quartiles, correct: &HashMap<String, bool>) -> Result<PartitionReport> {
    let missing: Vec<String> =
        quartiles.blocks.iter().flatten().filter(|id| !correct.contains_key(*id)).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    let rows: Vec<QuartileAccuracy> = quartiles
        .blocks
        .iter()
        .map(|block| {
            let c = block.iter().filter(|id| correct[*id]).count();
            QuartileAccuracy { count: block.len(), correct: c, accuracy: ratio(c, block.len()) }
        })
        .collect();
    let total: usize = rows.iter().map(|r| r.count).sum();
    let right: usize = rows.iter().map(|r| r.correct).sum();
    let report = PartitionReport {
        metric: metric.to_string(),
        cuts: quartiles.cuts,
        quartiles: rows,
        total,
        correct: right,
        overall_accuracy: ratio(right, total),
    };
    if !report.reconciles() {
        return Err(Error::Partition(format!("`{metric}` quartile accuracies do not reconcile with the overall accuracy")));
    }
    Ok(report)
}

/// Whether a benchmark draws on the same knowledge graphs used for adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DomainLabel {
    #[serde(rename = "HDO")]
    High,
    #[serde(rename = "LDO")]
    Low,
}

/// Benchmark name to domain-overlap label. Names compare case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainTable {
    labels: BTreeMap<String, DomainLabel>,
}

impl Default for DomainTable {
    fn default() -> Self {
        let mut t = Self { labels: BTreeMap::new() };
        for name in ["siqa", "socialiqa", "csqa", "commonsenseqa"] {
            t.insert(name, DomainLabel::High);
        }
        for name in ["anli", "piqa", "wg", "winogrande"] {
            t.insert(name, DomainLabel::Low);
        }
        t
    }
}

impl DomainTable {
    pub fn empty() -> Self {
        Self { labels: BTreeMap::new() }
    }

    pub fn insert(&mut self, benchmark: &str, label: DomainLabel) {
        self.labels.insert(benchmark.to_ascii_lowercase(), label);
    }

    pub fn get(&self, benchmark: &str) -> Option<DomainLabel> {
        self.labels.get(&benchmark.to_ascii_lowercase()).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainAverages {
    pub avg: f64,
    pub avg_ldo: Option<f64>,
    pub avg_hdo: Option<f64>,
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Unweighted means over all benchmarks and over each labeled group.
/// Unlabeled benchmarks count toward `avg` only.
pub fn domain_averages(accuracies: &BTreeMap<String, f64>, table: &DomainTable) -> DomainAverages {
    let all: Vec<f64> = accuracies.values().copied().collect();
    let group = |label| -> Vec<f64> {
        accuracies.iter().filter(|(name, _)| table.get(name) == Some(label)).map(|(_, a)| *a).collect()
    };
    DomainAverages {
        avg: mean(&all).unwrap_or(0.0),
        avg_ldo: mean(&group(DomainLabel::Low)),
        avg_hdo: mean(&group(DomainLabel::High)),
    }
}
