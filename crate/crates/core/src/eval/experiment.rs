use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, majority_baseline, Benchmark};
use crate::analytics::{domain_averages, DomainTable};
use crate::kg::Dimension;
use crate::sampler::{compute_training_stats, sample, MarginConvention, SampleSpec, Strategy, Tail, TrainingStats};
use crate::scorer::{initial_scorer, train_scorer, CurvePoint, DynamicsLog, ScorerConfig, TrainHyper};
use crate::synth::QuestionPool;
use crate::{Error, Result};

/// One strategy axis value: a strategy with its tail or dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyCell {
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<Tail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<Dimension>,
}

impl StrategyCell {
    pub fn new(strategy: Strategy) -> Self {
        Self { strategy, tail: None, dimension: None }
    }

    pub fn spec(&self, k: f64, seed: u64, margin_convention: MarginConvention) -> SampleSpec {
        SampleSpec { strategy: self.strategy, k, tail: self.tail, dimension: self.dimension, seed, margin_convention }
    }
}

impl fmt::Display for StrategyCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.strategy)?;
        if let Some(t) = self.tail {
            write!(f, ":{t}")?;
        }
        if let Some(d) = self.dimension {
            write!(f, ":{d}")?;
        }
        Ok(())
    }
}

impl FromStr for StrategyCell {
    type Err = Error;

    /// `random`, `uniform`, `confidence:high`, `dimension:temporal`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let strategy: Strategy = name.parse()?;
        let mut cell = Self::new(strategy);
        match arg {
            Some(a) if strategy == Strategy::Dimension => cell.dimension = Some(a.parse()?),
            Some(a) if strategy.uses_dynamics() => cell.tail = Some(a.parse()?),
            Some(a) => return Err(Error::Spec(format!("strategy `{strategy}` takes no argument, got `{a}`"))),
            None => {}
        }
        Ok(cell)
    }
}

/// A benchmark file named in an experiment config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSource {
    pub path: PathBuf,
    #[serde(default = "default_adapter")]
    pub adapter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn default_adapter() -> String {
    "unified".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub strategies: Vec<StrategyCell>,
    pub k: Vec<f64>,
    pub seeds: Vec<u64>,
    pub hyper: TrainHyper,
    pub scorer: ScorerConfig,
    pub margin_convention: MarginConvention,
    pub domains: DomainTable,
    /// Input files, resolved by the caller.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub benchmarks: Vec<BenchmarkSource>,
    /// Externally produced dynamics; otherwise a full-pool run per seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "sweep".into(),
            strategies: vec![StrategyCell::new(Strategy::Random)],
            k: vec![0.0, 1.0, 5.0, 10.0, 33.0, 50.0, 100.0],
            seeds: vec![0],
            hyper: TrainHyper::default(),
            scorer: ScorerConfig::default(),
            margin_convention: MarginConvention::Max,
            domains: DomainTable::default(),
            pool: None,
            benchmarks: Vec::new(),
            dynamics: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() || self.k.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("strategy, K and seed grids must be non-empty".into()));
        }
        for cell in &self.strategies {
            cell.spec(0.0, 0, self.margin_convention).validate()?;
        }
        if let Some(k) = self.k.iter().find(|k| !(0.0..=100.0).contains(*k)) {
            return Err(Error::Config(format!("K must lie in [0, 100], got {k}")));
        }
        self.hyper.validate()?;
        self.scorer.validate()
    }

    /// Grid cells in lexicographic (strategy label, K, seed) order.
    pub fn cells(&self) -> Vec<(StrategyCell, f64, u64)> {
        let mut strategies = self.strategies.clone();
        strategies.sort_by_key(|c| c.to_string());
        strategies.dedup();
        let mut ks = self.k.clone();
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        let mut out = Vec::with_capacity(strategies.len() * ks.len() * seeds.len());
        for s in &strategies {
            for k in &ks {
                for seed in &seeds {
                    out.push((s.clone(), *k, *seed));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub strategy: String,
    pub k: f64,
    pub seed: u64,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub sample_size: usize,
    pub accuracies: BTreeMap<String, f64>,
    pub ties: BTreeMap<String, usize>,
    pub avg: Option<f64>,
    pub avg_ldo: Option<f64>,
    pub avg_hdo: Option<f64>,
    /// Training curve of this cell; empty for K=0.
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: serde_json::Value,
    pub benchmarks: Vec<String>,
    pub majority: BTreeMap<String, f64>,
    pub cells: Vec<CellReport>,
}

/// In-memory inputs of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentInputs<'a> {
    pub pool: &'a QuestionPool,
    pub benchmarks: &'a [Benchmark],
    pub dynamics: Option<&'a DynamicsLog>,
}

type StatsBySeed = HashMap<u64, std::result::Result<TrainingStats, String>>;

fn stats_for_seeds(config: &ExperimentConfig, inputs: &ExperimentInputs<'_>, seeds: &[u64]) -> StatsBySeed {
    seeds
        .par_iter()
        .map(|seed| {
            let stats = match inputs.dynamics {
                Some(log) => compute_training_stats(log),
                None => {
                    let hyper = TrainHyper { seed: *seed, ..config.hyper.clone() };
                    initial_scorer(inputs.pool, config.scorer.clone(), *seed)
                        .and_then(|s| train_scorer(s, inputs.pool, &hyper))
                        .and_then(|t| compute_training_stats(&t.log))
                }
            };
            (*seed, stats.map_err(|e| format!("training statistics: {e}")))
        })
        .collect()
}

/// Sample size, accuracies, tie counts and training curve of one cell.
type CellOutcome = (usize, BTreeMap<String, f64>, BTreeMap<String, usize>, Vec<CurvePoint>);

fn run_cell(
    config: &ExperimentConfig,
    inputs: &ExperimentInputs<'_>,
    stats: &StatsBySeed,
    cell: &StrategyCell,
    k: f64,
    seed: u64,
) -> std::result::Result<CellOutcome, String> {
    let vanilla = initial_scorer(inputs.pool, config.scorer.clone(), seed).map_err(|e| e.to_string())?;
    let spec = cell.spec(k, seed, config.margin_convention);
    let (scorer, size, curve) = if spec.target_size(inputs.pool.len()) == 0 {
        (vanilla, 0, Vec::new())
    } else {
        let cell_stats = if cell.strategy.uses_dynamics() {
            Some(stats.get(&seed).expect("stats computed for every seed").as_ref().map_err(Clone::clone)?)
        } else {
            None
        };
        let subset = sample(inputs.pool, &spec, cell_stats).map_err(|e| e.to_string())?;
        if subset.is_empty() {
            (vanilla, 0, Vec::new())
        } else {
            let hyper = TrainHyper { seed, ..config.hyper.clone() };
            let trained = train_scorer(vanilla, &subset, &hyper).map_err(|e| e.to_string())?;
            (trained.scorer, subset.len(), trained.curve)
        }
    };
    let mut accuracies = BTreeMap::new();
    let mut ties = BTreeMap::new();
    for b in inputs.benchmarks {
        let e = evaluate(&scorer, b).map_err(|e| e.to_string())?;
        accuracies.insert(b.name.clone(), e.accuracy);
        ties.insert(b.name.clone(), e.ties);
    }
    Ok((size, accuracies, ties, curve))
}

/// Runs every grid cell: sample, train (nothing for K=0), evaluate all
/// benchmarks. A failing cell is recorded and the others still run.
pub fn run_experiment(config: &ExperimentConfig, inputs: &ExperimentInputs<'_>) -> Result<ExperimentReport> {
    config.validate()?;
    if inputs.pool.is_empty() {
        return Err(Error::Config("experiment pool is empty".into()));
    }
    let mut names = HashSet::new();
    for b in inputs.benchmarks {
        if !names.insert(b.name.as_str()) {
            return Err(Error::Config(format!("benchmark name `{}` used twice", b.name)));
        }
    }
    let cells = config.cells();
    let mut dynamics_seeds: Vec<u64> = cells
        .iter()
        .filter(|(c, k, _)| c.strategy.uses_dynamics() && SampleSpec::new(c.strategy, *k).target_size(inputs.pool.len()) > 0)
        .map(|(_, _, s)| *s)
        .collect();
    dynamics_seeds.sort_unstable();
    dynamics_seeds.dedup();
    let stats = stats_for_seeds(config, inputs, &dynamics_seeds);

    let reports: Vec<CellReport> = cells
        .par_iter()
        .map(|(cell, k, seed)| {
            let base = CellReport {
                strategy: cell.to_string(),
                k: *k,
                seed: *seed,
                status: CellStatus::Ok,
                error: None,
                sample_size: 0,
                accuracies: BTreeMap::new(),
                ties: BTreeMap::new(),
                avg: None,
                avg_ldo: None,
                avg_hdo: None,
                curve: Vec::new(),
            };
            match run_cell(config, inputs, &stats, cell, *k, *seed) {
                Ok((sample_size, accuracies, ties, curve)) => {
                    let avgs = domain_averages(&accuracies, &config.domains);
                    CellReport {
                        sample_size,
                        avg: (!accuracies.is_empty()).then_some(avgs.avg),
                        avg_ldo: avgs.avg_ldo,
                        avg_hdo: avgs.avg_hdo,
                        accuracies,
                        ties,
                        curve,
                        ..base
                    }
                }
                Err(message) => CellReport { status: CellStatus::Error, error: Some(message), ..base },
            }
        })
        .collect();

    Ok(ExperimentReport {
        name: config.name.clone(),
        config: serde_json::to_value(config)?,
        benchmarks: inputs.benchmarks.iter().map(|b| b.name.clone()).collect(),
        majority: inputs.benchmarks.iter().map(|b| (b.name.clone(), majority_baseline(b))).collect(),
        cells: reports,
    })
}

/// Trains on the whole pool once and returns its log, for callers that want
/// the dynamics file of a sweep.
pub fn full_pool_dynamics(config: &ExperimentConfig, pool: &QuestionPool, seed: u64) -> Result<DynamicsLog> {
    let hyper = TrainHyper { seed, ..config.hyper.clone() };
    Ok(train_scorer(initial_scorer(pool, config.scorer.clone(), seed)?, pool, &hyper)?.log)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

impl ExperimentReport {
    /// Recomputes every average from the per-benchmark accuracies.
    pub fn check_averages(&self, domains: &DomainTable) -> std::result::Result<(), String> {
        for c in self.cells.iter().filter(|c| c.status == CellStatus::Ok) {
            let vals: Vec<f64> = c.accuracies.values().copied().collect();
            let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            let group = |label| -> Vec<f64> {
                c.accuracies.iter().filter(|(n, _)| domains.get(n) == Some(label)).map(|(_, a)| *a).collect()
            };
            let checks = [
                ("avg", c.avg, mean(&vals)),
                ("avg_ldo", c.avg_ldo, mean(&group(crate::analytics::DomainLabel::Low))),
                ("avg_hdo", c.avg_hdo, mean(&group(crate::analytics::DomainLabel::High))),
            ];
            for (name, got, want) in checks {
                let ok = match (got, want) {
                    (Some(g), Some(w)) => close(g, w),
                    (None, None) => true,
                    _ => false,
                };
                if !ok {
                    return Err(format!("{} K={} seed={}: {name} {got:?} != {want:?}", c.strategy, c.k, c.seed));
                }
            }
        }
        Ok(())
    }

    pub fn cell(&self, strategy: &str, k: f64, seed: u64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.strategy == strategy && c.k == k && c.seed == seed)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// `strategy,k,benchmark,accuracy,seed`; averages appear as the
    /// pseudo-benchmarks `avg`, `avg_ldo` and `avg_hdo`. Failed cells are left out.
    pub fn write_sweep_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["strategy", "k", "benchmark", "accuracy", "seed"])?;
        for c in self.cells.iter().filter(|c| c.status == CellStatus::Ok) {
            let mut rows: Vec<(String, f64)> = c.accuracies.iter().map(|(b, a)| (b.clone(), *a)).collect();
            for (label, v) in [("avg", c.avg), ("avg_ldo", c.avg_ldo), ("avg_hdo", c.avg_hdo)] {
                if let Some(v) = v {
                    rows.push((label.to_string(), v));
                }
            }
            for (bench, acc) in rows {
                w.write_record([c.strategy.clone(), c.k.to_string(), bench, acc.to_string(), c.seed.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(std::path::Path::new("<sweep>"), e))
    }

    /// `strategy,k,seed,epoch,mean_loss,train_accuracy`.
    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["strategy", "k", "seed", "epoch", "mean_loss", "train_accuracy"])?;
        for c in &self.cells {
            for p in &c.curve {
                w.write_record([
                    c.strategy.clone(),
                    c.k.to_string(),
                    c.seed.to_string(),
                    p.epoch.to_string(),
                    p.mean_loss.to_string(),
                    p.train_accuracy.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(std::path::Path::new("<curves>"), e))
    }
}
