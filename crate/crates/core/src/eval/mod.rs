//! Benchmarks, accuracy and experiment sweeps.

mod benchmark;
mod evaluate;
mod experiment;

pub use benchmark::{load_benchmark, Adapter, AnswerEncoding, AnswerSource, Benchmark, BenchmarkQuestion, CandidateSource, ColumnMap};
pub use evaluate::{accuracy, evaluate, majority_baseline, Evaluation, ExternalScores, QuestionPrediction};
pub use experiment::{
    full_pool_dynamics, run_experiment, BenchmarkSource, CellReport, CellStatus, ExperimentConfig, ExperimentInputs,
    ExperimentReport, StrategyCell,
};
