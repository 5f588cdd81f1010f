//! Turn commonsense knowledge-graph statements into synthetic multiple-choice
//! QA pools, pick adaptation subsets with random, knowledge-dimension and
//! training-dynamics sampling, and break model accuracy down by task
//! properties.
//!
//! Pipeline, bottom up:
//!
//! - [`kg`]: edge-file ingestion and the 13 commonsense dimensions
//! - [`synth`]: verbalization and distractor sampling into a [`synth::QuestionPool`]
//! - [`scorer`]: the margin loss, a small trainable scorer and its training dynamics
//! - [`sampler`]: the seven subset-selection strategies
//! - [`analytics`]: answer similarity / length / vocabulary overlap and quartile reports
//! - [`eval`]: benchmark loading, accuracy, baselines and experiment sweeps

pub mod analytics;
pub mod error;
pub mod eval;
pub mod kg;
pub mod sampler;
pub mod scorer;
pub mod synth;
pub mod text;
pub mod toy;

mod rng;

pub use error::{Error, Result, SkipCause};

/// Read-only view of one multiple-choice item, shared by synthetic questions
/// and benchmark records.
pub trait MultipleChoice {
    fn id(&self) -> &str;
    fn question(&self) -> &str;
    fn candidates(&self) -> &[String];
    fn answer_index(&self) -> usize;
}
