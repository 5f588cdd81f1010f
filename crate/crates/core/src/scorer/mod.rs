//! Candidate scoring: the margin loss, a trainable bag-of-embeddings scorer
//! and the per-epoch training dynamics it records.

pub mod dynamics;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod train;

pub use dynamics::{import_external_dynamics, DynamicsLog, DynamicsRecord};
pub use gradcheck::{batch_loss, gradient_check, kink_distance, GradCheck};
pub use loss::{argmax, confidence, margin_loss, margin_loss_grad, softmax, Prediction, ScoreVector};
pub use model::{EmbeddingScorer, EncodedItem, Init, ScorerConfig, Vocabulary};
pub use train::{initial_scorer, train, train_scorer, vanilla_scores, write_curve_csv, CurvePoint, TrainHyper, Training};

use crate::{MultipleChoice, Result};

/// Anything that assigns one real score per candidate; higher is more plausible.
pub trait Scorer: Send + Sync {
    fn score(&self, item: &dyn MultipleChoice) -> Result<Vec<f64>>;
}
