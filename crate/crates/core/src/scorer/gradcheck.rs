//! Finite-difference validation of the scorer's analytic gradient.

use super::loss::margin_loss;
use super::model::{EmbeddingScorer, EncodedItem, SparseGrad};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub parameters_checked: usize,
    /// Largest analytic gradient component, useful to spot saturated batches.
    pub max_abs_gradient: f64,
}

/// Mean margin loss over `batch`.
pub fn batch_loss(scorer: &EmbeddingScorer, batch: &[EncodedItem], margin: f64) -> Result<f64> {
    let mut total = 0.0;
    for item in batch {
        total += margin_loss(&scorer.score_encoded(item), item.answer_index, margin)?;
    }
    Ok(total / batch.len() as f64)
}

/// Smallest `|margin - S_y + S_i|` over the batch; the hinge is not
/// differentiable where this is 0.
pub fn kink_distance(scorer: &EmbeddingScorer, batch: &[EncodedItem], margin: f64) -> f64 {
    let mut best = f64::INFINITY;
    for item in batch {
        let s = scorer.score_encoded(item);
        let sy = s[item.answer_index];
        for (i, si) in s.iter().enumerate() {
            if i != item.answer_index {
                best = best.min((margin - sy + si).abs());
            }
        }
    }
    best
}

/// Compares every parameter the batch touches against a central difference
/// with step `h`. Relative error is `|a - f| / max(|a|, |f|, 1e-6)`.
pub fn gradient_check(scorer: &EmbeddingScorer, batch: &[EncodedItem], h: f64, margin: f64) -> Result<GradCheck> {
    if batch.is_empty() {
        return Err(Error::Contract("gradient check needs a non-empty batch".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Contract(format!("step must be positive, got {h}")));
    }
    let weight = 1.0 / batch.len() as f64;
    let mut grad = SparseGrad::default();
    for item in batch {
        scorer.accumulate_grad(item, margin, weight, &mut grad)?;
    }

    let mut rows: Vec<u32> = batch
        .iter()
        .flat_map(|item| item.question.iter().chain(item.candidates.iter().flatten()).map(|(id, _)| *id))
        .collect();
    rows.sort_unstable();
    rows.dedup();

    let dim = scorer.config().dim;
    let mut probe = scorer.clone();
    let mut out = GradCheck { max_relative_error: 0.0, parameters_checked: 0, max_abs_gradient: 0.0 };
    for id in rows {
        let analytic_row = grad.rows.iter().find(|(r, _, _)| *r == id);
        for k in 0..=dim {
            let analytic = match analytic_row {
                Some((_, emb, bias)) => {
                    if k == dim {
                        *bias
                    } else {
                        emb[k]
                    }
                }
                None => 0.0,
            };
            let original = *probe.param_mut(id, k);
            *probe.param_mut(id, k) = original + h;
            let plus = batch_loss(&probe, batch, margin)?;
            *probe.param_mut(id, k) = original - h;
            let minus = batch_loss(&probe, batch, margin)?;
            *probe.param_mut(id, k) = original;
            let numeric = (plus - minus) / (2.0 * h);
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            out.max_relative_error = out.max_relative_error.max((analytic - numeric).abs() / denom);
            out.max_abs_gradient = out.max_abs_gradient.max(analytic.abs());
            out.parameters_checked += 1;
        }
    }
    Ok(out)
}
