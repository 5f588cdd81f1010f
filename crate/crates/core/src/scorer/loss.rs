//! Margin loss and softmax confidence over candidate scores.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scores for the candidates of one question; higher is more plausible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub question_id: String,
    pub scores: Vec<f64>,
    pub answer_index: usize,
}

impl ScoreVector {
    pub fn new(question_id: impl Into<String>, scores: Vec<f64>, answer_index: usize) -> Self {
        Self { question_id: question_id.into(), scores, answer_index }
    }

    pub fn margin_loss(&self, margin: f64) -> Result<f64> {
        margin_loss(&self.scores, self.answer_index, margin)
    }

    pub fn confidence(&self) -> f64 {
        confidence(&self.scores, self.answer_index)
    }

    pub fn prediction(&self) -> Prediction {
        argmax(&self.scores)
    }
}

fn check(scores: &[f64], answer: usize) -> Result<()> {
    if scores.len() < 2 {
        return Err(Error::Contract(format!("margin loss needs at least 2 candidates, got {}", scores.len())));
    }
    if answer >= scores.len() {
        return Err(Error::Contract(format!("answer index {answer} out of range for {} candidates", scores.len())));
    }
    Ok(())
}

/// `(1/n) * sum over i != y of max(0, margin - s_y + s_i)`.
pub fn margin_loss(scores: &[f64], answer: usize, margin: f64) -> Result<f64> {
    check(scores, answer)?;
    let correct = scores[answer];
    let total: f64 = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != answer)
        .map(|(_, s)| (margin - correct + s).max(0.0))
        .sum();
    Ok(total / scores.len() as f64)
}

/// Derivative of [`margin_loss`] with respect to each score. The subgradient
/// at a hinge kink (argument exactly 0) is taken as 0.
pub fn margin_loss_grad(scores: &[f64], answer: usize, margin: f64) -> Result<Vec<f64>> {
    check(scores, answer)?;
    let n = scores.len() as f64;
    let correct = scores[answer];
    let mut grad = vec![0.0; scores.len()];
    for (i, s) in scores.iter().enumerate() {
        if i != answer && margin - correct + s > 0.0 {
            grad[i] += 1.0 / n;
            grad[answer] -= 1.0 / n;
        }
    }
    Ok(grad)
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax probability of the candidate at `answer`.
pub fn confidence(scores: &[f64], answer: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    (scores[answer] - max).exp() / sum
}

/// Highest-scoring candidate, lowest index on ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub index: usize,
    /// More than one candidate shares the top score.
    pub tied: bool,
}

pub fn argmax(scores: &[f64]) -> Prediction {
    let mut best = 0;
    let mut tied = false;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
            tied = false;
        } else if *s == scores[best] {
            tied = true;
        }
    }
    Prediction { index: best, tied }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_losses() {
        // (1/2) * max(0, 1 - 0.9 + 0.4)
        assert!((margin_loss(&[0.9, 0.4], 0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(margin_loss(&[0.0, 0.0], 0, 1.0).unwrap(), 0.5);
        assert_eq!(margin_loss(&[5.0, 1.0, 3.9], 0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn loss_contract_errors() {
        assert!(matches!(margin_loss(&[1.0], 0, 1.0), Err(Error::Contract(_))));
        assert!(matches!(margin_loss(&[1.0, 2.0], 2, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn gradient_signs() {
        let g = margin_loss_grad(&[0.0, 0.5, -3.0], 0, 1.0).unwrap();
        assert_eq!(g, vec![-1.0 / 3.0, 1.0 / 3.0, 0.0]);
        // exactly at the kink
        let g = margin_loss_grad(&[1.0, 0.0], 0, 1.0).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn confidence_values() {
        assert_eq!(confidence(&[0.3; 4], 2), 0.25);
        assert_eq!(confidence(&[1.0, 1.0], 0), 0.5);
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((confidence(&[2.0, 0.0], 0) - expected).abs() < 1e-15);
        assert!((expected - 0.8808).abs() < 1e-4);
        // large scores do not overflow
        assert!((confidence(&[1000.0, 1000.0], 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn argmax_ties_take_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Prediction { index: 1, tied: true });
        assert_eq!(argmax(&[2.0, 1.0]), Prediction { index: 0, tied: false });
        assert_eq!(argmax(&[0.0, 0.0, 0.0]), Prediction { index: 0, tied: true });
        assert_eq!(argmax(&[3.0, 3.0, 4.0]), Prediction { index: 2, tied: false });
    }
}
