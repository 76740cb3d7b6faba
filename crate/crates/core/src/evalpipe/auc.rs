//! Rank-based (Mann-Whitney) area under the ROC curve.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AucError {
    #[error("AUC needs both classes")]
    SingleClass,
    #[error("score {0} is not a number")]
    NaN(usize),
    #[error("{scores} scores but {labels} labels")]
    Length { scores: usize, labels: usize },
    #[error("weight {0} is negative or not finite")]
    BadWeight(usize),
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, AucError> {
    let ones = vec![1.0; scores.len()];
    weighted_auc(scores, labels, &ones)
}

/// AUC where item `i` stands for `weights[i]` identical copies.
pub fn weighted_auc(scores: &[f64], labels: &[bool], weights: &[f64]) -> Result<f64, AucError> {
    if scores.len() != labels.len() || scores.len() != weights.len() {
        return Err(AucError::Length {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(AucError::NaN(i));
    }
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(AucError::BadWeight(i));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (mut pos_total, mut neg_total) = (0.0, 0.0);
    let mut wins = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0.0, 0.0);
        // -0.0 and 0.0 form one tie group
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            let k = order[j];
            if labels[k] {
                pos += weights[k];
            } else {
                neg += weights[k];
            }
            j += 1;
        }
        wins += pos * neg_total + 0.5 * pos * neg;
        pos_total += pos;
        neg_total += neg;
        i = j;
    }
    if pos_total == 0.0 || neg_total == 0.0 {
        return Err(AucError::SingleClass);
    }
    Ok(wins / (pos_total * neg_total))
}
