use serde::{Deserialize, Serialize};

use super::model::{row_scores, LabelModelParams};
use crate::lfs::{Vote, VoteView};
use crate::numeric::logistic;

/// Posterior probability of the positive class with a uniform prior:
/// `σ(Σ_k θ_acc,k · λ_k)`.
pub fn posterior_row(params: &LabelModelParams, row: &[Vote]) -> f64 {
    posterior_row_shifted(params, row, 0.0)
}

/// Same as [`posterior_row`] with an additive log-odds prior shift.
pub fn posterior_row_shifted(params: &LabelModelParams, row: &[Vote], log_prior_odds: f64) -> f64 {
    let (pos, neg, _) = row_scores(params, row);
    logistic(pos - neg + log_prior_odds)
}

pub fn posterior(params: &LabelModelParams, votes: VoteView<'_>) -> Vec<f64> {
    votes.rows().map(|r| posterior_row(params, r)).collect()
}

/// Unweighted vote: 1 if more LFs say PVC than OTHER, 0 if fewer, 0.5 on
/// ties and all-abstain rows.
pub fn majority_vote(row: &[Vote]) -> f64 {
    let total: i32 = row.iter().map(|v| i32::from(v.value())).sum();
    match total.cmp(&0) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Less => 0.0,
        std::cmp::Ordering::Equal => 0.5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HardLabel {
    Pvc,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbLabel {
    pub patient: String,
    pub beat: usize,
    pub p_pos: f64,
}

impl ProbLabel {
    /// `PVC` strictly above one half.
    pub fn hard(&self) -> HardLabel {
        if self.p_pos > 0.5 {
            HardLabel::Pvc
        } else {
            HardLabel::Other
        }
    }

    pub fn confidence(&self) -> f64 {
        self.p_pos.max(1.0 - self.p_pos)
    }
}

pub fn prob_labels_csv(labels: &[ProbLabel]) -> String {
    let mut out = String::from("patient,beat,p_pos\n");
    for l in labels {
        out.push_str(&format!("{},{},{}\n", l.patient, l.beat, l.p_pos));
    }
    out
}
