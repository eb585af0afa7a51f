use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Low-error operating points, each on the `[0, 1]` scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoints {
    /// Minimum FPR over thresholds reaching TPR ≥ 0.5.
    pub fpr_at_50tpr: f64,
    /// Minimum FNR over thresholds reaching TNR ≥ 0.5.
    pub fnr_at_50tnr: f64,
    /// Maximum TPR over thresholds with FPR ≤ 0.01 (0 if none).
    pub tpr_at_1fpr: f64,
    /// Maximum TNR over thresholds with FNR ≤ 0.01 (0 if none).
    pub tnr_at_1fnr: f64,
}

/// `(tpr, fpr)` for "score ≥ t" at every distinct score t, plus the
/// empty rule above the largest score.
fn sweep(scores: &[f64], truth: &[bool]) -> Vec<(f64, f64)> {
    let n_pos = truth.iter().filter(|&&t| t).count() as f64;
    let n_neg = truth.len() as f64 - n_pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((tp as f64 / n_pos, fp as f64 / n_neg));
    }
    points
}

const RATE_TOL: f64 = 1e-12;

/// Sweeps the decision threshold over all distinct scores (higher score =
/// more PVC-like). The TNR/FNR pair treats OTHER as the detected class by
/// negating the scores.
pub fn roc_operating_points(scores: &[f64], truth: &[bool]) -> Result<OperatingPoints> {
    if scores.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("scores contain NaN".into()));
    }
    let n_pos = truth.iter().filter(|&&t| t).count();
    if n_pos == 0 || n_pos == truth.len() {
        return Err(Error::ClassAbsent(
            "ROC needs both classes in the ground truth".into(),
        ));
    }

    let pos = sweep(scores, truth);
    let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
    let flipped: Vec<bool> = truth.iter().map(|t| !t).collect();
    // on the flipped problem "tpr" is TNR and "fpr" is FNR
    let neg = sweep(&negated, &flipped);

    let min_under = |pts: &[(f64, f64)], floor: f64| {
        pts.iter()
            .filter(|(d, _)| *d >= floor - RATE_TOL)
            .map(|(_, e)| *e)
            .fold(f64::INFINITY, f64::min)
    };
    let max_within = |pts: &[(f64, f64)], cap: f64| {
        pts.iter()
            .filter(|(_, e)| *e <= cap + RATE_TOL)
            .map(|(d, _)| *d)
            .fold(0.0, f64::max)
    };
    Ok(OperatingPoints {
        fpr_at_50tpr: min_under(&pos, 0.5),
        fnr_at_50tnr: min_under(&neg, 0.5),
        tpr_at_1fpr: max_within(&pos, 0.01),
        tnr_at_1fnr: max_within(&neg, 0.01),
    })
}
