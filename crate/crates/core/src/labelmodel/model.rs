use serde::{Deserialize, Serialize};

use crate::lfs::{Vote, VoteView};
use crate::numeric::{log_add_exp, logistic, softplus, KahanSum};
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub iterations: usize,
    pub step_size: f64,
    pub l2_strength: f64,
    pub final_nll: f64,
    pub seed: u64,
    /// Times the step was halved after an increase of the objective.
    pub step_halvings: usize,
    /// LFs that never voted; their weights stay at the initial values.
    pub frozen: Vec<bool>,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModelParams {
    pub lf_names: Vec<String>,
    pub theta_acc: Vec<f64>,
    pub theta_lab: Vec<f64>,
    pub fit_meta: Option<FitMeta>,
}

impl LabelModelParams {
    pub fn new(lf_names: Vec<String>, theta_acc: Vec<f64>, theta_lab: Vec<f64>) -> Self {
        assert_eq!(
            theta_acc.len(),
            theta_lab.len(),
            "weight vectors differ in length"
        );
        Self {
            lf_names,
            theta_acc,
            theta_lab,
            fit_meta: None,
        }
    }

    /// Unnamed parameters, handy for tests and synthetic studies.
    pub fn from_weights(theta_acc: Vec<f64>, theta_lab: Vec<f64>) -> Self {
        let names = (1..=theta_acc.len()).map(|k| format!("lf{k}")).collect();
        Self::new(names, theta_acc, theta_lab)
    }

    pub fn m(&self) -> usize {
        self.theta_acc.len()
    }

    pub fn is_finite(&self) -> bool {
        self.theta_acc
            .iter()
            .chain(&self.theta_lab)
            .all(|v| v.is_finite())
    }

    pub(crate) fn squared_norm(&self) -> f64 {
        self.theta_acc
            .iter()
            .chain(&self.theta_lab)
            .map(|v| v * v)
            .collect::<KahanSum>()
            .value()
    }
}

/// Gradient with respect to `(theta_acc, theta_lab)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub acc: Vec<f64>,
    pub lab: Vec<f64>,
}

/// `log(1 + e^lab (1 + e^acc))`: log of one LF's factor summed over its
/// three possible votes.
fn lf_log_mass(acc: f64, lab: f64) -> f64 {
    softplus(lab + softplus(acc))
}

/// Log partition function of a single beat:
/// `log Z = log 2 + Σ_k log(1 + e^{lab_k}(1 + e^{acc_k}))`.
pub fn log_partition(params: &LabelModelParams) -> f64 {
    std::f64::consts::LN_2
        + params
            .theta_acc
            .iter()
            .zip(&params.theta_lab)
            .map(|(&a, &l)| lf_log_mass(a, l))
            .collect::<KahanSum>()
            .value()
}

/// Sums of accuracy weights agreeing with `+1` and `-1`, and the
/// propensity weight of the voting LFs.
pub(crate) fn row_scores(params: &LabelModelParams, row: &[Vote]) -> (f64, f64, f64) {
    let (mut pos, mut neg, mut lab) = (0.0, 0.0, 0.0);
    for ((v, a), l) in row.iter().zip(&params.theta_acc).zip(&params.theta_lab) {
        match v {
            Vote::Pos => {
                pos += a;
                lab += l;
            }
            Vote::Neg => {
                neg += a;
                lab += l;
            }
            Vote::Abstain => {}
        }
    }
    (pos, neg, lab)
}

/// Rows per reduction chunk. Fixed so sequential and parallel runs
/// combine identical partial sums in identical order.
const CHUNK_ROWS: usize = 4096;

/// Negative log marginal likelihood of the observed votes,
/// `-Σ_i log Σ_y exp(score_i(y)) + B log Z + (l2/2) ‖θ‖²`.
pub fn nll(params: &LabelModelParams, votes: VoteView<'_>, l2_strength: f64) -> f64 {
    nll_with(params, votes, l2_strength, Execution::default())
}

pub fn nll_with(
    params: &LabelModelParams,
    votes: VoteView<'_>,
    l2_strength: f64,
    exec: Execution,
) -> f64 {
    assert_eq!(votes.m, params.m(), "LF count mismatch");
    let partials = par::map_chunks(exec, votes.n_rows(), CHUNK_ROWS, |range| {
        let mut s = KahanSum::new();
        for row in votes.slice(range.start, range.end).rows() {
            let (pos, neg, lab) = row_scores(params, row);
            s.add(lab + log_add_exp(pos, neg));
        }
        s.value()
    });
    let log_marginal: KahanSum = partials.into_iter().collect();
    let b = votes.n_rows() as f64;
    -log_marginal.value() + b * log_partition(params) + 0.5 * l2_strength * params.squared_norm()
}

pub fn nll_gradient(params: &LabelModelParams, votes: VoteView<'_>, l2_strength: f64) -> Gradient {
    nll_gradient_with(params, votes, l2_strength, Execution::default())
}

/// Analytic gradient of [`nll`]: minus the posterior-expected factor
/// counts, plus `B` times the model-expected counts, plus the L2 term.
pub fn nll_gradient_with(
    params: &LabelModelParams,
    votes: VoteView<'_>,
    l2_strength: f64,
    exec: Execution,
) -> Gradient {
    let m = params.m();
    assert_eq!(votes.m, m, "LF count mismatch");
    // observed[k] = Σ_i E[1{λ_ik = y} | λ_i], voted[k] = Σ_i 1{λ_ik ≠ 0}
    let partials = par::map_chunks(exec, votes.n_rows(), CHUNK_ROWS, |range| {
        let mut observed = vec![KahanSum::new(); m];
        let mut voted = vec![0usize; m];
        for row in votes.slice(range.start, range.end).rows() {
            let (pos, neg, _) = row_scores(params, row);
            let p_pos = logistic(pos - neg);
            for (k, v) in row.iter().enumerate() {
                match v {
                    Vote::Pos => {
                        observed[k].add(p_pos);
                        voted[k] += 1;
                    }
                    Vote::Neg => {
                        observed[k].add(1.0 - p_pos);
                        voted[k] += 1;
                    }
                    Vote::Abstain => {}
                }
            }
        }
        (
            observed.iter().map(KahanSum::value).collect::<Vec<_>>(),
            voted,
        )
    });
    let mut observed = vec![KahanSum::new(); m];
    let mut voted = vec![0usize; m];
    for (obs, vot) in partials {
        for k in 0..m {
            observed[k].add(obs[k]);
            voted[k] += vot[k];
        }
    }

    let b = votes.n_rows() as f64;
    let mut acc = Vec::with_capacity(m);
    let mut lab = Vec::with_capacity(m);
    for k in 0..m {
        let (a, l) = (params.theta_acc[k], params.theta_lab[k]);
        let t = l + softplus(a);
        let log_mass = softplus(t);
        let expected_acc = (l + a - log_mass).exp();
        let expected_lab = logistic(t);
        acc.push(-observed[k].value() + b * expected_acc + l2_strength * a);
        lab.push(-(voted[k] as f64) + b * expected_lab + l2_strength * l);
    }
    Gradient { acc, lab }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(acc: &[f64], lab: &[f64]) -> LabelModelParams {
        LabelModelParams::from_weights(acc.to_vec(), lab.to_vec())
    }

    #[test]
    fn uniform_partition() {
        assert!((log_partition(&params(&[0.0; 6], &[0.0; 6])) - 1458f64.ln()).abs() < 1e-12);
        assert!((log_partition(&params(&[0.0], &[0.0])) - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn abstain_row_contribution() {
        let p = params(&[0.0; 6], &[0.0; 6]);
        let row = [Vote::Abstain; 6];
        let v = nll(&p, VoteView::new(&row, 6), 0.0);
        assert!((v - (1458f64.ln() - 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn single_vote_contribution() {
        let w = 0.8;
        let p = params(&[w], &[0.0]);
        let row = [Vote::Pos];
        let v = nll(&p, VoteView::new(&row, 1), 0.0);
        let expected = log_partition(&p) - (w.exp() + 1.0).ln();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use Vote::*;
        let p = params(&[0.4, -0.3, 1.1], &[0.2, -0.5, 0.0]);
        let votes = [
            Pos, Neg, Abstain, Neg, Abstain, Pos, Abstain, Abstain, Abstain, Pos, Pos, Pos,
        ];
        let view = VoteView::new(&votes, 3);
        let g = nll_gradient(&p, view, 0.1);
        let h = 1e-6;
        for k in 0..3 {
            for which in 0..2 {
                let bump = |d: f64| {
                    let mut q = p.clone();
                    if which == 0 {
                        q.theta_acc[k] += d
                    } else {
                        q.theta_lab[k] += d
                    }
                    nll(&q, view, 0.1)
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                let an = if which == 0 { g.acc[k] } else { g.lab[k] };
                assert!((fd - an).abs() < 1e-6, "k={k} which={which}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn balanced_votes_at_model_propensity_are_stationary() {
        use Vote::*;
        // at θ = 0 each LF votes with probability 2/3, so a balanced matrix
        // with that coverage zeroes the accuracy gradient
        let p = params(&[0.0; 2], &[0.0; 2]);
        let votes = [Pos, Neg, Neg, Abstain, Abstain, Pos];
        let g = nll_gradient(&p, VoteView::new(&votes, 2), 0.0);
        assert!(g.acc.iter().all(|v| v.abs() < 1e-12), "{:?}", g.acc);
        assert!(g.lab.iter().all(|v| v.abs() < 1e-12), "{:?}", g.lab);
    }

    #[test]
    fn all_abstain_pushes_propensity_down() {
        let p = params(&[0.2, -0.1], &[0.3, 0.0]);
        let votes = [Vote::Abstain; 8];
        let g = nll_gradient(&p, VoteView::new(&votes, 2), 0.0);
        // positive gradient: descent lowers theta_lab
        assert!(g.lab.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn l2_term() {
        let p = params(&[1.0], &[2.0]);
        let row = [Vote::Abstain];
        let a = nll(&p, VoteView::new(&row, 1), 0.0);
        let b = nll(&p, VoteView::new(&row, 1), 0.5);
        assert!((b - a - 0.25 * 5.0).abs() < 1e-12);
    }
}
