use serde::{Deserialize, Serialize};

use super::model::{nll_gradient_with, nll_with, FitMeta, LabelModelParams};
use crate::error::{Error, Result};
use crate::lfs::{LfMatrix, Vote, VoteView};
use crate::numeric::{logistic, softplus};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub step_size: f64,
    pub iterations: usize,
    pub l2_strength: f64,
    /// Starting accuracy weight. Positive so the fit settles in the
    /// better-than-random mode rather than its label-flipped twin.
    pub init_acc: f64,
    pub init_lab: f64,
    pub seed: u64,
    /// Scale each LF's gradient by the inverse of its 2x2 block of the
    /// model Fisher information (`B` times the covariance of its two factor
    /// indicators). Without it, rarely voting LFs sit on flat stretches of
    /// the objective and converge far more slowly than frequent ones.
    pub precondition: bool,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            step_size: 0.05,
            iterations: 500,
            l2_strength: 1e-3,
            init_acc: 0.7,
            init_lab: 0.0,
            seed: 0,
            precondition: true,
            exec: Execution::default(),
        }
    }
}

const MAX_HALVINGS: usize = 40;

/// Gradient descent on the mean negative log-likelihood. The step is
/// halved whenever a move would raise the objective, so the recorded
/// trajectory is non-increasing.
pub fn fit(votes: VoteView<'_>, lf_names: &[String], cfg: &FitConfig) -> Result<LabelModelParams> {
    let m = votes.m;
    if lf_names.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} LF names for {} columns",
            lf_names.len(),
            m
        )));
    }
    let b = votes.n_rows();
    if b == 0 {
        return Err(Error::InvalidArgument(
            "no beats to fit the label model on".into(),
        ));
    }
    if !(cfg.step_size > 0.0) || !(cfg.l2_strength >= 0.0) {
        return Err(Error::InvalidArgument(
            "step size must be positive and l2 non-negative".into(),
        ));
    }

    let mut counts = vec![0usize; m];
    for row in votes.rows() {
        for (k, v) in row.iter().enumerate() {
            counts[k] += usize::from(*v != Vote::Abstain);
        }
    }
    let frozen: Vec<bool> = counts.iter().map(|&c| c == 0).collect();
    for (k, f) in frozen.iter().enumerate() {
        if *f {
            log::warn!("LF {} never votes; its weights are frozen", lf_names[k]);
        }
    }

    let scale = 1.0 / b as f64;

    let objective = |p: &LabelModelParams| nll_with(p, votes, cfg.l2_strength, cfg.exec) * scale;

    let mut params = LabelModelParams::new(
        lf_names.to_vec(),
        vec![cfg.init_acc; m],
        vec![cfg.init_lab; m],
    );
    let mut current = objective(&params);
    if !current.is_finite() {
        return Err(Error::Divergence(
            "objective is not finite at the initial point".into(),
        ));
    }
    let mut step = cfg.step_size;
    let mut halvings = 0;
    let mut iterations = 0;
    'outer: for _ in 0..cfg.iterations {
        let grad = nll_gradient_with(&params, votes, cfg.l2_strength, cfg.exec);
        if grad.acc.iter().chain(&grad.lab).any(|g| !g.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite gradient at iteration {iterations}"
            )));
        }
        let direction: Vec<(f64, f64)> = (0..m)
            .map(|k| {
                let (ga, gl) = (grad.acc[k] * scale, grad.lab[k] * scale);
                if cfg.precondition {
                    fisher_solve(
                        params.theta_acc[k],
                        params.theta_lab[k],
                        cfg.l2_strength * scale,
                        ga,
                        gl,
                    )
                } else {
                    (ga, gl)
                }
            })
            .collect();
        let mut tries = 0;
        loop {
            let mut candidate = params.clone();
            for k in (0..m).filter(|&k| !frozen[k]) {
                candidate.theta_acc[k] -= step * direction[k].0;
                candidate.theta_lab[k] -= step * direction[k].1;
            }
            if !candidate.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite weights at iteration {iterations}"
                )));
            }
            let value = objective(&candidate);
            if value.is_finite() && value <= current {
                params = candidate;
                current = value;
                break;
            }
            step *= 0.5;
            halvings += 1;
            tries += 1;
            if tries >= MAX_HALVINGS {
                // no descent direction left at machine precision
                break 'outer;
            }
        }
        iterations += 1;
    }

    params.fit_meta = Some(FitMeta {
        iterations,
        step_size: cfg.step_size,
        l2_strength: cfg.l2_strength,
        final_nll: current / scale,
        seed: cfg.seed,
        step_halvings: halvings,
        frozen,
        n_rows: b,
    });
    Ok(params)
}

/// Solves `(F + ridge I) d = g` for one LF, where `F` is the per-row
/// covariance of `(1{λ = y}, 1{λ ≠ 0})` under the model.
fn fisher_solve(acc: f64, lab: f64, ridge: f64, ga: f64, gl: f64) -> (f64, f64) {
    let log_mass = softplus(lab + softplus(acc));
    let agree = (lab + acc - log_mass).exp();
    let voted = logistic(lab + softplus(acc));
    let f_aa = agree * (1.0 - agree) + ridge;
    let f_ll = voted * (1.0 - voted) + ridge;
    let f_al = agree * (1.0 - voted);
    let det = f_aa * f_ll - f_al * f_al;
    if !(det > 1e-300) {
        return (ga, gl);
    }
    ((f_ll * ga - f_al * gl) / det, (f_aa * gl - f_al * ga) / det)
}

/// One model over the stacked votes of several patients.
pub fn fit_pooled(matrices: &[&LfMatrix], cfg: &FitConfig) -> Result<LabelModelParams> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::InvalidArgument("no LF matrices to fit".into()))?;
    let votes = LfMatrix::stack(matrices)?;
    fit(VoteView::new(&votes, first.m()), &first.lf_names, cfg)
}
