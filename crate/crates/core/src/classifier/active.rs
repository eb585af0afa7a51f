use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::BeatVector;
use super::model::EndModel;
use super::train::{train_from, TrainConfig, TrainingSample, TrainingSet};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveConfig {
    pub seed_size: usize,
    pub query_size: usize,
    pub budget: usize,
    /// Seeds the class-balanced seed set.
    pub seed: u64,
    /// Continue from the previous round's model instead of retraining from
    /// a fresh initialization.
    pub warm_start: bool,
    /// Per-round training; the labeled set is used as revealed, without
    /// oversampling, by default.
    pub train: TrainConfig,
}

impl Default for ActiveConfig {
    fn default() -> Self {
        Self {
            seed_size: 100,
            query_size: 100,
            budget: 4000,
            seed: 0,
            warm_start: false,
            train: TrainConfig {
                oversample: false,
                ..TrainConfig::default()
            },
        }
    }
}

/// Model trained on the first `labeled_count` revealed pool points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlCheckpoint {
    pub labeled_count: usize,
    pub model: EndModel,
    /// Pool indices labeled when this model was trained, in reveal order.
    pub labeled: Vec<usize>,
    /// Pool indices this model selected for the next round; empty for the
    /// final checkpoint.
    pub queried: Vec<usize>,
}

fn seed_set(truth: &[bool], size: usize, seed: u64) -> Result<Vec<usize>> {
    let mut pos: Vec<usize> = (0..truth.len()).filter(|&i| truth[i]).collect();
    let mut neg: Vec<usize> = (0..truth.len()).filter(|&i| !truth[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::ClassAbsent(
            "active learning pool needs both classes".into(),
        ));
    }
    let mut rng = seed::rng(seed::derive(seed, &["active", "seed_set"]));
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let n_pos = (size / 2).min(pos.len());
    let n_neg = (size - n_pos).min(neg.len());
    let n_pos = (size - n_neg).min(pos.len());
    let mut chosen: Vec<usize> = pos[..n_pos].iter().chain(&neg[..n_neg]).copied().collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Pool-based uncertainty sampling. The pool's ground truth acts as the
/// oracle. Each round trains on the labeled points (weight 1), then
/// reveals the `query_size` unlabeled points with the smallest
/// `|p_pos - 0.5|`, ties broken by lower index, until `budget` points are
/// labeled.
pub fn active_learning_run(
    pool: &[BeatVector],
    truth: &[bool],
    config: &ActiveConfig,
) -> Result<Vec<AlCheckpoint>> {
    if pool.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} pool beats for {} labels",
            pool.len(),
            truth.len()
        )));
    }
    if config.seed_size == 0 || config.query_size == 0 || config.budget < config.seed_size {
        return Err(Error::InvalidArgument(
            "need seed_size > 0, query_size > 0 and budget >= seed_size".into(),
        ));
    }
    if pool.len() < config.budget {
        return Err(Error::PoolExhausted(format!(
            "pool of {} beats is smaller than the budget {}",
            pool.len(),
            config.budget
        )));
    }

    let mut labeled = seed_set(truth, config.seed_size, config.seed)?;
    let mut is_labeled = vec![false; pool.len()];
    labeled.iter().for_each(|&i| is_labeled[i] = true);
    let mut checkpoints: Vec<AlCheckpoint> = Vec::new();
    loop {
        let set = TrainingSet {
            samples: labeled
                .iter()
                .map(|&i| TrainingSample {
                    x: pool[i].clone(),
                    target: truth[i],
                    weight: 1.0,
                })
                .collect(),
        };
        let start = if config.warm_start {
            checkpoints.last().map(|c| &c.model)
        } else {
            None
        };
        let (model, _) = train_from(&set, &config.train, start)?;
        let remaining = config.budget - labeled.len();
        let queried = if remaining == 0 {
            Vec::new()
        } else {
            let candidates: Vec<usize> = (0..pool.len()).filter(|&i| !is_labeled[i]).collect();
            let xs: Vec<BeatVector> = candidates.iter().map(|&i| pool[i].clone()).collect();
            let p = model.predict_proba_with(&xs, config.train.exec);
            let mut ranked: Vec<(f64, usize)> =
                p.iter().map(|p| (p - 0.5).abs()).zip(candidates).collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            ranked.truncate(config.query_size.min(remaining));
            ranked.into_iter().map(|(_, i)| i).collect()
        };
        checkpoints.push(AlCheckpoint {
            labeled_count: labeled.len(),
            model,
            labeled: labeled.clone(),
            queried: queried.clone(),
        });
        if queried.is_empty() {
            break;
        }
        log::debug!(
            "active learning: {} labeled, querying {}",
            labeled.len(),
            queried.len()
        );
        for i in queried {
            is_labeled[i] = true;
            labeled.push(i);
        }
    }
    Ok(checkpoints)
}
