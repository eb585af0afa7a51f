use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lfs::Vote;
use crate::seed;
use crate::{Error, Result};

/// Conditionally independent LFs with known accuracy and propensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedVotesConfig {
    pub n_rows: usize,
    /// Probability that a non-abstaining vote equals the true class.
    pub accuracies: Vec<f64>,
    /// Probability that each LF votes at all.
    pub propensities: Vec<f64>,
    pub positive_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedVotes {
    pub votes: Vec<Vote>,
    pub truth: Vec<bool>,
    pub m: usize,
}

pub fn planted_votes(config: &PlantedVotesConfig) -> Result<PlantedVotes> {
    let m = config.accuracies.len();
    if config.propensities.len() != m {
        return Err(Error::InvalidArgument(
            "accuracies and propensities differ in length".into(),
        ));
    }
    let probs = config
        .accuracies
        .iter()
        .chain(&config.propensities)
        .chain(std::iter::once(&config.positive_rate));
    if probs.clone().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument(
            "planted probabilities must lie in [0, 1]".into(),
        ));
    }
    let mut rng = seed::rng(seed::derive(config.seed, &["planted_votes"]));
    let mut votes = Vec::with_capacity(config.n_rows * m);
    let mut truth = Vec::with_capacity(config.n_rows);
    for _ in 0..config.n_rows {
        let y = rng.random_bool(config.positive_rate);
        truth.push(y);
        for k in 0..m {
            if !rng.random_bool(config.propensities[k]) {
                votes.push(Vote::Abstain);
                continue;
            }
            let says_pos = rng.random_bool(config.accuracies[k]) == y;
            votes.push(if says_pos { Vote::Pos } else { Vote::Neg });
        }
    }
    Ok(PlantedVotes { votes, truth, m })
}
