//! Synthetic data with known ground truth: parametric ECG records with
//! planted normal and PVC beats, and LF vote matrices drawn from planted
//! accuracies.

mod ecg;
mod votes;

pub use ecg::{
    generate, generate_corpus, write_corpus, CorpusConfig, DriftConfig, PlantedBeat, QrsConfig,
    SynthConfig, SynthRecord, TWaveConfig,
};
pub use votes::{planted_votes, PlantedVotes, PlantedVotesConfig};
