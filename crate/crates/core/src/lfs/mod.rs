//! Labeling functions: robust per-patient thresholds and the six PVC
//! heuristics that vote on every beat.

mod functions;
mod matrix;
mod mcd;

pub use functions::{apply_lfs, fit_thresholds, LfConfig, ThresholdSet, LF_NAMES};
pub use matrix::{from_csv, to_csv, LfMatrix, Vote, VoteView};
pub use mcd::{auto_threshold, mcd_1d, Direction, RobustStats, Threshold};
