//! Weakly supervised detection of premature ventricular contractions (PVCs)
//! in single-lead ECG records.
//!
//! The crate covers the whole workflow:
//!
//! * [`ingest`]: WFDB (MIT-BIH layout) headers, format 212/16 signals,
//!   MIT annotation streams, the DS1/DS2 inter-patient split and a plain
//!   CSV fallback format.
//! * [`signal`]: zero-phase Butterworth high-pass filtering, RANSAC
//!   baselines, topological-prominence peak finding, fiducials and beat
//!   segmentation.
//! * [`lfs`]: robust per-patient thresholds (exact 1-D MCD) and the six
//!   PVC labeling functions producing the vote matrix.
//! * [`labelmodel`]: the conditionally independent factor-graph label model
//!   (exact partition function, marginal likelihood, gradient, fitting and
//!   posterior labels).
//! * [`classifier`]: a noise-aware feed-forward end model and an
//!   uncertainty-sampling active-learning baseline.
//! * [`eval`]: confusion counts, ROC operating points, Wilson intervals and
//!   per-patient breakdowns.
//! * [`synth`]: parametric ECG generator with planted ground truth.
//! * [`pipeline`]: the glue used by the CLI and the end-to-end tests.
//!
//! Data-parallel loops go through [`par`]; with the default `parallel`
//! feature they run on rayon, otherwise sequentially. Reductions use fixed
//! chunk boundaries so both paths produce bitwise-identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classifier;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod labelmodel;
pub mod lfs;
pub mod numeric;
pub mod par;
pub mod pipeline;
pub mod seed;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use par::Execution;
