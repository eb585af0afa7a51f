//! Noise-aware end model: a one-hidden-layer network over resampled beat
//! waveforms, trained on confidence-weighted probabilistic labels, and the
//! uncertainty-sampling active-learning baseline.

mod active;
mod features;
mod model;
mod train;

pub use active::{active_learning_run, ActiveConfig, AlCheckpoint};
pub use features::{
    beat_vector, beat_vectors, resample_linear, BeatVector, PatientNorm, DEFAULT_RESAMPLE_LEN,
};
pub use model::{loss_and_grad, loss_and_grad_with, EndModel, Gradients, TrainMeta};
pub use train::{
    build_training_set, oversample_positives, train, EpochReport, Supervision, TrainConfig,
    TrainReport, TrainingSample, TrainingSet,
};
