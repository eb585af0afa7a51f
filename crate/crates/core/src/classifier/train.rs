use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::BeatVector;
use super::model::{loss_and_grad_with, EndModel, Gradients, TrainMeta};
use crate::ingest::BeatClass;
use crate::par::Execution;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub x: BeatVector,
    /// `true` for PVC.
    pub target: bool,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub samples: Vec<TrainingSample>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(positives, negatives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.samples.iter().filter(|s| s.target).count();
        (pos, self.samples.len() - pos)
    }
}

/// Where the training targets come from.
#[derive(Debug, Clone, Copy)]
pub enum Supervision<'a> {
    /// Posterior PVC probabilities from the label model.
    Weak(&'a [f64]),
    /// Ground-truth annotations.
    Full(&'a [Option<BeatClass>]),
}

/// Weak: target = PVC iff `p_pos > 0.5`, weight = `max(p, 1 - p)`.
/// Full: target from the annotation, weight 1.
pub fn build_training_set(
    beats: &[BeatVector],
    supervision: Supervision<'_>,
) -> Result<TrainingSet> {
    let n = match supervision {
        Supervision::Weak(p) => p.len(),
        Supervision::Full(t) => t.len(),
    };
    if n != beats.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} beats",
            n,
            beats.len()
        )));
    }
    let samples = match supervision {
        Supervision::Weak(p) => beats
            .iter()
            .zip(p)
            .map(|(x, &p)| {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidArgument(format!(
                        "probability {p} outside [0, 1]"
                    )));
                }
                Ok(TrainingSample {
                    x: x.clone(),
                    target: p > 0.5,
                    weight: p.max(1.0 - p),
                })
            })
            .collect::<Result<Vec<_>>>()?,
        Supervision::Full(truth) => beats
            .iter()
            .zip(truth)
            .enumerate()
            .map(|(i, (x, t))| {
                let t = t.ok_or_else(|| {
                    Error::MissingGroundTruth(format!("beat {i} has no annotation"))
                })?;
                Ok(TrainingSample {
                    x: x.clone(),
                    target: t == BeatClass::Pvc,
                    weight: 1.0,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(TrainingSet { samples })
}

/// Appends PVC rows drawn with replacement until both classes have the
/// same count. A set with at least as many PVC as OTHER rows is returned
/// unchanged.
pub fn oversample_positives(set: &TrainingSet, seed: u64) -> Result<TrainingSet> {
    let positives: Vec<usize> = (0..set.len()).filter(|&i| set.samples[i].target).collect();
    let n_neg = set.len() - positives.len();
    if positives.is_empty() || n_neg == 0 {
        return Err(Error::ClassAbsent(format!(
            "oversampling needs both classes ({} PVC, {} OTHER)",
            positives.len(),
            n_neg
        )));
    }
    let mut out = set.clone();
    let mut rng = seed::rng(seed::derive(seed, &["oversample"]));
    for _ in positives.len()..n_neg {
        let i = positives[rng.random_range(0..positives.len())];
        out.samples.push(set.samples[i].clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Adam learning rate.
    pub step_size: f64,
    pub hidden: usize,
    pub seed: u64,
    pub val_fraction: f64,
    /// Validation FPR cap of the model-selection rule.
    pub max_val_fpr: f64,
    /// Balance the training part (after the validation split) by drawing
    /// extra PVC rows with replacement.
    pub oversample: bool,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            batch_size: 64,
            step_size: 1e-3,
            hidden: 32,
            seed: 0,
            val_fraction: 0.3,
            max_val_fpr: 0.05,
            oversample: true,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean weighted cross-entropy over the training part.
    pub train_loss: f64,
    pub val_tpr: Option<f64>,
    pub val_fpr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub n_train: usize,
    pub n_val: usize,
    pub epochs: Vec<EpochReport>,
    pub selected_epoch: usize,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &mut EndModel, lr: f64) -> Self {
        let shapes: Vec<usize> = model.params_mut().iter().map(|p| p.len()).collect();
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, model: &mut EndModel, grad: &Gradients, scale: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let grads = [&grad.w1, &grad.b1, &grad.w2, &grad.b2];
        for (k, params) in model.params_mut().into_iter().enumerate() {
            for (i, p) in params.iter_mut().enumerate() {
                let g = grads[k][i] * scale;
                self.m[k][i] = Self::BETA1 * self.m[k][i] + (1.0 - Self::BETA1) * g;
                self.v[k][i] = Self::BETA2 * self.v[k][i] + (1.0 - Self::BETA2) * g * g;
                *p -= self.lr * (self.m[k][i] / c1) / ((self.v[k][i] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

/// TPR and FPR of `p > 0.5` against the targets; `None` when a class is
/// missing.
fn rates(
    model: &EndModel,
    samples: &[&TrainingSample],
    exec: Execution,
) -> (Option<f64>, Option<f64>) {
    let xs: Vec<BeatVector> = samples.iter().map(|s| s.x.clone()).collect();
    let p = model.predict_proba_with(&xs, exec);
    let (mut tp, mut fn_, mut fp, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (s, p) in samples.iter().zip(p) {
        match (p > 0.5, s.target) {
            (true, true) => tp += 1,
            (false, true) => fn_ += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);
    (ratio(tp, fn_), ratio(fp, tn))
}

/// Selection key: feasible snapshots (FPR within the cap) rank above all
/// infeasible ones and compare by TPR, then by lower FPR; infeasible ones
/// by balanced accuracy.
fn selection_key(tpr: Option<f64>, fpr: Option<f64>, max_fpr: f64) -> (u8, f64, f64) {
    match (tpr, fpr) {
        (Some(t), Some(f)) if f <= max_fpr => (1, t, -f),
        (Some(t), Some(f)) => (0, 0.5 * (t + 1.0 - f), 0.0),
        (Some(t), None) => (0, t, 0.0),
        (None, Some(f)) => (0, 1.0 - f, 0.0),
        (None, None) => (0, 0.0, 0.0),
    }
}

/// Mini-batch Adam on the summed weighted cross-entropy (each batch's sum
/// divided by its size). A seeded 70/30 split holds out validation data;
/// the kept snapshot maximizes validation TPR subject to FPR ≤
/// `max_val_fpr`, falling back to balanced accuracy when no epoch meets
/// the cap.
pub fn train(set: &TrainingSet, config: &TrainConfig) -> Result<(EndModel, TrainReport)> {
    train_from(set, config, None)
}

pub(crate) fn train_from(
    set: &TrainingSet,
    config: &TrainConfig,
    start: Option<&EndModel>,
) -> Result<(EndModel, TrainReport)> {
    let (pos, neg) = set.class_counts();
    if pos < 2 || neg < 2 {
        return Err(Error::ClassAbsent(format!(
            "training needs at least 2 samples per class ({pos} PVC, {neg} OTHER)"
        )));
    }
    if config.batch_size == 0 || config.hidden == 0 || !(config.step_size > 0.0) {
        return Err(Error::InvalidArgument(
            "batch size, hidden width and step size must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&config.val_fraction) {
        return Err(Error::InvalidArgument(
            "val_fraction must lie in [0, 1)".into(),
        ));
    }
    let dim = set.samples[0].x.len();
    if set.samples.iter().any(|s| s.x.len() != dim) {
        return Err(Error::InvalidArgument(
            "beat vectors differ in length".into(),
        ));
    }

    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut seed::rng(seed::derive(
        config.seed,
        &["train", "split"],
    )));
    let n_val = (set.len() as f64 * config.val_fraction).round() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);
    let val: Vec<&TrainingSample> = val_idx.iter().map(|&i| &set.samples[i]).collect();
    let mut train_idx = train_idx.to_vec();
    if config.oversample {
        let positives: Vec<usize> = train_idx
            .iter()
            .copied()
            .filter(|&i| set.samples[i].target)
            .collect();
        let n_neg = train_idx.len() - positives.len();
        if !positives.is_empty() && positives.len() < n_neg {
            let mut rng = seed::rng(seed::derive(config.seed, &["train", "oversample"]));
            for _ in positives.len()..n_neg {
                train_idx.push(positives[rng.random_range(0..positives.len())]);
            }
        }
    }

    let mut model = match start {
        Some(m) if m.input_dim == dim && m.hidden == config.hidden => m.clone(),
        _ => EndModel::init(dim, config.hidden, config.seed),
    };
    let mut adam = Adam::new(&mut model, config.step_size);
    let mut shuffle_rng = seed::rng(seed::derive(config.seed, &["train", "shuffle"]));
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<((u8, f64, f64), EndModel, usize)> = None;
    let mut batch: Vec<TrainingSample> = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        train_idx.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in train_idx.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| set.samples[i].clone()));
            let (loss, grad) = loss_and_grad_with(&model, &batch, config.exec)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite training loss in epoch {epoch}"
                )));
            }
            epoch_loss += loss;
            adam.step(&mut model, &grad, 1.0 / chunk.len() as f64);
        }
        if !model.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite weights after epoch {epoch}"
            )));
        }
        let (val_tpr, val_fpr) = if val.is_empty() {
            (None, None)
        } else {
            rates(&model, &val, config.exec)
        };
        let key = if val.is_empty() {
            // nothing to select on: keep the latest snapshot
            (0, epoch as f64, 0.0)
        } else {
            selection_key(val_tpr, val_fpr, config.max_val_fpr)
        };
        if best.as_ref().is_none_or(|(k, _, _)| key > *k) {
            best = Some((key, model.clone(), epoch));
        }
        epochs.push(EpochReport {
            epoch,
            train_loss: epoch_loss / train_idx.len().max(1) as f64,
            val_tpr,
            val_fpr,
        });
    }

    let (mut chosen, selected_epoch) = match best {
        Some((_, m, e)) => (m, e),
        None => (model, 0),
    };
    chosen.meta = Some(TrainMeta {
        epochs: config.epochs,
        batch_size: config.batch_size,
        step_size: config.step_size,
        seed: config.seed,
        selected_epoch,
    });
    Ok((
        chosen,
        TrainReport {
            n_train: train_idx.len(),
            n_val,
            epochs,
            selected_epoch,
        },
    ))
}
