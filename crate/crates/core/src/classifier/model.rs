use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::numeric::KahanSum;
use crate::par::{self, Execution};
use crate::seed;
use crate::{Error, Result};

use super::features::BeatVector;
use super::train::TrainingSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub seed: u64,
    /// Epoch (1-based) whose snapshot was kept; 0 for an untrained model.
    pub selected_epoch: usize,
}

/// `softmax(W2 relu(W1 x + b1) + b2)`, weights stored row-major. Output
/// index 1 is the PVC class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndModel {
    pub input_dim: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub meta: Option<TrainMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros(d: usize, h: usize) -> Self {
        Self {
            w1: vec![0.0; h * d],
            b1: vec![0.0; h],
            w2: vec![0.0; 2 * h],
            b2: vec![0.0; 2],
        }
    }

    fn add(&mut self, other: &Gradients) {
        for (a, b) in [
            (&mut self.w1, &other.w1),
            (&mut self.b1, &other.b1),
            (&mut self.w2, &other.w2),
            (&mut self.b2, &other.b2),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }
}

impl EndModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        assert!(hidden >= 1, "hidden width must be positive");
        Self {
            input_dim,
            hidden,
            w1: vec![0.0; hidden * input_dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; 2 * hidden],
            b2: vec![0.0; 2],
            meta: None,
        }
    }

    /// He-normal first layer, Glorot-normal output layer, zero biases.
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut m = Self::zeros(input_dim, hidden);
        let mut rng = seed::rng(seed::derive(seed, &["end_model", "init"]));
        let n1 = Normal::new(0.0, (2.0 / input_dim as f64).sqrt()).expect("positive std");
        let n2 = Normal::new(0.0, (2.0 / (hidden + 2) as f64).sqrt()).expect("positive std");
        m.w1.iter_mut().for_each(|w| *w = n1.sample(&mut rng));
        m.w2.iter_mut().for_each(|w| *w = n2.sample(&mut rng));
        m
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_finite(&self) -> bool {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .all(|v| v.is_finite())
    }

    pub(crate) fn params_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        let d = self.input_dim;
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * d..(j + 1) * d];
                self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn logits(&self, hidden: &[f64]) -> [f64; 2] {
        let h = self.hidden;
        let mut out = [self.b2[0], self.b2[1]];
        for (c, o) in out.iter_mut().enumerate() {
            *o += self.w2[c * h..(c + 1) * h]
                .iter()
                .zip(hidden)
                .map(|(w, a)| w * a)
                .sum::<f64>();
        }
        out
    }

    /// Probability of the PVC class.
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.input_dim, "input dimension mismatch");
        let a: Vec<f64> = self.hidden_pre(x).into_iter().map(|z| z.max(0.0)).collect();
        let [l0, l1] = self.logits(&a);
        crate::numeric::logistic(l1 - l0)
    }

    pub fn predict_proba(&self, beats: &[BeatVector]) -> Vec<f64> {
        self.predict_proba_with(beats, Execution::default())
    }

    pub fn predict_proba_with(&self, beats: &[BeatVector], exec: Execution) -> Vec<f64> {
        par::map(exec, beats, |b| self.predict_one(&b.values))
    }

    fn sample_loss_grad(&self, s: &TrainingSample, g: &mut Gradients) -> f64 {
        let (d, h) = (self.input_dim, self.hidden);
        let x = &s.x.values;
        let z1 = self.hidden_pre(x);
        let a: Vec<f64> = z1.iter().map(|z| z.max(0.0)).collect();
        let [l0, l1] = self.logits(&a);
        let m = l0.max(l1);
        let lse = m + ((l0 - m).exp() + (l1 - m).exp()).ln();
        let target = usize::from(s.target);
        let loss = s.weight * (lse - if s.target { l1 } else { l0 });
        let p = [(l0 - lse).exp(), (l1 - lse).exp()];
        let dz2 = [
            s.weight * (p[0] - f64::from(u8::from(target == 0))),
            s.weight * (p[1] - f64::from(u8::from(target == 1))),
        ];
        for c in 0..2 {
            g.b2[c] += dz2[c];
            for j in 0..h {
                g.w2[c * h + j] += dz2[c] * a[j];
            }
        }
        for j in 0..h {
            if z1[j] <= 0.0 {
                continue;
            }
            let dz1 = dz2[0] * self.w2[j] + dz2[1] * self.w2[h + j];
            g.b1[j] += dz1;
            let row = &mut g.w1[j * d..(j + 1) * d];
            row.iter_mut().zip(x).for_each(|(gw, v)| *gw += dz1 * v);
        }
        loss
    }
}

/// Samples per gradient reduction chunk.
const CHUNK: usize = 32;

/// Summed weighted cross-entropy `Σ w_i CE(softmax(f(x_i)), t_i)` and its
/// gradient.
pub fn loss_and_grad(model: &EndModel, samples: &[TrainingSample]) -> Result<(f64, Gradients)> {
    loss_and_grad_with(model, samples, Execution::Sequential)
}

pub fn loss_and_grad_with(
    model: &EndModel,
    samples: &[TrainingSample],
    exec: Execution,
) -> Result<(f64, Gradients)> {
    if let Some(s) = samples.iter().find(|s| s.x.len() != model.input_dim) {
        return Err(Error::InvalidArgument(format!(
            "sample of length {} for a model expecting {}",
            s.x.len(),
            model.input_dim
        )));
    }
    let partials = par::map_chunks(exec, samples.len(), CHUNK, |range| {
        let mut g = Gradients::zeros(model.input_dim, model.hidden);
        let mut loss = KahanSum::new();
        for s in &samples[range] {
            loss.add(model.sample_loss_grad(s, &mut g));
        }
        (loss.value(), g)
    });
    let mut total = KahanSum::new();
    let mut grad = Gradients::zeros(model.input_dim, model.hidden);
    for (l, g) in &partials {
        total.add(*l);
        grad.add(g);
    }
    Ok((total.value(), grad))
}
