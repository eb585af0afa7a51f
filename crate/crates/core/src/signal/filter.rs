use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// One second-order section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Transposed direct form II state after an infinitely long unit step.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b2 - self.a2 * g;
        let z1 = self.b1 - self.a1 * g + z2;
        [z1, z2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    pub sections: Vec<Biquad>,
    pub order: usize,
    pub cutoff_hz: f64,
    pub sampling_rate_hz: f64,
}

/// Designs a digital Butterworth high-pass filter as a cascade of biquads:
/// analog prototype poles, low-to-high-pass transform and the bilinear
/// transform with the cutoff pre-warped, so the -3 dB point lands exactly
/// on `cutoff_hz`.
pub fn design_butterworth_highpass(
    order: usize,
    cutoff_hz: f64,
    fs_hz: f64,
) -> Result<BiquadCascade> {
    if !matches!(order, 2 | 4 | 6 | 8) {
        return Err(Error::InvalidArgument(format!(
            "filter order must be 2, 4, 6 or 8, got {order}"
        )));
    }
    if !(fs_hz > 0.0) || !(cutoff_hz > 0.0) || cutoff_hz >= fs_hz / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, {}) Hz",
            fs_hz / 2.0
        )));
    }
    // tan(pi fc / fs) is the pre-warped analog cutoff divided by 2 fs.
    let w = (PI * cutoff_hz / fs_hz).tan();
    let sections = (0..order / 2)
        .map(|k| {
            // s^2 + a s + 1 is the k-th conjugate pole pair of the prototype.
            let a = 2.0 * (PI * (2 * k + 1) as f64 / (2 * order) as f64).sin();
            let d0 = 1.0 + a * w + w * w;
            Biquad {
                b0: 1.0 / d0,
                b1: -2.0 / d0,
                b2: 1.0 / d0,
                a1: (2.0 * w * w - 2.0) / d0,
                a2: (1.0 - a * w + w * w) / d0,
            }
        })
        .collect::<Vec<_>>();
    debug_assert!(sections.iter().all(Biquad::is_stable));
    Ok(BiquadCascade {
        sections,
        order,
        cutoff_hz,
        sampling_rate_hz: fs_hz,
    })
}

impl BiquadCascade {
    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    /// |H(e^{j 2 pi f / fs})|.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let omega = 2.0 * PI * freq_hz / self.sampling_rate_hz;
        let (c1, s1) = (omega.cos(), -omega.sin());
        let (c2, s2) = ((2.0 * omega).cos(), -(2.0 * omega).sin());
        self.sections
            .iter()
            .map(|q| {
                let nr = q.b0 + q.b1 * c1 + q.b2 * c2;
                let ni = q.b1 * s1 + q.b2 * s2;
                let dr = 1.0 + q.a1 * c1 + q.a2 * c2;
                let di = q.a1 * s1 + q.a2 * s2;
                ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
            })
            .product()
    }

    /// Edge padding length used by [`filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    /// Runs the cascade once over `x` in place, starting from the steady
    /// state for a constant input equal to `x[0]`.
    fn run(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let mut level = x0;
        for q in &self.sections {
            let g = q.dc_gain();
            let [mut z1, mut z2] = q.step_state().map(|v| v * level);
            level *= g;
            for v in x.iter_mut() {
                let input = *v;
                let y = q.b0 * input + z1;
                z1 = q.b1 * input - q.a1 * y + z2;
                z2 = q.b2 * input - q.a2 * y;
                *v = y;
            }
        }
    }

    fn forward_backward(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let pad = self.pad_len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|k| 2.0 * x[0] - x[k]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|k| 2.0 * x[n - 1] - x[n - 1 - k]));
        self.run(&mut ext);
        ext.reverse();
        self.run(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Zero-phase filtering: the cascade is applied forward then backward over
/// an odd-reflection padded copy, each pass starting from its steady state.
///
/// The result is the average of the forward-first pass and the mirrored
/// backward-first pass, which makes the output exactly equivariant under
/// time reversal (edge transients of the two orders differ slightly).
pub fn filtfilt(filter: &BiquadCascade, x: &[f64]) -> Result<Vec<f64>> {
    let needed = 3 * filter.order;
    if x.len() <= needed.max(filter.pad_len()) {
        return Err(Error::InputTooShort {
            needed: needed.max(filter.pad_len()),
            have: x.len(),
        });
    }
    let forward_first = filter.forward_backward(x);
    let mut reversed: Vec<f64> = x.iter().rev().copied().collect();
    reversed = filter.forward_backward(&reversed);
    reversed.reverse();
    Ok(forward_first
        .iter()
        .zip(&reversed)
        .map(|(a, b)| 0.5 * (a + b))
        .collect())
}
