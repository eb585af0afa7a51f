use serde::{Deserialize, Serialize};

use crate::lfs::mcd_1d;
use crate::numeric::median;
use crate::signal::{Baseline, BeatSegment, Fiducials, Polarity};
use crate::{Error, Result};

pub const DEFAULT_RESAMPLE_LEN: usize = 128;

/// Classifier input: `L` resampled waveform values followed by the
/// normalized pre-RR interval and the QRS polarity (±1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatVector {
    pub values: Vec<f64>,
}

impl BeatVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-patient scales used to make beat vectors comparable across
/// patients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatientNorm {
    pub rr_mean_ms: f64,
    pub r_height_mv: f64,
}

fn robust_center(values: &[f64]) -> Option<f64> {
    if values.len() >= 4 {
        mcd_1d(values, 0.5).ok().map(|s| s.mean)
    } else {
        median(values)
    }
}

impl PatientNorm {
    /// Robust (MCD) means of the pre-RR intervals and R heights.
    pub fn fit(fiducials: &[Fiducials]) -> Result<Self> {
        let rr: Vec<f64> = fiducials.iter().filter_map(|f| f.pre_rr_ms).collect();
        let heights: Vec<f64> = fiducials
            .iter()
            .map(|f| f.r.height_above_baseline)
            .collect();
        let rr_mean_ms = robust_center(&rr).filter(|v| *v > 0.0);
        let r_height_mv = robust_center(&heights).filter(|v| *v > 0.0);
        match (rr_mean_ms, r_height_mv) {
            (Some(rr_mean_ms), Some(r_height_mv)) => Ok(Self {
                rr_mean_ms,
                r_height_mv,
            }),
            _ => Err(Error::InvalidArgument(
                "cannot normalize a patient without positive RR intervals and R heights".into(),
            )),
        }
    }
}

/// Linear interpolation of `x` onto `len` evenly spaced points spanning
/// its first to last sample.
pub fn resample_linear(x: &[f64], len: usize) -> Vec<f64> {
    match (x.len(), len) {
        (_, 0) => Vec::new(),
        (0, _) => vec![0.0; len],
        (1, _) => vec![x[0]; len],
        (_, 1) => vec![x[0]],
        (n, _) => {
            let scale = (n - 1) as f64 / (len - 1) as f64;
            (0..len)
                .map(|j| {
                    let pos = j as f64 * scale;
                    let i = (pos.floor() as usize).min(n - 2);
                    let frac = pos - i as f64;
                    x[i] + frac * (x[i + 1] - x[i])
                })
                .collect()
        }
    }
}

/// Baseline-relative waveform in units of the patient's R height,
/// resampled to `len`, plus `pre_rr / rr_mean` and the QRS polarity.
pub fn beat_vector(
    segment: &BeatSegment,
    fiducials: &Fiducials,
    baseline: &Baseline,
    norm: &PatientNorm,
    len: usize,
) -> BeatVector {
    let centered: Vec<f64> = segment
        .waveform
        .iter()
        .enumerate()
        .map(|(i, v)| (v - baseline.at(segment.start + i)) / norm.r_height_mv)
        .collect();
    let mut values = resample_linear(&centered, len);
    values.push(fiducials.pre_rr_ms.unwrap_or(norm.rr_mean_ms) / norm.rr_mean_ms);
    values.push(match fiducials.qrs_polarity {
        Polarity::Up => 1.0,
        Polarity::Down => -1.0,
    });
    BeatVector { values }
}

/// Beat vectors of one record, normalized by its own fiducials.
pub fn beat_vectors(
    segments: &[&BeatSegment],
    fiducials: &[Fiducials],
    baseline: &Baseline,
    len: usize,
) -> Result<Vec<BeatVector>> {
    if segments.len() != fiducials.len() {
        return Err(Error::InvalidArgument(format!(
            "{} segments for {} fiducials",
            segments.len(),
            fiducials.len()
        )));
    }
    let norm = PatientNorm::fit(fiducials)?;
    Ok(segments
        .iter()
        .zip(fiducials)
        .map(|(s, f)| beat_vector(s, f, baseline, &norm, len))
        .collect())
}
