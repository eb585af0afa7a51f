use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One beat: the samples between the midpoints to its neighbouring R waves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatSegment {
    pub patient: String,
    /// Position of this beat's R wave in the R-location list.
    pub beat_index: usize,
    pub start: usize,
    pub end: usize,
    pub r_index: usize,
    pub waveform: Vec<f64>,
}

fn midpoint(a: usize, b: usize) -> usize {
    // rounds up, so an R wave one sample after its neighbour still lies
    // inside its own segment
    (a + b).div_ceil(2)
}

/// Segments `x` into beats `[mid(r[b-1], r[b]), mid(r[b], r[b+1]))`. The
/// first and last R locations only bound their neighbours, so `n` R
/// locations give `n - 2` contiguous beats.
pub fn segment_beats(patient: &str, x: &[f64], r_indices: &[usize]) -> Result<Vec<BeatSegment>> {
    if r_indices.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "segmentation needs at least 3 R locations, got {}",
            r_indices.len()
        )));
    }
    if r_indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "R locations not strictly increasing".into(),
        ));
    }
    if *r_indices.last().unwrap() >= x.len() {
        return Err(Error::InvalidArgument(
            "R location beyond the signal".into(),
        ));
    }
    Ok(r_indices
        .windows(3)
        .enumerate()
        .map(|(i, w)| {
            let start = midpoint(w[0], w[1]);
            let end = midpoint(w[1], w[2]);
            BeatSegment {
                patient: patient.to_string(),
                beat_index: i + 1,
                start,
                end,
                r_index: w[1],
                waveform: x[start..end].to_vec(),
            }
        })
        .collect())
}
