use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Polarity {
    Up,
    Down,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Up => 1.0,
            Polarity::Down => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub prominence: f64,
    pub height_above_baseline: f64,
    pub width_ms: f64,
    pub polarity: Polarity,
}

/// Topological prominence of the sample at `peak`, with the indices of the
/// lowest points on each side (searched until strictly higher terrain or
/// the sequence edge). Returns `(prominence, left_base, right_base)`.
pub fn peak_prominence(x: &[f64], peak: usize) -> (f64, usize, usize) {
    let h = x[peak];
    let mut left_min = h;
    let mut left_base = peak;
    let mut i = peak;
    loop {
        if x[i] > h {
            break;
        }
        if x[i] < left_min {
            left_min = x[i];
            left_base = i;
        }
        if i == 0 {
            break;
        }
        i -= 1;
    }
    let mut right_min = h;
    let mut right_base = peak;
    for (j, &v) in x.iter().enumerate().skip(peak) {
        if v > h {
            break;
        }
        if v < right_min {
            right_min = v;
            right_base = j;
        }
    }
    (h - left_min.max(right_min), left_base, right_base)
}

/// Width in samples of the peak at `peak` where the signal crosses
/// `x[peak] - rel_height * prominence`, searching no further than the bases.
/// Crossings are linearly interpolated.
pub fn peak_width(
    x: &[f64],
    peak: usize,
    prominence: f64,
    left_base: usize,
    right_base: usize,
    rel_height: f64,
) -> f64 {
    let level = x[peak] - prominence * rel_height;
    let mut i = peak;
    while left_base < i && level < x[i] {
        i -= 1;
    }
    let mut left_ip = i as f64;
    if x[i] < level {
        left_ip += (level - x[i]) / (x[i + 1] - x[i]);
    }
    let mut j = peak;
    while j < right_base && level < x[j] {
        j += 1;
    }
    let mut right_ip = j as f64;
    if x[j] < level {
        right_ip -= (level - x[j]) / (x[j - 1] - x[j]);
    }
    right_ip - left_ip
}

/// Indices of local maxima. A flat top counts once, at its middle sample
/// (rounded down). Edge samples are never maxima.
pub(crate) fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let mut i = 1;
    while i < n - 1 {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead < n - 1 && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                out.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Local maxima of `x` with prominence at least `min_prominence`, thinned
/// so no two kept peaks are closer than `min_distance` samples (the higher
/// peak is kept; equal heights keep the lower index). Widths are measured
/// at half prominence and converted to milliseconds with `fs_hz`.
///
/// `height_above_baseline` is the raw sample value, so callers pass a
/// baseline-subtracted signal.
pub fn find_peaks(x: &[f64], min_prominence: f64, min_distance: usize, fs_hz: f64) -> Vec<Peak> {
    let min_distance = min_distance.max(1);
    let mut candidates: Vec<(usize, f64, usize, usize)> = local_maxima(x)
        .into_iter()
        .filter_map(|i| {
            let (prom, lb, rb) = peak_prominence(x, i);
            (prom >= min_prominence && prom > 0.0).then_some((i, prom, lb, rb))
        })
        .collect();

    let mut by_priority: Vec<usize> = (0..candidates.len()).collect();
    by_priority.sort_by(|&a, &b| {
        x[candidates[b].0]
            .total_cmp(&x[candidates[a].0])
            .then(candidates[a].0.cmp(&candidates[b].0))
    });
    let mut keep = vec![false; candidates.len()];
    let mut kept_idx: Vec<usize> = Vec::new();
    for c in by_priority {
        let idx = candidates[c].0;
        if kept_idx.iter().all(|&k| k.abs_diff(idx) >= min_distance) {
            keep[c] = true;
            kept_idx.push(idx);
        }
    }
    let mut i = 0;
    candidates.retain(|_| {
        i += 1;
        keep[i - 1]
    });

    candidates
        .into_iter()
        .map(|(index, prominence, lb, rb)| Peak {
            index,
            prominence,
            height_above_baseline: x[index],
            width_ms: peak_width(x, index, prominence, lb, rb, 0.5) / fs_hz * 1000.0,
            polarity: Polarity::Up,
        })
        .collect()
}
