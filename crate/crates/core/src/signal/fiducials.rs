use serde::{Deserialize, Serialize};

use super::baseline::Baseline;
use super::peaks::{find_peaks, peak_prominence, peak_width, Peak, Polarity};
use crate::{Error, Result};

/// Search windows, in milliseconds relative to the R wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiducialConfig {
    /// Half-width of the window around the approximate R location.
    pub r_search_ms: f64,
    /// Half-width of the window used for R prominence and width.
    pub qrs_window_ms: f64,
    pub t_start_ms: f64,
    pub t_end_ms: f64,
    /// T waves less prominent than this are reported as absent.
    pub t_min_prominence_mv: f64,
}

impl Default for FiducialConfig {
    fn default() -> Self {
        Self {
            r_search_ms: 50.0,
            qrs_window_ms: 150.0,
            t_start_ms: 80.0,
            t_end_ms: 400.0,
            t_min_prominence_mv: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fiducials {
    pub r: Peak,
    pub t: Option<Peak>,
    /// Time since the previous R wave; `None` for the first beat.
    pub pre_rr_ms: Option<f64>,
    pub qrs_polarity: Polarity,
    pub t_polarity: Option<Polarity>,
    /// Largest positive and negative excursions from the baseline inside
    /// the R search window.
    pub up_deflection_mv: f64,
    pub down_deflection_mv: f64,
    /// A search window ran past the record bounds; such beats are excluded
    /// downstream.
    pub partial: bool,
}

fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0).floor() as usize
}

/// Refines each approximate R location and measures the beat's R and T
/// waves against `baseline`.
///
/// The R wave is the extremum of `|x - baseline|` within `±r_search_ms`;
/// its sign gives the QRS polarity (ties go to UP). Prominence and width
/// (at half prominence) are measured on the polarity-oriented signal within
/// `±qrs_window_ms`. The T wave is the most prominent peak of either
/// polarity in `(r + t_start_ms, r + t_end_ms]`.
pub fn locate_fiducials(
    x: &[f64],
    approx_r: &[usize],
    baseline: &Baseline,
    fs_hz: f64,
    config: &FiducialConfig,
) -> Result<Vec<Fiducials>> {
    if let Some(w) = approx_r.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "approximate R locations not strictly increasing at {}",
            w + 1
        )));
    }
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let dev = |i: usize| x[i] - baseline.at(i);
    let r_half = ms_to_samples(config.r_search_ms, fs_hz);
    let qrs_half = ms_to_samples(config.qrs_window_ms, fs_hz);
    let t_lo = ms_to_samples(config.t_start_ms, fs_hz) + 1;
    let t_hi = ms_to_samples(config.t_end_ms, fs_hz);

    let mut out: Vec<Fiducials> = Vec::with_capacity(approx_r.len());
    for &approx in approx_r {
        let approx = approx.min(n - 1);
        let mut partial = approx < r_half || approx + r_half >= n;
        let lo = approx.saturating_sub(r_half);
        let hi = (approx + r_half).min(n - 1);

        let (mut up, mut up_at, mut down, mut down_at) =
            (f64::NEG_INFINITY, lo, f64::NEG_INFINITY, lo);
        for i in lo..=hi {
            let d = dev(i);
            if d > up {
                up = d;
                up_at = i;
            }
            if -d > down {
                down = -d;
                down_at = i;
            }
        }
        let (polarity, r) = if up >= down {
            (Polarity::Up, up_at)
        } else {
            (Polarity::Down, down_at)
        };
        let sign = polarity.sign();

        let w_lo = r.saturating_sub(qrs_half);
        let w_hi = (r + qrs_half).min(n - 1);
        partial |= r < qrs_half || r + qrs_half >= n;
        let oriented: Vec<f64> = (w_lo..=w_hi).map(|i| sign * dev(i)).collect();
        let local = r - w_lo;
        let (prominence, lb, rb) = peak_prominence(&oriented, local);
        let width_samples = if prominence > 0.0 {
            peak_width(&oriented, local, prominence, lb, rb, 0.5)
        } else {
            partial = true;
            0.0
        };
        let r_peak = Peak {
            index: r,
            prominence,
            height_above_baseline: dev(r).abs(),
            width_ms: width_samples / fs_hz * 1000.0,
            polarity,
        };

        let t_start = r + t_lo;
        let t_end = r + t_hi;
        partial |= t_end >= n;
        let t = if t_start + 2 < n {
            let window: Vec<f64> = (t_start..=t_end.min(n - 1)).map(dev).collect();
            most_prominent_either(&window, config.t_min_prominence_mv, fs_hz).map(|mut p| {
                p.index += t_start;
                p
            })
        } else {
            None
        };

        let pre_rr_ms = out.last().and_then(|prev| {
            (r > prev.r.index).then(|| (r - prev.r.index) as f64 / fs_hz * 1000.0)
        });
        if !out.is_empty() && pre_rr_ms.is_none() {
            partial = true;
        }
        out.push(Fiducials {
            r: r_peak,
            t_polarity: t.map(|p| p.polarity),
            t,
            pre_rr_ms,
            qrs_polarity: polarity,
            up_deflection_mv: up.max(0.0),
            down_deflection_mv: down.max(0.0),
            partial,
        });
    }
    Ok(out)
}

fn most_prominent_either(window: &[f64], min_prominence: f64, fs_hz: f64) -> Option<Peak> {
    let ups = find_peaks(window, min_prominence, 1, fs_hz);
    let negated: Vec<f64> = window.iter().map(|v| -v).collect();
    let downs = find_peaks(&negated, min_prominence, 1, fs_hz)
        .into_iter()
        .map(|p| Peak {
            polarity: Polarity::Down,
            height_above_baseline: p.height_above_baseline.abs(),
            ..p
        });
    ups.into_iter()
        .map(|p| Peak {
            height_above_baseline: p.height_above_baseline.abs(),
            ..p
        })
        .chain(downs)
        .fold(None, |best: Option<Peak>, p| match best {
            Some(b) if b.prominence >= p.prominence => Some(b),
            _ => Some(p),
        })
}
