use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::numeric::KahanSum;
use crate::{Error, Result};

/// Location and scale of the most concentrated part of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustStats {
    pub mean: f64,
    pub std: f64,
    pub support_fraction: f64,
    pub correction_applied: bool,
    /// Index range `[start, start + h)` in sorted order of the selected
    /// window.
    pub window_start: usize,
    pub window_len: usize,
}

/// Factor that makes the standard deviation of the central `alpha` mass of
/// a normal distribution consistent for the full standard deviation.
pub fn consistency_factor(alpha: f64) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let normal = Normal::standard();
    let z = normal.inverse_cdf((1.0 + alpha) / 2.0);
    let truncated_var = 1.0 - 2.0 * z * normal.pdf(z) / alpha;
    1.0 / truncated_var.sqrt()
}

/// Exact one-dimensional minimum covariance determinant estimate.
///
/// With `h = ceil(n * support_fraction)`, the minimum-variance subset of
/// size `h` is a contiguous run of the sorted sample, so a single sliding
/// pass over prefix sums finds it. The window's standard deviation is
/// scaled by [`consistency_factor`] evaluated at `h / n`.
pub fn mcd_1d(samples: &[f64], support_fraction: f64) -> Result<RobustStats> {
    let n = samples.len();
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "MCD needs at least 4 samples, got {n}"
        )));
    }
    if !(0.5..=1.0).contains(&support_fraction) {
        return Err(Error::InvalidArgument(format!(
            "support fraction must lie in [0.5, 1], got {support_fraction}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "MCD input contains non-finite values".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = ((n as f64 * support_fraction).ceil() as usize).clamp(1, n);

    // centre before accumulating to keep the prefix sums well conditioned
    let centre = sorted[n / 2];
    let mut s1 = Vec::with_capacity(n + 1);
    let mut s2 = Vec::with_capacity(n + 1);
    let (mut a, mut b) = (KahanSum::new(), KahanSum::new());
    s1.push(0.0);
    s2.push(0.0);
    for v in &sorted {
        let d = v - centre;
        a.add(d);
        b.add(d * d);
        s1.push(a.value());
        s2.push(b.value());
    }
    let hf = h as f64;
    let mut best_start = 0;
    let mut best_ss = f64::INFINITY;
    for start in 0..=n - h {
        let sum = s1[start + h] - s1[start];
        let sq = s2[start + h] - s2[start];
        let ss = sq - sum * sum / hf;
        if ss < best_ss {
            best_ss = ss;
            best_start = start;
        }
    }

    let window = &sorted[best_start..best_start + h];
    let mean = window.iter().copied().collect::<KahanSum>().value() / hf;
    let var = window
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<KahanSum>()
        .value()
        / hf;
    let alpha = hf / n as f64;
    let correction_applied = alpha < 1.0;
    let std = if var > 0.0 {
        var.sqrt() * consistency_factor(alpha)
    } else {
        0.0
    };
    Ok(RobustStats {
        mean,
        std,
        support_fraction,
        correction_applied,
        window_start: best_start,
        window_len: h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    Lower,
    Upper,
}

/// A threshold together with the robust statistics it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub mean: f64,
    pub std: f64,
    pub k_sigma: f64,
    pub direction: Direction,
}

impl Threshold {
    /// Builds a threshold `mean ∓ k_sigma * std` from known statistics.
    pub fn from_stats(mean: f64, std: f64, direction: Direction, k_sigma: f64) -> Self {
        let value = match direction {
            Direction::Lower => mean - k_sigma * std,
            Direction::Upper => mean + k_sigma * std,
        };
        Self {
            value,
            mean,
            std,
            k_sigma,
            direction,
        }
    }

    /// True when `v` lies within `band` robust standard deviations of the
    /// mean. Always false for a degenerate (zero) spread.
    pub fn is_typical(&self, v: f64, band: f64) -> bool {
        self.std > 0.0 && (v - self.mean).abs() <= band * self.std
    }

    /// True when `v` lies beyond the threshold in its direction.
    pub fn is_exceeded(&self, v: f64) -> bool {
        self.std > 0.0
            && match self.direction {
                Direction::Lower => v < self.value,
                Direction::Upper => v > self.value,
            }
    }
}

/// Robust threshold `k_sigma` standard deviations from the MCD mean in the
/// direction of interest.
pub fn auto_threshold(
    feature: &[f64],
    direction: Direction,
    k_sigma: f64,
    support_fraction: f64,
) -> Result<Threshold> {
    let stats = mcd_1d(feature, support_fraction)?;
    Ok(Threshold::from_stats(
        stats.mean, stats.std, direction, k_sigma,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample() {
        let s = mcd_1d(&[3.0; 9], 0.5).unwrap();
        assert_eq!((s.mean, s.std), (3.0, 0.0));
        let t = auto_threshold(&[3.0; 9], Direction::Lower, 2.0, 0.5).unwrap();
        assert_eq!(t.value, 3.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(mcd_1d(&[1.0, 2.0, 3.0], 0.5).is_err());
        assert!(mcd_1d(&[1.0, 2.0, 3.0, 4.0], 0.4).is_err());
    }

    #[test]
    fn ignores_far_cluster() {
        let mut xs: Vec<f64> = (0..20).map(|i| 10.0 + 0.1 * i as f64).collect();
        xs.extend([100.0, 101.0, 99.0, 250.0]);
        let s = mcd_1d(&xs, 0.5).unwrap();
        assert!(s.mean > 10.0 && s.mean < 12.0);
    }

    #[test]
    fn early_r_threshold_from_reported_distribution() {
        // a robust fit with mean 446 ms and std 77 ms puts the early-R
        // threshold two deviations below the mean
        let t = Threshold::from_stats(446.0, 77.0, Direction::Lower, 2.0);
        assert_eq!(t.value, 292.0);
        assert!(t.is_exceeded(291.0) && !t.is_exceeded(300.0));
    }

    #[test]
    fn symmetric_feature_gives_symmetric_thresholds() {
        // dense centre, sparse tails: the central window is the unique minimum
        let xs: Vec<f64> = (-10i32..=10)
            .map(|i| f64::from(i.signum() * i * i))
            .collect();
        let lo = auto_threshold(&xs, Direction::Lower, 2.0, 0.5).unwrap();
        let hi = auto_threshold(&xs, Direction::Upper, 2.0, 0.5).unwrap();
        assert!(lo.mean.abs() < 1e-12);
        assert!((lo.mean - lo.value - (hi.value - hi.mean)).abs() < 1e-12);
        assert!((lo.value + hi.value).abs() < 1e-12);
    }

    #[test]
    fn larger_k_moves_threshold_away() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let a = auto_threshold(&xs, Direction::Upper, 1.0, 0.5).unwrap();
        let b = auto_threshold(&xs, Direction::Upper, 2.0, 0.5).unwrap();
        assert!(b.value > a.value);
    }

    #[test]
    fn full_support_has_no_correction() {
        let s = mcd_1d(&[1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        assert!(!s.correction_applied);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(consistency_factor(1.0), 1.0);
    }
}
