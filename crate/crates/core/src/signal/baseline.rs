use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::KahanSum;
use crate::{seed, Error, Result};

/// Robust linear baseline `intercept + slope * i` (i in samples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub slope: f64,
    pub intercept: f64,
    pub inlier_fraction: f64,
}

impl Baseline {
    pub fn at(&self, i: usize) -> f64 {
        self.intercept + self.slope * i as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: usize,
    pub inlier_tol_mv: f64,
    pub min_inlier_fraction: f64,
    pub seed: u64,
    /// Candidate lines are scored on at most this many evenly strided
    /// samples; the final refit and inlier fraction use every sample.
    pub max_scoring_samples: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            inlier_tol_mv: 0.1,
            min_inlier_fraction: 0.5,
            seed: 0,
            max_scoring_samples: 20_000,
        }
    }
}

fn least_squares<'a>(points: impl Iterator<Item = (usize, &'a f64)> + Clone) -> Option<(f64, f64)> {
    let mut n = 0usize;
    let mut sx = KahanSum::new();
    let mut sy = KahanSum::new();
    for (i, &y) in points.clone() {
        n += 1;
        sx.add(i as f64);
        sy.add(y);
    }
    if n == 0 {
        return None;
    }
    let mx = sx.value() / n as f64;
    let my = sy.value() / n as f64;
    let mut sxx = KahanSum::new();
    let mut sxy = KahanSum::new();
    for (i, &y) in points {
        let dx = i as f64 - mx;
        sxx.add(dx * dx);
        sxy.add(dx * (y - my));
    }
    let slope = if sxx.value() > 0.0 {
        sxy.value() / sxx.value()
    } else {
        0.0
    };
    Some((slope, my - slope * mx))
}

/// RANSAC line fit with the default settings except for the given
/// iteration count and tolerance.
pub fn ransac_baseline(x: &[f64], iterations: usize, inlier_tol_mv: f64) -> Result<Baseline> {
    ransac_baseline_with(
        x,
        &RansacConfig {
            iterations,
            inlier_tol_mv,
            ..RansacConfig::default()
        },
    )
}

/// Fits a robust baseline: repeatedly draws two distinct samples, keeps the
/// line through them with the most samples within `inlier_tol_mv`, then
/// refits that line by least squares on its inliers. Deterministic given
/// `config.seed`.
pub fn ransac_baseline_with(x: &[f64], config: &RansacConfig) -> Result<Baseline> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InputTooShort { needed: 1, have: n });
    }
    if config.iterations == 0 {
        return Err(Error::InvalidArgument(
            "RANSAC needs at least one iteration".into(),
        ));
    }
    let stride = n.div_ceil(config.max_scoring_samples.max(2));
    let tol = config.inlier_tol_mv;
    let count_inliers = |slope: f64, intercept: f64, stride: usize| {
        x.iter()
            .enumerate()
            .step_by(stride)
            .filter(|&(i, &v)| (v - (intercept + slope * i as f64)).abs() <= tol)
            .count()
    };

    let mut rng = seed::rng(config.seed);
    let mut best: Option<(usize, f64, f64)> = None;
    for _ in 0..config.iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let slope = (x[j] - x[i]) / (j as f64 - i as f64);
        let intercept = x[i] - slope * i as f64;
        let count = count_inliers(slope, intercept, stride);
        if best.is_none_or(|(c, _, _)| count > c) {
            best = Some((count, slope, intercept));
        }
    }
    let (_, slope, intercept) = best.expect("at least one iteration");
    let inliers = x
        .iter()
        .enumerate()
        .filter(|&(i, &v)| (v - (intercept + slope * i as f64)).abs() <= tol);
    let (slope, intercept) = least_squares(inliers).unwrap_or((slope, intercept));
    let inlier_fraction = count_inliers(slope, intercept, 1) as f64 / n as f64;
    if inlier_fraction < config.min_inlier_fraction {
        return Err(Error::NoStableBaseline {
            fraction: inlier_fraction,
            minimum: config.min_inlier_fraction,
        });
    }
    Ok(Baseline {
        slope,
        intercept,
        inlier_fraction,
    })
}
