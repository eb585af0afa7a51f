use serde::{Deserialize, Serialize};

use super::matrix::{LfMatrix, Vote};
use super::mcd::{auto_threshold, Direction, Threshold};
use crate::signal::{Fiducials, Polarity};
use crate::{Error, Result};

pub const LF_NAMES: [&str; 6] = [
    "early_r",
    "tall_r",
    "wide_r",
    "discordant_t",
    "inverted_qrs",
    "tall_inverted_r",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfConfig {
    pub k_early: f64,
    pub k_tall: f64,
    pub k_wide: f64,
    pub k_deep_inverted: f64,
    /// LFs 1-3 vote NEG when the feature lies within this many robust
    /// standard deviations of the patient's mean.
    pub neg_band_sigma: f64,
    pub support_fraction: f64,
}

impl Default for LfConfig {
    fn default() -> Self {
        Self {
            k_early: 2.0,
            k_tall: 2.0,
            k_wide: 2.0,
            k_deep_inverted: 2.0,
            neg_band_sigma: 1.0,
            support_fraction: 0.5,
        }
    }
}

impl LfConfig {
    pub fn with_k_sigma(k: f64) -> Self {
        Self {
            k_early: k,
            k_tall: k,
            k_wide: k,
            k_deep_inverted: k,
            ..Self::default()
        }
    }
}

/// Per-patient thresholds. A missing threshold (too few beats to estimate)
/// makes the dependent LF abstain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub patient: String,
    pub early_rr_ms: Option<Threshold>,
    pub tall_mv: Option<Threshold>,
    pub wide_ms: Option<Threshold>,
    pub deep_inverted_mv: Option<Threshold>,
    pub neg_band_sigma: f64,
}

fn fit_one(
    values: Vec<f64>,
    direction: Direction,
    k: f64,
    support: f64,
) -> Result<Option<Threshold>> {
    if values.len() < 4 {
        return Ok(None);
    }
    auto_threshold(&values, direction, k, support).map(Some)
}

/// Estimates one patient's thresholds from its (non-partial) beats.
///
/// * early R: lower tail of pre-RR intervals
/// * tall R: upper tail of R heights of upright beats
/// * wide R: upper tail of R widths
/// * deep inverted R: upper tail of downward deflections over all beats
pub fn fit_thresholds(
    patient: &str,
    fiducials: &[Fiducials],
    config: &LfConfig,
) -> Result<ThresholdSet> {
    let usable = || fiducials.iter().filter(|f| !f.partial);
    let support = config.support_fraction;
    Ok(ThresholdSet {
        patient: patient.to_string(),
        early_rr_ms: fit_one(
            usable().filter_map(|f| f.pre_rr_ms).collect(),
            Direction::Lower,
            config.k_early,
            support,
        )?,
        tall_mv: fit_one(
            usable()
                .filter(|f| f.qrs_polarity == Polarity::Up)
                .map(|f| f.r.height_above_baseline)
                .collect(),
            Direction::Upper,
            config.k_tall,
            support,
        )?,
        wide_ms: fit_one(
            usable().map(|f| f.r.width_ms).collect(),
            Direction::Upper,
            config.k_wide,
            support,
        )?,
        deep_inverted_mv: fit_one(
            usable().map(|f| f.down_deflection_mv).collect(),
            Direction::Upper,
            config.k_deep_inverted,
            support,
        )?,
        neg_band_sigma: config.neg_band_sigma,
    })
}

fn tail_vote(threshold: Option<&Threshold>, value: Option<f64>, band: f64) -> Vote {
    match (threshold, value) {
        (Some(t), Some(v)) if t.is_exceeded(v) => Vote::Pos,
        (Some(t), Some(v)) if t.is_typical(v, band) => Vote::Neg,
        _ => Vote::Abstain,
    }
}

fn vote_row(f: &Fiducials, t: &ThresholdSet) -> [Vote; 6] {
    let band = t.neg_band_sigma;
    let upright = f.qrs_polarity == Polarity::Up;
    let inverted = f.qrs_polarity == Polarity::Down;

    let early = tail_vote(t.early_rr_ms.as_ref(), f.pre_rr_ms, band);
    let tall = if upright {
        tail_vote(t.tall_mv.as_ref(), Some(f.r.height_above_baseline), band)
    } else {
        Vote::Abstain
    };
    let wide = tail_vote(t.wide_ms.as_ref(), Some(f.r.width_ms), band);
    let discordant = match f.t_polarity {
        None => Vote::Abstain,
        Some(tp) if tp != f.qrs_polarity => Vote::Pos,
        Some(_) => Vote::Neg,
    };
    let inverted_qrs = if inverted { Vote::Pos } else { Vote::Abstain };
    let tall_inverted = match &t.deep_inverted_mv {
        Some(th) if inverted && th.is_exceeded(f.down_deflection_mv) => Vote::Pos,
        _ => Vote::Abstain,
    };
    [early, tall, wide, discordant, inverted_qrs, tall_inverted]
}

/// Evaluates the six labeling functions on every beat. Rows are numbered
/// `0..B`; see [`LfMatrix::beats`] to attach other identifiers.
pub fn apply_lfs(
    patient: &str,
    fiducials: &[Fiducials],
    thresholds: &ThresholdSet,
) -> Result<LfMatrix> {
    if thresholds.patient != patient {
        return Err(Error::PatientMismatch {
            thresholds: thresholds.patient.clone(),
            fiducials: patient.to_string(),
        });
    }
    let votes: Vec<Vote> = fiducials
        .iter()
        .flat_map(|f| vote_row(f, thresholds))
        .collect();
    LfMatrix::new(
        patient,
        LF_NAMES.iter().map(|s| s.to_string()).collect(),
        (0..fiducials.len()).collect(),
        votes,
    )
}
