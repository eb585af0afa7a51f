//! Record-level composition of the signal and LF stages.

use serde::{Deserialize, Serialize};

use crate::classifier::{beat_vectors, BeatVector};
use crate::ingest::{BeatClass, EcgRecord};
use crate::lfs::{apply_lfs, fit_thresholds, LfConfig, LfMatrix, ThresholdSet};
use crate::par::{self, Execution};
use crate::seed;
use crate::signal::{
    design_butterworth_highpass, filtfilt, locate_fiducials, ransac_baseline_with, segment_beats,
    Baseline, BeatSegment, FiducialConfig, Fiducials, RansacConfig,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub filter_order: usize,
    pub cutoff_hz: f64,
    pub ransac: RansacConfig,
    pub fiducials: FiducialConfig,
    /// Root seed; each record's RANSAC stream is derived from it and the
    /// record name.
    pub seed: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            filter_order: 4,
            cutoff_hz: 0.5,
            ransac: RansacConfig::default(),
            fiducials: FiducialConfig::default(),
            seed: 0,
        }
    }
}

/// One usable beat: an interior beat whose fiducials lie fully inside the
/// record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedBeat {
    /// Position of the beat in the record's annotation (R location) list.
    pub annotation_index: usize,
    pub fiducials: Fiducials,
    pub segment: BeatSegment,
    pub truth: Option<BeatClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedRecord {
    pub record_name: String,
    pub sampling_rate_hz: f64,
    pub filtered: Vec<f64>,
    pub baseline: Baseline,
    pub beats: Vec<ProcessedBeat>,
}

impl ProcessedRecord {
    pub fn fiducials(&self) -> Vec<Fiducials> {
        self.beats.iter().map(|b| b.fiducials.clone()).collect()
    }

    /// Ground truth for every beat, or `None` if any beat lacks it.
    pub fn truth(&self) -> Option<Vec<BeatClass>> {
        self.beats.iter().map(|b| b.truth).collect()
    }
}

/// Filters, fits the baseline, refines the annotated R locations and
/// segments the record. The first and last beats and beats whose
/// measurement windows leave the record are dropped.
pub fn process_record(record: &EcgRecord, config: &PreprocessConfig) -> Result<ProcessedRecord> {
    record.validate()?;
    let annotations = record.beats();
    if annotations.len() < 3 {
        return Err(Error::MissingGroundTruth(format!(
            "{}: need at least 3 annotated R locations, found {}",
            record.record_name,
            annotations.len()
        )));
    }
    let fs = record.sampling_rate_hz;
    let cascade = design_butterworth_highpass(config.filter_order, config.cutoff_hz, fs)?;
    let filtered = filtfilt(&cascade, &record.samples)?;
    let ransac = RansacConfig {
        seed: seed::derive(config.seed, &["ransac", &record.record_name]),
        ..config.ransac
    };
    let baseline = ransac_baseline_with(&filtered, &ransac)?;
    let approx: Vec<usize> = annotations.iter().map(|a| a.sample_index).collect();
    let fiducials = locate_fiducials(&filtered, &approx, &baseline, fs, &config.fiducials)?;

    // segment on refined R locations unless refinement broke the ordering
    let refined: Vec<usize> = fiducials.iter().map(|f| f.r.index).collect();
    let r_locs = if refined.windows(2).all(|w| w[0] < w[1]) {
        refined
    } else {
        log::warn!(
            "{}: refined R locations out of order, segmenting on annotations",
            record.record_name
        );
        approx
    };
    let segments = segment_beats(&record.record_name, &filtered, &r_locs)?;

    let beats = segments
        .into_iter()
        .filter_map(|segment| {
            let b = segment.beat_index;
            let f = &fiducials[b];
            (!f.partial).then(|| ProcessedBeat {
                annotation_index: b,
                fiducials: f.clone(),
                segment,
                truth: record.annotations.as_ref().map(|_| annotations[b].label),
            })
        })
        .collect();
    Ok(ProcessedRecord {
        record_name: record.record_name.clone(),
        sampling_rate_hz: fs,
        filtered,
        baseline,
        beats,
    })
}

pub fn process_records(
    records: &[EcgRecord],
    config: &PreprocessConfig,
    exec: Execution,
) -> Vec<Result<ProcessedRecord>> {
    par::map(exec, records, |r| process_record(r, config))
}

/// Fits a patient's thresholds and evaluates the LFs on its beats.
pub fn label_record(
    record: &ProcessedRecord,
    config: &LfConfig,
) -> Result<(ThresholdSet, LfMatrix)> {
    let fiducials = record.fiducials();
    let thresholds = fit_thresholds(&record.record_name, &fiducials, config)?;
    let matrix = apply_lfs(&record.record_name, &fiducials, &thresholds)?;
    Ok((thresholds, matrix))
}

pub fn label_records(
    records: &[ProcessedRecord],
    config: &LfConfig,
    exec: Execution,
) -> Result<Vec<(ThresholdSet, LfMatrix)>> {
    par::map(exec, records, |r| label_record(r, config))
        .into_iter()
        .collect()
}

/// Classifier inputs for every beat of a processed record.
pub fn record_beat_vectors(record: &ProcessedRecord, len: usize) -> Result<Vec<BeatVector>> {
    let segments: Vec<&BeatSegment> = record.beats.iter().map(|b| &b.segment).collect();
    beat_vectors(&segments, &record.fiducials(), &record.baseline, len)
}
