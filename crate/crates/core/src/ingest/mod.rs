//! Record ingestion: WFDB headers, signal and annotation files, the
//! DS1/DS2 patient split and a CSV fallback format.

mod annotations;
mod codes;
mod csv;
mod header;
mod signals;
mod split;

pub use annotations::read_annotations;
pub use codes::{BeatClass, BeatCodeMap};
pub use csv::{annotations_path, read_csv_record, read_csv_record_str, write_csv_record};
pub use header::{parse_header, SignalSpec, StorageFormat, WfdbHeader};
pub use signals::{read_signal, read_signal_16, read_signal_212, DecodedSignals};
pub use split::{standard_split, DatasetSplit, SplitLists};

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::{Error, Result};

/// One ground-truth annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatAnnotation {
    pub sample_index: usize,
    pub symbol_code: u8,
    pub label: BeatClass,
}

/// One patient's single-channel waveform in millivolts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcgRecord {
    pub record_name: String,
    pub samples: Vec<f64>,
    pub sampling_rate_hz: f64,
    pub channel_description: String,
    pub annotations: Option<Vec<BeatAnnotation>>,
}

impl EcgRecord {
    /// Beat annotations only (NON_BEAT entries dropped), in sample order.
    pub fn beats(&self) -> Vec<BeatAnnotation> {
        self.annotations
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .filter(|a| a.label != BeatClass::NonBeat)
            .copied()
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{}: sampling rate must be positive",
                self.record_name
            )));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{}: non-finite sample at {i}",
                self.record_name
            )));
        }
        Ok(())
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads a WFDB record given the path of its `.hea` file, keeping one
/// channel. Annotations are read from `<record>.<annotator>` when present.
pub fn read_wfdb_record(
    header_path: &Path,
    channel: usize,
    annotator: &str,
    codes: &BeatCodeMap,
) -> Result<EcgRecord> {
    let text = std::fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header = parse_header(&text)?;
    if channel >= header.num_signals {
        return Err(Error::InvalidArgument(format!(
            "channel {channel} requested but record has {} signals",
            header.num_signals
        )));
    }
    let dir = header_path.parent().unwrap_or_else(|| Path::new("."));
    let dat = read_bytes(&dir.join(&header.signals[channel].file_name))?;
    let decoded = read_signal(&dat, &header)?;
    for (i, ok) in decoded.checksum_ok.iter().enumerate() {
        if !ok {
            log::warn!("{}: checksum mismatch on signal {i}", header.record_name);
        }
    }
    let ann_path = dir.join(format!("{}.{}", header.record_name, annotator));
    let annotations = if ann_path.exists() {
        Some(read_annotations(&read_bytes(&ann_path)?, codes)?)
    } else {
        None
    };
    let record = EcgRecord {
        record_name: header.record_name.clone(),
        samples: decoded.physical[channel].clone(),
        sampling_rate_hz: header.sampling_rate_hz,
        channel_description: header.signals[channel].description.clone(),
        annotations,
    };
    record.validate()?;
    Ok(record)
}
