use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::codes::{BeatClass, BeatCodeMap};
use super::{BeatAnnotation, EcgRecord};
use crate::{Error, Result};

/// Companion annotation path for a CSV record: `name.csv` -> `name.ann.csv`.
pub fn annotations_path(record_path: &Path) -> PathBuf {
    let stem = record_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    record_path.with_file_name(format!("{stem}.ann.csv"))
}

/// Parses the CSV record body: a `fs=<hz>` line followed by one sample (mV)
/// per line, and optionally the companion `index,label` rows.
pub fn read_csv_record_str(
    name: &str,
    body: &str,
    annotations: Option<&str>,
    codes: &BeatCodeMap,
) -> Result<EcgRecord> {
    let mut lines = body
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(name, "empty record file"))?;
    let fs_text = first
        .trim()
        .strip_prefix("fs=")
        .ok_or_else(|| Error::parse(format!("{name}:1"), "expected `fs=<hz>` header"))?;
    let sampling_rate_hz: f64 = fs_text
        .parse()
        .map_err(|_| Error::parse(format!("{name}:1"), "sampling rate is not numeric"))?;
    let samples = lines
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| {
                Error::parse(
                    format!("{name}:{}", i + 1),
                    format!("non-numeric sample `{l}`"),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let annotations = annotations
        .map(|text| parse_annotation_rows(name, text, codes))
        .transpose()?;
    let record = EcgRecord {
        record_name: name.to_string(),
        samples,
        sampling_rate_hz,
        channel_description: String::new(),
        annotations,
    };
    record.validate()?;
    Ok(record)
}

fn parse_annotation_rows(
    name: &str,
    text: &str,
    codes: &BeatCodeMap,
) -> Result<Vec<BeatAnnotation>> {
    let mut out: Vec<BeatAnnotation> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("index")) {
            continue;
        }
        let loc = || format!("{name}.ann.csv:{}", i + 1);
        let (idx, sym) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(loc(), "expected `index,label`"))?;
        let sample_index: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::parse(loc(), "index is not a non-negative integer"))?;
        let sym = sym.trim();
        let (symbol_code, label) = match codes.code_of_symbol(sym) {
            Some(c) => (c, codes.class_of(c)),
            None => (0, BeatClass::NonBeat),
        };
        if let Some(prev) = out.last() {
            if sample_index <= prev.sample_index {
                return Err(Error::UnsortedAnnotations(out.len()));
            }
        }
        out.push(BeatAnnotation {
            sample_index,
            symbol_code,
            label,
        });
    }
    Ok(out)
}

/// Reads `path` and, if it exists, its companion annotation file. The
/// record name is the file stem.
pub fn read_csv_record(path: &Path, codes: &BeatCodeMap) -> Result<EcgRecord> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ann_path = annotations_path(path);
    let ann = if ann_path.exists() {
        Some(std::fs::read_to_string(&ann_path).map_err(|e| Error::io(&ann_path, e))?)
    } else {
        None
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv_record_str(&name, &body, ann.as_deref(), codes)
}

/// Writes a record (and its annotations, when present) in the CSV format.
/// Samples use the shortest representation that round-trips exactly.
pub fn write_csv_record(path: &Path, record: &EcgRecord, codes: &BeatCodeMap) -> Result<()> {
    let mut body = String::with_capacity(record.samples.len() * 10);
    let _ = writeln!(body, "fs={}", record.sampling_rate_hz);
    for v in &record.samples {
        let _ = writeln!(body, "{v}");
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
    if let Some(anns) = &record.annotations {
        let mut text = String::from("index,label\n");
        for a in anns {
            let sym = codes.symbol_of(a.symbol_code).unwrap_or("?");
            let _ = writeln!(text, "{},{}", a.sample_index, sym);
        }
        let ann_path = annotations_path(path);
        std::fs::write(&ann_path, text).map_err(|e| Error::io(&ann_path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_line_file() {
        let r =
            read_csv_record_str("x", "fs=360\n0.1\n-0.2\n", None, &BeatCodeMap::default()).unwrap();
        assert_eq!(r.samples.len(), 2);
        assert_eq!(r.sampling_rate_hz, 360.0);
        assert!(r.annotations.is_none());
    }

    #[test]
    fn companion_row_maps_symbol() {
        let r = read_csv_record_str(
            "x",
            "fs=360\n0\n",
            Some("index,label\n100,V\n200,N\n"),
            &BeatCodeMap::default(),
        )
        .unwrap();
        let a = r.annotations.unwrap();
        assert_eq!(a[0].sample_index, 100);
        assert_eq!(a[0].label, BeatClass::Pvc);
        assert_eq!(a[1].label, BeatClass::Other);
    }

    #[test]
    fn errors_on_bad_sample_or_order() {
        let codes = BeatCodeMap::default();
        assert!(read_csv_record_str("x", "fs=360\nabc\n", None, &codes).is_err());
        assert!(read_csv_record_str("x", "0.1\n", None, &codes).is_err());
        assert!(matches!(
            read_csv_record_str("x", "fs=360\n0\n", Some("5,N\n3,N\n"), &codes),
            Err(Error::UnsortedAnnotations(1))
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let codes = BeatCodeMap::default();
        let rec = EcgRecord {
            record_name: "p01".into(),
            samples: (0..500)
                .map(|i| (i as f64 * 0.37).sin() * 1.234_567_891)
                .collect(),
            sampling_rate_hz: 360.0,
            channel_description: String::new(),
            annotations: Some(vec![
                BeatAnnotation {
                    sample_index: 10,
                    symbol_code: 1,
                    label: BeatClass::Other,
                },
                BeatAnnotation {
                    sample_index: 300,
                    symbol_code: 5,
                    label: BeatClass::Pvc,
                },
            ]),
        };
        let path = dir.path().join("p01.csv");
        write_csv_record(&path, &rec, &codes).unwrap();
        let back = read_csv_record(&path, &codes).unwrap();
        assert_eq!(back.record_name, "p01");
        assert_eq!(back.annotations, rec.annotations);
        for (a, b) in back.samples.iter().zip(&rec.samples) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}
