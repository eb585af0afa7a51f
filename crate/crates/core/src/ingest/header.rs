use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// WFDB default ADC gain (adc units per mV) when the header gives none or 0.
pub const DEFAULT_ADC_GAIN: f64 = 200.0;
/// WFDB default sampling frequency when the record line omits it.
pub const DEFAULT_SAMPLING_RATE_HZ: f64 = 250.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StorageFormat {
    /// Two 12-bit two's-complement samples packed in three bytes.
    Packed212,
    /// 16-bit little-endian two's-complement samples.
    Le16,
}

impl StorageFormat {
    pub fn from_code(code: u16) -> Result<Self> {
        match code {
            212 => Ok(StorageFormat::Packed212),
            16 => Ok(StorageFormat::Le16),
            other => Err(Error::UnsupportedFormat(other)),
        }
    }

    pub fn code(self) -> u16 {
        match self {
            StorageFormat::Packed212 => 212,
            StorageFormat::Le16 => 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: StorageFormat,
    pub adc_gain: f64,
    pub adc_baseline: i32,
    pub adc_resolution_bits: u32,
    pub adc_zero: i32,
    pub initial_value: i32,
    pub checksum: Option<i32>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfdbHeader {
    pub record_name: String,
    pub num_signals: usize,
    pub sampling_rate_hz: f64,
    pub num_samples: usize,
    pub signals: Vec<SignalSpec>,
}

fn num<T: std::str::FromStr>(field: &str, what: &str, line: usize) -> Result<T> {
    field.parse().map_err(|_| {
        Error::parse(
            format!("header line {line}"),
            format!("{what} `{field}` is not numeric"),
        )
    })
}

/// Leading run of characters that can start a number.
fn numeric_prefix(s: &str) -> &str {
    let end = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == 'e'
                || c == 'E'
                || (i == 0 && (c == '-' || c == '+')))
        })
        .map_or(s.len(), |(i, _)| i);
    &s[..end]
}

/// Parses a WFDB `.hea` header (single-segment records).
///
/// Comment lines (`#`) and blank lines are skipped. Optional signal fields
/// fall back to WFDB defaults: gain 200, ADC zero 0, baseline equal to the
/// ADC zero, initial value equal to the ADC zero.
pub fn parse_header(text: &str) -> Result<WfdbHeader> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (rec_line, record) = lines
        .next()
        .ok_or_else(|| Error::Header("no record line".into()))?;
    let fields: Vec<&str> = record.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(Error::Header(format!(
            "record line {rec_line} needs at least `name nsig`"
        )));
    }
    let name = fields[0];
    if name.contains('/') {
        return Err(Error::Header(
            "multi-segment records are not supported".into(),
        ));
    }
    let num_signals: usize = num(fields[1], "signal count", rec_line)?;
    if num_signals == 0 {
        return Err(Error::Header("record declares zero signals".into()));
    }
    let sampling_rate_hz = match fields.get(2) {
        Some(f) => {
            let fs_text = f.split(['/', '(']).next().unwrap_or(f);
            num::<f64>(fs_text, "sampling frequency", rec_line)?
        }
        None => DEFAULT_SAMPLING_RATE_HZ,
    };
    if !(sampling_rate_hz > 0.0) {
        return Err(Error::Header("sampling frequency must be positive".into()));
    }
    let num_samples = match fields.get(3) {
        Some(f) => num(f, "sample count", rec_line)?,
        None => 0,
    };

    let signal_lines: Vec<(usize, &str)> = lines.collect();
    if signal_lines.len() != num_signals {
        return Err(Error::SignalLineCount {
            declared: num_signals,
            found: signal_lines.len(),
        });
    }
    let signals = signal_lines
        .into_iter()
        .map(|(lineno, l)| parse_signal_line(lineno, l))
        .collect::<Result<Vec<_>>>()?;

    Ok(WfdbHeader {
        record_name: name.to_string(),
        num_signals,
        sampling_rate_hz,
        num_samples,
        signals,
    })
}

fn parse_signal_line(lineno: usize, line: &str) -> Result<SignalSpec> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(Error::Header(format!(
            "signal line {lineno} needs at least `file format`"
        )));
    }
    let file_name = fields[0].to_string();
    // format[xspf][:skew][+offset]
    let fmt_text = numeric_prefix(fields[1]);
    let code: u16 = num(fmt_text, "storage format", lineno)?;
    if fields[1][fmt_text.len()..].starts_with('x') {
        return Err(Error::Header(format!(
            "signal line {lineno}: multiple samples per frame are not supported"
        )));
    }
    let format = StorageFormat::from_code(code)?;

    // gain[(baseline)][/units]
    let (mut adc_gain, explicit_baseline) = match fields.get(2) {
        Some(g) => {
            let gain_text = numeric_prefix(g);
            let gain: f64 = num(gain_text, "ADC gain", lineno)?;
            let rest = &g[gain_text.len()..];
            let baseline = match rest.strip_prefix('(') {
                Some(inner) => {
                    let close = inner.find(')').ok_or_else(|| {
                        Error::Header(format!("signal line {lineno}: unclosed baseline"))
                    })?;
                    Some(num::<i32>(&inner[..close], "ADC baseline", lineno)?)
                }
                None => None,
            };
            (gain, baseline)
        }
        None => (0.0, None),
    };
    if adc_gain == 0.0 {
        adc_gain = DEFAULT_ADC_GAIN;
    }
    let default_bits = match format {
        StorageFormat::Packed212 => 12,
        StorageFormat::Le16 => 16,
    };
    let adc_resolution_bits = match fields.get(3) {
        Some(f) => num(f, "ADC resolution", lineno)?,
        None => default_bits,
    };
    let adc_zero: i32 = match fields.get(4) {
        Some(f) => num(f, "ADC zero", lineno)?,
        None => 0,
    };
    let initial_value = match fields.get(5) {
        Some(f) => num(f, "initial value", lineno)?,
        None => adc_zero,
    };
    let checksum = match fields.get(6) {
        Some(f) => Some(num(f, "checksum", lineno)?),
        None => None,
    };
    if let Some(f) = fields.get(7) {
        num::<i64>(f, "block size", lineno)?;
    }
    let description = if fields.len() > 8 {
        fields[8..].join(" ")
    } else {
        String::new()
    };
    Ok(SignalSpec {
        file_name,
        format,
        adc_gain,
        adc_baseline: explicit_baseline.unwrap_or(adc_zero),
        adc_resolution_bits,
        adc_zero,
        initial_value,
        checksum,
        description,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MITDB_100: &str = "100 2 360 650000\n\
        100.dat 212 200 11 1024 995 -22131 0 MLII\n\
        100.dat 212 200 11 1024 1011 20052 0 V5\n\
        # 69 M 1085 1629 x1\n\
        # Aldomet, Inderal\n";

    #[test]
    fn parses_mitdb_style_header_field_by_field() {
        let h = parse_header(MITDB_100).unwrap();
        assert_eq!(h.record_name, "100");
        assert_eq!(h.num_signals, 2);
        assert_eq!(h.sampling_rate_hz, 360.0);
        assert_eq!(h.num_samples, 650_000);
        let s0 = &h.signals[0];
        assert_eq!(s0.file_name, "100.dat");
        assert_eq!(s0.format, StorageFormat::Packed212);
        assert_eq!(s0.adc_gain, 200.0);
        assert_eq!(s0.adc_resolution_bits, 11);
        assert_eq!(s0.adc_zero, 1024);
        assert_eq!(s0.adc_baseline, 1024);
        assert_eq!(s0.initial_value, 995);
        assert_eq!(s0.checksum, Some(-22131));
        assert_eq!(s0.description, "MLII");
        assert_eq!(h.signals[1].description, "V5");
        assert_eq!(h.signals[1].checksum, Some(20052));
    }

    #[test]
    fn comments_are_transparent() {
        let with = format!("# leading comment\n\n{MITDB_100}# trailing\n");
        let plain = "100 2 360 650000\n\
            100.dat 212 200 11 1024 995 -22131 0 MLII\n\
            100.dat 212 200 11 1024 1011 20052 0 V5\n";
        assert_eq!(parse_header(&with).unwrap(), parse_header(plain).unwrap());
    }

    #[test]
    fn missing_signal_lines_is_an_error() {
        let err = parse_header("100 2 360 650000\n").unwrap_err();
        assert!(
            err.to_string().contains("signal line count mismatch"),
            "{err}"
        );
    }

    #[test]
    fn optional_fields_take_defaults() {
        let h = parse_header("rec 1 360 10\nrec.dat 16\n").unwrap();
        let s = &h.signals[0];
        assert_eq!(s.adc_gain, DEFAULT_ADC_GAIN);
        assert_eq!(s.adc_baseline, 0);
        assert_eq!(s.checksum, None);
        assert_eq!(s.format, StorageFormat::Le16);
    }

    #[test]
    fn explicit_baseline_and_units() {
        let h = parse_header("r 1 500/1.0(0) 5\nr.dat 16 400(-12)/mV 16 0 0 0 0 lead I\n").unwrap();
        assert_eq!(h.sampling_rate_hz, 500.0);
        assert_eq!(h.signals[0].adc_gain, 400.0);
        assert_eq!(h.signals[0].adc_baseline, -12);
        assert_eq!(h.signals[0].description, "lead I");
    }

    #[test]
    fn rejects_unsupported_format_and_garbage() {
        assert!(matches!(
            parse_header("r 1 360 5\nr.dat 310 200\n"),
            Err(Error::UnsupportedFormat(310))
        ));
        assert!(parse_header("r two 360 5\nr.dat 212\n").is_err());
        assert!(parse_header("r 1 360 5\nr.dat 212 abc\n").is_err());
    }
}
