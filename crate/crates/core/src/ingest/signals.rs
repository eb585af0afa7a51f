use super::header::{StorageFormat, WfdbHeader};
use crate::{Error, Result};

/// Decoded channels of one signal file.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSignals {
    /// Raw ADC values per channel.
    pub raw: Vec<Vec<i32>>,
    /// Physical values (mV) per channel: `(raw - baseline) / gain`.
    pub physical: Vec<Vec<f64>>,
    /// Per-channel checksum verdict; `true` when the header has none.
    pub checksum_ok: Vec<bool>,
}

fn sign_extend_12(v: u16) -> i32 {
    let v = i32::from(v & 0x0FFF);
    if v & 0x800 != 0 {
        v - 0x1000
    } else {
        v
    }
}

/// Decodes a stream of format-212 samples (all channels interleaved).
fn unpack_212(bytes: &[u8], total: usize) -> Result<Vec<i32>> {
    let needed = (total * 3).div_ceil(2);
    if bytes.len() < needed {
        return Err(Error::SignalTooShort {
            needed,
            have: bytes.len(),
        });
    }
    let mut out = Vec::with_capacity(total);
    for group in bytes.chunks(3) {
        if out.len() >= total {
            break;
        }
        let b0 = u16::from(group[0]);
        let b1 = u16::from(group[1]);
        out.push(sign_extend_12(((b1 & 0x0F) << 8) | b0));
        if out.len() < total {
            let b2 = u16::from(group[2]);
            out.push(sign_extend_12(((b1 & 0xF0) << 4) | b2));
        }
    }
    Ok(out)
}

fn unpack_16(bytes: &[u8], total: usize) -> Result<Vec<i32>> {
    let needed = total * 2;
    if bytes.len() < needed {
        return Err(Error::SignalTooShort {
            needed,
            have: bytes.len(),
        });
    }
    Ok(bytes[..needed]
        .chunks_exact(2)
        .map(|c| i32::from(i16::from_le_bytes([c[0], c[1]])))
        .collect())
}

fn finish(header: &WfdbHeader, interleaved: Vec<i32>) -> DecodedSignals {
    let nsig = header.num_signals;
    let mut raw = vec![Vec::with_capacity(header.num_samples); nsig];
    for frame in interleaved.chunks_exact(nsig) {
        for (ch, &v) in frame.iter().enumerate() {
            raw[ch].push(v);
        }
    }
    let physical = raw
        .iter()
        .zip(&header.signals)
        .map(|(r, spec)| {
            r.iter()
                .map(|&v| f64::from(v - spec.adc_baseline) / spec.adc_gain)
                .collect()
        })
        .collect();
    let checksum_ok = raw
        .iter()
        .zip(&header.signals)
        .map(|(r, spec)| match spec.checksum {
            Some(expected) => {
                let sum = r.iter().fold(0i16, |acc, &v| acc.wrapping_add(v as i16));
                i32::from(sum) == expected
            }
            None => true,
        })
        .collect();
    DecodedSignals {
        raw,
        physical,
        checksum_ok,
    }
}

fn check_single_file(header: &WfdbHeader, format: StorageFormat) -> Result<()> {
    let first = &header.signals[0];
    for s in &header.signals {
        if s.format != format {
            return Err(Error::UnsupportedFormat(s.format.code()));
        }
        if s.file_name != first.file_name {
            return Err(Error::Header(
                "signals spread over several files are not supported".into(),
            ));
        }
    }
    Ok(())
}

/// Decodes a format-212 signal file. Every 3-byte group holds two 12-bit
/// samples: the first in the low nibble of byte 1 and byte 0, the second in
/// the high nibble of byte 1 and byte 2.
///
/// A checksum mismatch is reported in [`DecodedSignals::checksum_ok`], not
/// as an error.
pub fn read_signal_212(bytes: &[u8], header: &WfdbHeader) -> Result<DecodedSignals> {
    check_single_file(header, StorageFormat::Packed212)?;
    let total = header.num_samples * header.num_signals;
    Ok(finish(header, unpack_212(bytes, total)?))
}

pub fn read_signal_16(bytes: &[u8], header: &WfdbHeader) -> Result<DecodedSignals> {
    check_single_file(header, StorageFormat::Le16)?;
    let total = header.num_samples * header.num_signals;
    Ok(finish(header, unpack_16(bytes, total)?))
}

/// Dispatches on the storage format declared for the first signal.
pub fn read_signal(bytes: &[u8], header: &WfdbHeader) -> Result<DecodedSignals> {
    match header.signals[0].format {
        StorageFormat::Packed212 => read_signal_212(bytes, header),
        StorageFormat::Le16 => read_signal_16(bytes, header),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_header;

    fn two_channel(nsamp: usize) -> WfdbHeader {
        parse_header(&format!(
            "t 2 360 {nsamp}\nt.dat 212 200 11 0 0\nt.dat 212 200 11 0 0\n"
        ))
        .unwrap()
    }

    #[test]
    fn bit_layout_identity() {
        let d = read_signal_212(&[0x01, 0x00, 0x00], &two_channel(1)).unwrap();
        assert_eq!(d.raw, vec![vec![1], vec![0]]);
    }

    #[test]
    fn twelve_bit_sign_extension() {
        let d = read_signal_212(&[0xFF, 0x0F, 0x00], &two_channel(1)).unwrap();
        assert_eq!(d.raw[0], vec![-1]);
        assert_eq!(d.raw[1], vec![0]);
        let d = read_signal_212(&[0x00, 0x80, 0x00], &two_channel(1)).unwrap();
        assert_eq!(d.raw[1], vec![-2048]);
    }

    #[test]
    fn physical_units_use_gain_and_baseline() {
        let h = parse_header("t 2 360 1\nt.dat 212 200 11 1024 0\nt.dat 212 100 11 0 0\n").unwrap();
        // sample1 = 1224, sample2 = 50
        let b = [(1224 & 0xFF) as u8, ((1224 >> 8) & 0x0F) as u8, 50];
        let d = read_signal_212(&b, &h).unwrap();
        assert_eq!(d.physical[0], vec![1.0]);
        assert_eq!(d.physical[1], vec![0.5]);
    }

    #[test]
    fn short_stream_is_an_error() {
        assert!(matches!(
            read_signal_212(&[0, 0, 0, 0], &two_channel(2)),
            Err(Error::SignalTooShort { needed: 6, have: 4 })
        ));
    }

    #[test]
    fn checksum_mismatch_is_reported_not_fatal() {
        let h =
            parse_header("t 2 360 1\nt.dat 212 200 11 0 0 5\nt.dat 212 200 11 0 0 0\n").unwrap();
        let d = read_signal_212(&[0x05, 0x00, 0x01], &h).unwrap();
        assert_eq!(d.checksum_ok, vec![true, false]);
    }

    #[test]
    fn format_16_little_endian() {
        let h = parse_header("t 1 360 2\nt.dat 16 100\n").unwrap();
        let d = read_signal_16(&[0x64, 0x00, 0x9C, 0xFF], &h).unwrap();
        assert_eq!(d.raw[0], vec![100, -100]);
        assert_eq!(d.physical[0], vec![1.0, -1.0]);
    }
}
