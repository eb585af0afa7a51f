use super::codes::{BeatClass, BeatCodeMap};
use super::BeatAnnotation;
use crate::{Error, Result};

const SKIP: u16 = 59;
const NUM: u16 = 60;
const SUB: u16 = 61;
const CHN: u16 = 62;
const AUX: u16 = 63;

/// Decodes an MIT-format annotation stream (`.atr`).
///
/// Each 16-bit little-endian word carries a 6-bit type and a 10-bit time
/// increment. SKIP is followed by a 32-bit interval stored high word first
/// (PDP-11 order); AUX is followed by its payload padded to an even length;
/// NUM/SUB/CHN only modify attributes. A zero word terminates the stream.
/// Non-beat annotations are returned with [`BeatClass::NonBeat`]; beat
/// annotations must be strictly increasing in time.
pub fn read_annotations(bytes: &[u8], codes: &BeatCodeMap) -> Result<Vec<BeatAnnotation>> {
    let mut out = Vec::new();
    let mut time: i64 = 0;
    let mut pos = 0usize;
    let mut last_beat: Option<usize> = None;

    let word_at = |pos: usize| -> Result<u16> {
        bytes
            .get(pos..pos + 2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .ok_or(Error::TruncatedAnnotations(pos))
    };

    while pos < bytes.len() {
        let word = word_at(pos)?;
        pos += 2;
        let code = word >> 10;
        let increment = word & 0x03FF;
        match code {
            0 if increment == 0 => break,
            SKIP => {
                let hi = word_at(pos)?;
                let lo = word_at(pos + 2)?;
                pos += 4;
                let interval = ((u32::from(hi) << 16) | u32::from(lo)) as i32;
                time += i64::from(interval);
            }
            NUM | SUB | CHN => {}
            AUX => {
                let len = usize::from(increment);
                let padded = len + (len & 1);
                if pos + padded > bytes.len() {
                    return Err(Error::TruncatedAnnotations(pos));
                }
                pos += padded;
            }
            c => {
                time += i64::from(increment);
                let sample_index = usize::try_from(time)
                    .map_err(|_| Error::parse(format!("annotation byte {pos}"), "negative time"))?;
                let code = c as u8;
                let label = codes.class_of(code);
                if label != BeatClass::NonBeat {
                    if let Some(prev) = last_beat {
                        if sample_index <= prev {
                            return Err(Error::UnsortedAnnotations(out.len()));
                        }
                    }
                    last_beat = Some(sample_index);
                }
                out.push(BeatAnnotation {
                    sample_index,
                    symbol_code: code,
                    label,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(code: u16, inc: u16) -> [u8; 2] {
        ((code << 10) | inc).to_le_bytes()
    }

    fn stream(parts: &[&[u8]]) -> Vec<u8> {
        parts.concat()
    }

    #[test]
    fn single_beat_stream() {
        let b = stream(&[&word(1, 77), &[0, 0]]);
        let a = read_annotations(&b, &BeatCodeMap::default()).unwrap();
        assert_eq!(
            a,
            vec![BeatAnnotation {
                sample_index: 77,
                symbol_code: 1,
                label: BeatClass::Other
            }]
        );
    }

    #[test]
    fn pvc_code_at_cumulative_index() {
        let b = stream(&[&word(1, 600), &word(5, 400), &[0, 0]]);
        let a = read_annotations(&b, &BeatCodeMap::default()).unwrap();
        assert_eq!(a[1].sample_index, 1000);
        assert_eq!(a[1].label, BeatClass::Pvc);
    }

    #[test]
    fn skip_advances_by_pdp11_interval() {
        // interval 70_000 = 0x0001_1170: high word 0x0001, low word 0x1170
        let b = stream(&[
            &word(1, 10),
            &word(SKIP, 0),
            &0x0001u16.to_le_bytes(),
            &0x1170u16.to_le_bytes(),
            &word(5, 5),
            &[0, 0],
        ]);
        let a = read_annotations(&b, &BeatCodeMap::default()).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[1].sample_index, 10 + 70_000 + 5);
    }

    #[test]
    fn aux_payload_and_attribute_words_are_skipped() {
        let b = stream(&[
            &word(28, 3), // rhythm change, non-beat
            &word(AUX, 5),
            b"(N\0\0\0",
            &[0], // pad to even
            &word(NUM, 2),
            &word(1, 7),
            &[0, 0],
        ]);
        let a = read_annotations(&b, &BeatCodeMap::default()).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].label, BeatClass::NonBeat);
        assert_eq!(a[1].sample_index, 10);
    }

    #[test]
    fn truncated_streams_are_errors() {
        let codes = BeatCodeMap::default();
        assert!(matches!(
            read_annotations(&[0x4D], &codes),
            Err(Error::TruncatedAnnotations(_))
        ));
        let b = stream(&[&word(SKIP, 0), &[0, 0]]);
        assert!(matches!(
            read_annotations(&b, &codes),
            Err(Error::TruncatedAnnotations(_))
        ));
        let b = stream(&[&word(AUX, 8), b"ab"]);
        assert!(matches!(
            read_annotations(&b, &codes),
            Err(Error::TruncatedAnnotations(_))
        ));
    }

    #[test]
    fn coincident_beats_are_rejected() {
        let b = stream(&[&word(1, 10), &word(1, 0), &[0, 0]]);
        assert!(matches!(
            read_annotations(&b, &BeatCodeMap::default()),
            Err(Error::UnsortedAnnotations(1))
        ));
    }
}
