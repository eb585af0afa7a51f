use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum Vote {
    Neg = -1,
    Abstain = 0,
    Pos = 1,
}

impl Vote {
    pub fn value(self) -> i8 {
        self as i8
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self as i8)
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            -1 => Some(Vote::Neg),
            0 => Some(Vote::Abstain),
            1 => Some(Vote::Pos),
            _ => None,
        }
    }
}

impl Serialize for Vote {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Vote {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Vote::from_value(v).ok_or_else(|| serde::de::Error::custom(format!("invalid vote {v}")))
    }
}

/// Borrowed row-major vote grid with `m` columns.
#[derive(Debug, Clone, Copy)]
pub struct VoteView<'a> {
    pub votes: &'a [Vote],
    pub m: usize,
}

impl<'a> VoteView<'a> {
    pub fn new(votes: &'a [Vote], m: usize) -> Self {
        assert!(
            m > 0 && votes.len().is_multiple_of(m),
            "vote buffer is not a whole number of rows"
        );
        Self { votes, m }
    }

    pub fn n_rows(&self) -> usize {
        self.votes.len() / self.m
    }

    pub fn row(&self, i: usize) -> &'a [Vote] {
        &self.votes[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'a, Vote> {
        self.votes.chunks_exact(self.m)
    }

    /// Row range `[start, end)` as its own view.
    pub fn slice(&self, start: usize, end: usize) -> VoteView<'a> {
        VoteView {
            votes: &self.votes[start * self.m..end * self.m],
            m: self.m,
        }
    }
}

/// Votes of `m` labeling functions on the beats of one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfMatrix {
    pub patient: String,
    pub lf_names: Vec<String>,
    /// Beat identifier of each row.
    pub beats: Vec<usize>,
    /// Row-major, `beats.len() * lf_names.len()` entries.
    pub votes: Vec<Vote>,
}

impl LfMatrix {
    pub fn new(
        patient: impl Into<String>,
        lf_names: Vec<String>,
        beats: Vec<usize>,
        votes: Vec<Vote>,
    ) -> Result<Self> {
        if lf_names.is_empty() || votes.len() != beats.len() * lf_names.len() {
            return Err(Error::InvalidArgument(format!(
                "vote count {} does not match {} beats x {} LFs",
                votes.len(),
                beats.len(),
                lf_names.len()
            )));
        }
        Ok(Self {
            patient: patient.into(),
            lf_names,
            beats,
            votes,
        })
    }

    pub fn m(&self) -> usize {
        self.lf_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.beats.len()
    }

    pub fn view(&self) -> VoteView<'_> {
        VoteView::new(&self.votes, self.m())
    }

    pub fn row(&self, i: usize) -> &[Vote] {
        self.view().row(i)
    }

    /// Stacks several matrices with the same LF set into one vote buffer.
    pub fn stack(matrices: &[&LfMatrix]) -> Result<Vec<Vote>> {
        let Some(first) = matrices.first() else {
            return Ok(Vec::new());
        };
        let mut out = Vec::with_capacity(matrices.iter().map(|m| m.votes.len()).sum());
        for m in matrices {
            if m.lf_names != first.lf_names {
                return Err(Error::InvalidArgument(format!(
                    "patient {} uses a different LF set",
                    m.patient
                )));
            }
            out.extend_from_slice(&m.votes);
        }
        Ok(out)
    }

    /// Fraction of non-abstain votes per LF.
    pub fn coverage(&self) -> Vec<f64> {
        let m = self.m();
        let mut counts = vec![0usize; m];
        for row in self.view().rows() {
            for (k, v) in row.iter().enumerate() {
                counts[k] += usize::from(*v != Vote::Abstain);
            }
        }
        counts
            .into_iter()
            .map(|c| c as f64 / self.n_rows().max(1) as f64)
            .collect()
    }
}

/// Serializes matrices as `patient,beat,lf1..lfm` rows.
pub fn to_csv(matrices: &[&LfMatrix]) -> String {
    let m = matrices.first().map_or(0, |x| x.m());
    let mut out = String::from("patient,beat");
    for k in 1..=m {
        let _ = write!(out, ",lf{k}");
    }
    out.push('\n');
    for mat in matrices {
        for (i, row) in mat.view().rows().enumerate() {
            let _ = write!(out, "{},{}", mat.patient, mat.beats[i]);
            for v in row {
                let _ = write!(out, ",{}", v.value());
            }
            out.push('\n');
        }
    }
    out
}

/// Parses the output of [`to_csv`], grouping consecutive rows by patient.
pub fn from_csv(text: &str, lf_names: &[String]) -> Result<Vec<LfMatrix>> {
    let mut out: Vec<LfMatrix> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let loc = || format!("LF matrix line {}", i + 1);
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + lf_names.len() {
            return Err(Error::parse(loc(), "wrong column count"));
        }
        let beat: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(loc(), "beat is not an integer"))?;
        let votes = fields[2..]
            .iter()
            .map(|f| {
                f.parse::<i64>()
                    .ok()
                    .and_then(Vote::from_value)
                    .ok_or_else(|| Error::parse(loc(), format!("invalid vote `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        match out.last_mut() {
            Some(m) if m.patient == fields[0] => {
                m.beats.push(beat);
                m.votes.extend(votes);
            }
            _ => out.push(LfMatrix {
                patient: fields[0].to_string(),
                lf_names: lf_names.to_vec(),
                beats: vec![beat],
                votes,
            }),
        }
    }
    Ok(out)
}
