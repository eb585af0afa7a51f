use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::{Error, Result};

const DEFAULT_TABLE: &str = include_str!("../../config/beat_codes.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BeatClass {
    Pvc,
    Other,
    NonBeat,
}

/// Mapping from WFDB annotation codes (and their one-character symbols) to
/// the class targeted by the pipeline. Loaded from a small text table so a
/// different target class only needs a new table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeatCodeMap {
    by_code: BTreeMap<u8, (String, BeatClass)>,
}

impl Default for BeatCodeMap {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled beat code table parses")
    }
}

impl BeatCodeMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut by_code = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = || format!("beat code table line {}", lineno + 1);
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::parse(loc(), "expected `code symbol class`"));
            }
            let code: u8 = fields[0]
                .parse()
                .map_err(|_| Error::parse(loc(), "code is not an integer"))?;
            if code > 63 {
                return Err(Error::UnknownAnnotationCode(code.into()));
            }
            let class = match fields[2] {
                "PVC" => BeatClass::Pvc,
                "OTHER" => BeatClass::Other,
                "NON_BEAT" => BeatClass::NonBeat,
                other => return Err(Error::parse(loc(), format!("unknown class {other}"))),
            };
            by_code.insert(code, (fields[1].to_string(), class));
        }
        Ok(Self { by_code })
    }

    pub fn class_of(&self, code: u8) -> BeatClass {
        self.by_code
            .get(&code)
            .map_or(BeatClass::NonBeat, |(_, c)| *c)
    }

    pub fn code_of_symbol(&self, symbol: &str) -> Option<u8> {
        self.by_code
            .iter()
            .find(|(_, (s, _))| s == symbol)
            .map(|(c, _)| *c)
    }

    pub fn symbol_of(&self, code: u8) -> Option<&str> {
        self.by_code.get(&code).map(|(s, _)| s.as_str())
    }
}
