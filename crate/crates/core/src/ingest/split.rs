use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const DEFAULT_LISTS: &str = include_str!("../../config/ds_split.txt");

/// Train (DS1) and held-out (DS2) patient record names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub ds1_records: Vec<String>,
    pub ds2_records: Vec<String>,
}

/// The versioned list file behind [`standard_split`].
///
/// Format: `#` comments, a `version N` line, then `DS1 name...` and
/// `DS2 name...` lines (either may repeat to continue the list).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitLists {
    pub version: u32,
    pub ds1: Vec<String>,
    pub ds2: Vec<String>,
}

impl Default for SplitLists {
    fn default() -> Self {
        Self::parse(DEFAULT_LISTS).expect("bundled split list parses")
    }
}

impl SplitLists {
    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut ds1 = Vec::new();
        let mut ds2 = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            match fields.next() {
                Some("version") => {
                    let v = fields.next().and_then(|v| v.parse().ok()).ok_or_else(|| {
                        Error::parse(format!("split line {}", i + 1), "bad version")
                    })?;
                    version = Some(v);
                }
                Some("DS1") => ds1.extend(fields.map(str::to_string)),
                Some("DS2") => ds2.extend(fields.map(str::to_string)),
                Some(other) => {
                    return Err(Error::parse(
                        format!("split line {}", i + 1),
                        format!("unexpected key `{other}`"),
                    ))
                }
                None => {}
            }
        }
        if let Some(r) = ds1.iter().find(|r| ds2.contains(r)) {
            return Err(Error::Split(format!(
                "record {r} listed in both DS1 and DS2"
            )));
        }
        Ok(Self {
            version: version.ok_or_else(|| Error::Split("missing version line".into()))?,
            ds1,
            ds2,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        format!(
            "version {}\nDS1 {}\nDS2 {}\n",
            self.version,
            self.ds1.join(" "),
            self.ds2.join(" ")
        )
    }

    /// Intersects the lists with `available`, keeping list order.
    pub fn split(&self, available: &[String]) -> Result<DatasetSplit> {
        let pick = |list: &[String]| -> Vec<String> {
            list.iter()
                .filter(|r| available.contains(r))
                .cloned()
                .collect()
        };
        let ds1_records = pick(&self.ds1);
        let ds2_records = pick(&self.ds2);
        if ds1_records.is_empty() {
            return Err(Error::Split("DS1 empty".into()));
        }
        if ds2_records.is_empty() {
            return Err(Error::Split("DS2 empty".into()));
        }
        Ok(DatasetSplit {
            ds1_records,
            ds2_records,
        })
    }
}

/// The inter-patient DS1/DS2 split of the bundled list, restricted to
/// `available`.
pub fn standard_split(available: &[String]) -> Result<DatasetSplit> {
    SplitLists::default().split(available)
}
