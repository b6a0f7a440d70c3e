use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::IGNORE;
use crate::error::{Error, Result};

/// Raw dataset label id -> contiguous train id in `[0, num_classes)`.
///
/// Raw ids missing from the table map to [`IGNORE`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    raw_to_train: BTreeMap<u32, u32>,
    num_classes: u32,
}

impl LabelMap {
    /// Builds a map from `(raw, train)` pairs. Train ids must cover `0..C` with no gaps.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut raw_to_train = BTreeMap::new();
        for (raw, train) in pairs {
            if train == IGNORE {
                continue;
            }
            if let Some(prev) = raw_to_train.insert(raw, train) {
                if prev != train {
                    return Err(Error::Config(format!(
                        "raw label {raw} mapped to both {prev} and {train}"
                    )));
                }
            }
        }
        let used: std::collections::BTreeSet<u32> = raw_to_train.values().copied().collect();
        let num_classes = used.len() as u32;
        if let Some((expected, got)) = used
            .iter()
            .enumerate()
            .find(|(i, &t)| *i as u32 != t)
            .map(|(i, &t)| (i as u32, t))
        {
            return Err(Error::Config(format!(
                "train ids must be contiguous from 0: missing {expected} (next used id is {got})"
            )));
        }
        Ok(Self {
            raw_to_train,
            num_classes,
        })
    }

    /// Identity map over `0..num_classes`.
    pub fn identity(num_classes: u32) -> Self {
        Self {
            raw_to_train: (0..num_classes).map(|c| (c, c)).collect(),
            num_classes,
        }
    }

    /// Parses "raw train" integer pairs, one per line; `#` starts a comment.
    /// A train value of `ignore` (or `-1`) maps the raw id to [`IGNORE`] explicitly.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || {
                Error::Config(format!(
                    "label map line {}: expected 'raw train', got {line:?}",
                    lineno + 1
                ))
            };
            if fields.len() != 2 {
                return Err(bad());
            }
            let raw: u32 = fields[0].parse().map_err(|_| bad())?;
            let train = match fields[1] {
                "ignore" | "-1" => IGNORE,
                v => v.parse().map_err(|_| bad())?,
            };
            pairs.push((raw, train));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    #[inline]
    pub fn map(&self, raw: u32) -> u32 {
        self.raw_to_train.get(&raw).copied().unwrap_or(IGNORE)
    }

    #[inline]
    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    #[inline]
    pub fn ignore_id(&self) -> u32 {
        IGNORE
    }
}
