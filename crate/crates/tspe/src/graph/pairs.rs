//! Labeled subgraph pairs.

use serde::{Deserialize, Serialize};

use super::catalog::SubgraphCatalog;
use crate::error::{Error, Result};

/// How a raw co-occurrence score maps to a binary label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Positive iff score > 0.
    Rr0,
    /// Positive iff score > 1.
    Rr1,
}

impl ThresholdMode {
    pub fn label(self, raw_score: f64) -> bool {
        match self {
            ThresholdMode::Rr0 => raw_score > 0.0,
            ThresholdMode::Rr1 => raw_score > 1.0,
        }
    }
}

impl std::fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdMode::Rr0 => write!(f, "rr0"),
            ThresholdMode::Rr1 => write!(f, "rr1"),
        }
    }
}

/// One labeled pair. Indices refer to the bound catalog.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairRecord {
    pub a: usize,
    pub b: usize,
    pub raw_score: f64,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairDataset {
    pub records: Vec<PairRecord>,
    pub mode: ThresholdMode,
}

impl PairDataset {
    /// Build from (a, b, score) triples, labeling under `mode`.
    pub fn from_scored(
        triples: Vec<(usize, usize, f64)>,
        catalog: &SubgraphCatalog,
        mode: ThresholdMode,
    ) -> Result<Self> {
        let k = catalog.len();
        let mut records = Vec::with_capacity(triples.len());
        for (a, b, raw_score) in triples {
            if a >= k || b >= k {
                return Err(Error::Dimension(format!(
                    "pair ({a},{b}) out of range for {k} subgraphs"
                )));
            }
            if a == b {
                return Err(Error::Config(format!(
                    "self-pair on subgraph {}",
                    catalog.id(a)
                )));
            }
            records.push(PairRecord {
                a,
                b,
                raw_score,
                label: mode.label(raw_score),
            });
        }
        Ok(PairDataset { records, mode })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.records.iter().filter(|r| r.label).count()
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.positive_count() as f64 / self.records.len() as f64
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Relabel the same pairs under another threshold mode.
    pub fn relabel(&self, mode: ThresholdMode) -> PairDataset {
        PairDataset {
            records: self
                .records
                .iter()
                .map(|r| PairRecord {
                    label: mode.label(r.raw_score),
                    ..*r
                })
                .collect(),
            mode,
        }
    }

    /// Pair text in the on-disk format.
    pub fn to_string_tsv(&self, catalog: &SubgraphCatalog) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                catalog.id(r.a),
                catalog.id(r.b),
                r.raw_score
            ));
        }
        out
    }
}

/// Parse `id_a<TAB>id_b<TAB>score` lines against a catalog.
pub fn parse_pair_dataset(
    text: &str,
    catalog: &SubgraphCatalog,
    mode: ThresholdMode,
) -> Result<PairDataset> {
    let mut triples = Vec::new();
    let mut saw_data = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno + 1,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        saw_data = true;
        let a = catalog
            .index_of(fields[0])
            .ok_or_else(|| Error::UnknownId(fields[0].to_string()))?;
        let b = catalog
            .index_of(fields[1])
            .ok_or_else(|| Error::UnknownId(fields[1].to_string()))?;
        let raw_score: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(lineno + 1, format!("bad score `{}`", fields[2])))?;
        if a == b {
            return Err(Error::parse(
                lineno + 1,
                format!("self-pair on subgraph {}", fields[0]),
            ));
        }
        triples.push((a, b, raw_score));
    }
    if !saw_data {
        return Err(Error::parse(0, "empty pair file"));
    }
    PairDataset::from_scored(triples, catalog, mode)
}
