use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CellRecord, CellSpec, Highlight, SweepConfig};
use crate::error::Error;
use crate::scoring::ProjectionMode;

/// A detector column of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Column {
    Latent(usize),
    Reconstruction,
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Column::Latent(k) => write!(f, "z_{k}"),
            Column::Reconstruction => f.write_str("rec"),
        }
    }
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "rec" {
            return Ok(Column::Reconstruction);
        }
        s.strip_prefix("z_")
            .and_then(|k| k.parse().ok())
            .map(Column::Latent)
            .ok_or_else(|| Error::Format(format!("unknown detector column {s:?}")))
    }
}

impl From<Column> for String {
    fn from(c: Column) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Column {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

/// One (β, seed) cell: its record, or the error that left a gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub beta: f64,
    pub seed: u64,
    /// Relative to the sweep's output directory.
    pub artifacts: PathBuf,
    pub record: Option<CellRecord>,
    pub error: Option<String>,
}

impl CellOutcome {
    pub fn ok(spec: CellSpec, artifacts: PathBuf, record: CellRecord) -> Self {
        CellOutcome {
            beta: spec.beta,
            seed: spec.seed,
            artifacts,
            record: Some(record),
            error: None,
        }
    }

    pub fn gap(spec: CellSpec, artifacts: PathBuf, error: String) -> Self {
        CellOutcome {
            beta: spec.beta,
            seed: spec.seed,
            artifacts,
            record: None,
            error: Some(error),
        }
    }
}

/// Means over the completed seeds of one β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub beta: f64,
    /// Seeds that contributed.
    pub seeds: Vec<u64>,
    pub zk: Vec<f64>,
    pub rec: f64,
    pub best: Column,
    /// Per `k`: whether the `Z_k` mean is above the reconstruction mean.
    pub zk_beats_rec: Vec<bool>,
}

impl MeanRow {
    pub fn from_values(
        beta: f64,
        seeds: Vec<u64>,
        ks: &[usize],
        zk: Vec<f64>,
        rec: f64,
    ) -> MeanRow {
        let (best, zk_beats_rec) = markers(ks, &zk, rec);
        MeanRow {
            beta,
            seeds,
            zk,
            rec,
            best,
            zk_beats_rec,
        }
    }

    pub fn value(&self, ks: &[usize], column: Column) -> Option<f64> {
        match column {
            Column::Reconstruction => Some(self.rec),
            Column::Latent(k) => ks.iter().position(|&x| x == k).map(|i| self.zk[i]),
        }
    }
}

/// Best column (first maximum in column order, `Z_k` before reconstruction)
/// and the per-`k` comparison against reconstruction.
pub fn markers(ks: &[usize], zk: &[f64], rec: f64) -> (Column, Vec<bool>) {
    let mut best = (Column::Reconstruction, f64::NEG_INFINITY);
    for (k, v) in ks
        .iter()
        .zip(zk)
        .map(|(&k, &v)| (Column::Latent(k), v))
        .chain([(Column::Reconstruction, rec)])
    {
        if v > best.1 {
            best = (k, v);
        }
    }
    (best.0, zk.iter().map(|&v| v > rec).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub betas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub ks: Vec<usize>,
    pub projection: ProjectionMode,
    pub dataset_digest: String,
    pub highlight: Highlight,
    /// β-major, in config order.
    pub cells: Vec<CellOutcome>,
    /// One per β with at least one completed seed.
    pub means: Vec<MeanRow>,
}

impl SweepResult {
    pub fn row(&self, beta: f64) -> Option<&MeanRow> {
        self.means.iter().find(|r| r.beta == beta)
    }

    pub fn gaps(&self) -> impl Iterator<Item = &CellOutcome> {
        self.cells.iter().filter(|c| c.record.is_none())
    }
}

/// Per-β arithmetic means over completed seeds.
pub fn aggregate(
    config: &SweepConfig,
    dataset_digest: String,
    cells: Vec<CellOutcome>,
) -> SweepResult {
    let ks = config.ks.clone();
    let means = config
        .betas
        .iter()
        .filter_map(|&beta| {
            let done: Vec<&CellRecord> = cells
                .iter()
                .filter(|c| c.beta == beta)
                .filter_map(|c| c.record.as_ref())
                .collect();
            if done.is_empty() {
                log::warn!("beta={beta}: no completed seeds, row omitted");
                return None;
            }
            let n = done.len() as f64;
            let zk = (0..ks.len())
                .map(|i| done.iter().map(|r| r.zk_auroc[i]).sum::<f64>() / n)
                .collect();
            let rec = done.iter().map(|r| r.rec_auroc).sum::<f64>() / n;
            let seeds = done.iter().map(|r| r.seed).collect();
            Some(MeanRow::from_values(beta, seeds, &ks, zk, rec))
        })
        .collect();
    SweepResult {
        betas: config.betas.clone(),
        seeds: config.seeds.clone(),
        ks,
        projection: config.projection,
        dataset_digest,
        highlight: config.highlight,
        cells,
        means,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_names_round_trip() {
        for c in [
            Column::Latent(5000),
            Column::Latent(1),
            Column::Reconstruction,
        ] {
            assert_eq!(c.to_string().parse::<Column>().unwrap(), c);
        }
        assert!("z_x".parse::<Column>().is_err());
    }

    #[test]
    fn reconstruction_wins_when_every_latent_column_is_lower() {
        let (best, beats) = markers(&[1, 5000], &[0.9105, 0.9532], 0.9648);
        assert_eq!(best, Column::Reconstruction);
        assert_eq!(beats, [false, false]);
    }

    #[test]
    fn first_maximum_wins() {
        let (best, beats) = markers(&[4000, 5000], &[0.9773, 0.9773], 0.9652);
        assert_eq!(best, Column::Latent(4000));
        assert_eq!(beats, [true, true]);
    }
}
