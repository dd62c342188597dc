//! The two detectors built on a trained model: reconstruction error and
//! `Z_k`, the mean distance to the `k` nearest latent projections of the
//! normal training data.

mod file;
mod index;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttackCategory, EncodedSet};
use crate::error::{Error, Result};
use crate::model::BetaVae;

pub use file::{read_scores, write_scores, ScoresHeader};
pub use index::{prefix_means, LatentIndex, Neighbor, ProjectionMode};

/// Default `k` grid.
pub const DEFAULT_KS: [usize; 13] = [
    1, 100, 150, 200, 250, 300, 400, 500, 1000, 2000, 3000, 4000, 5000,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub ks: Vec<usize>,
    /// Decision threshold; evaluation sweeps thresholds and leaves this unset.
    pub threshold: Option<f64>,
    pub projection: ProjectionMode,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            ks: DEFAULT_KS.to_vec(),
            threshold: None,
            projection: ProjectionMode::Mean,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self, index_rows: usize) -> Result<()> {
        if self.ks.is_empty() {
            return Err(Error::Config("k list is empty".into()));
        }
        if self.ks[0] == 0 || self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "k values must be positive and strictly increasing".into(),
            ));
        }
        let k_max = *self.ks.last().unwrap();
        if k_max > index_rows {
            return Err(Error::KOutOfRange {
                k: k_max,
                rows: index_rows,
            });
        }
        Ok(())
    }
}

/// Both scores for one evaluated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: usize,
    /// `test` for held-out normals, `attack` for attacks.
    pub split: String,
    pub label: String,
    pub category: AttackCategory,
    pub rec: f64,
    /// One `Z_k` per configured `k`, same order.
    pub zk: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Normal,
    Anomaly,
}

/// Anomaly iff `score > threshold`.
pub fn classify(score: f64, threshold: f64) -> Verdict {
    if score > threshold {
        Verdict::Anomaly
    } else {
        Verdict::Normal
    }
}

/// Latent points for every row of `x`. Sampled mode draws one noise row per
/// sample, in row order, from `rng`.
pub fn project<R: Rng + ?Sized>(
    model: &BetaVae,
    x: ArrayView2<f64>,
    mode: ProjectionMode,
    rng: &mut R,
) -> Result<Array2<f64>> {
    let (mu, logvar) = model.encode_batch(x)?;
    Ok(match mode {
        ProjectionMode::Mean => mu,
        ProjectionMode::Sampled => {
            let noise =
                Array2::from_shape_simple_fn(mu.raw_dim(), || rng.sample::<f64, _>(StandardNormal));
            &mu + &(logvar.mapv(|lv| (0.5 * lv).exp()) * noise)
        }
    })
}

/// Reconstruction error of a single sample (`n = 1`).
pub fn rec_score<R: Rng + ?Sized>(
    model: &BetaVae,
    x: &[f64],
    mode: ProjectionMode,
    rng: &mut R,
) -> Result<f64> {
    let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
    Ok(rec_scores(model, view, mode, rng)?[0])
}

/// Reconstruction error of every row.
pub fn rec_scores<R: Rng + ?Sized>(
    model: &BetaVae,
    x: ArrayView2<f64>,
    mode: ProjectionMode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let z = project(model, x, mode, rng)?;
    rec_scores_from_latent(model, x, z.view())
}

fn rec_scores_from_latent(
    model: &BetaVae,
    x: ArrayView2<f64>,
    z: ArrayView2<f64>,
) -> Result<Vec<f64>> {
    const CHUNK: usize = 4096;
    let chunks: Vec<_> = (0..x.nrows()).step_by(CHUNK).collect();
    let parts: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(x.nrows());
            let xs = x.slice(ndarray::s![start..end, ..]);
            let out = model.decode_batch(z.slice(ndarray::s![start..end, ..]))?;
            Ok(model.per_sample_reconstruction(xs, out.view()))
        })
        .collect::<Result<_>>()?;
    Ok(parts.concat())
}

/// Projects the training rows, one latent row per sample in input order.
pub fn build_latent_index<R: Rng + ?Sized>(
    model: &BetaVae,
    x_train: ArrayView2<f64>,
    mode: ProjectionMode,
    rng: &mut R,
) -> Result<LatentIndex> {
    LatentIndex::new(project(model, x_train, mode, rng)?, mode)
}

/// `Z_k` for every row of `latent` (parallel over rows, output in row order).
pub fn zk_matrix(
    index: &LatentIndex,
    latent: ArrayView2<f64>,
    ks: &[usize],
) -> Result<Vec<Vec<f64>>> {
    (0..latent.nrows())
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let z = latent.row(i).to_vec();
            index.zk_scores_with(&z, ks, scratch)
        })
        .collect()
}

/// Scores each set with both detectors. Rows are numbered consecutively
/// across sets in the order given.
pub fn score_sets<R: Rng + ?Sized>(
    model: &BetaVae,
    index: &LatentIndex,
    sets: &[(&str, &EncodedSet)],
    config: &DetectorConfig,
    rng: &mut R,
) -> Result<Vec<ScoreRecord>> {
    config.validate(index.len())?;
    let mut out = Vec::new();
    for (name, set) in sets {
        let x = set.features.view();
        let z = project(model, x, config.projection, rng)?;
        let rec = rec_scores_from_latent(model, x, z.view())?;
        let zk = zk_matrix(index, z.view(), &config.ks)?;
        for ((meta, rec), zk) in set.samples.iter().zip(rec).zip(zk) {
            out.push(ScoreRecord {
                id: out.len(),
                split: name.to_string(),
                label: meta.label.clone(),
                category: meta.category,
                rec,
                zk,
            });
        }
    }
    Ok(out)
}
