use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a sample is mapped to a latent point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMode {
    /// Posterior mean `μ(x)`.
    #[default]
    Mean,
    /// One reparameterized draw `μ(x) + σ(x) ⊙ ε`.
    Sampled,
}

impl ProjectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionMode::Mean => "mean",
            ProjectionMode::Sampled => "sampled",
        }
    }
}

impl std::str::FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(ProjectionMode::Mean),
            "sampled" => Ok(ProjectionMode::Sampled),
            other => Err(Error::Config(format!("unknown projection mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub row: usize,
    pub distance: f64,
}

/// Latent projections of the training set, searched exhaustively.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentIndex {
    points: Array2<f64>,
    mode: ProjectionMode,
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl LatentIndex {
    pub fn new(points: Array2<f64>, mode: ProjectionMode) -> Result<LatentIndex> {
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(
                "latent index contains non-finite values".into(),
            ));
        }
        let points = if points.is_standard_layout() {
            points
        } else {
            points.as_standard_layout().into_owned()
        };
        Ok(LatentIndex { points, mode })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn mode(&self) -> ProjectionMode {
        self.mode
    }

    pub fn backend(&self) -> &'static str {
        "exact linear scan"
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    fn check_query(&self, z: &[f64], k: usize) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::Shape(format!(
                "query has {} dims, index has {}",
                z.len(),
                self.dim()
            )));
        }
        if k == 0 || k > self.len() {
            return Err(Error::KOutOfRange {
                k,
                rows: self.len(),
            });
        }
        Ok(())
    }

    /// The `k` nearest rows to `z`, ascending by distance with ties broken
    /// by row order.
    pub fn knn(&self, z: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        let mut scratch = Vec::new();
        self.knn_with(z, k, &mut scratch)
    }

    pub(crate) fn knn_with(
        &self,
        z: &[f64],
        k: usize,
        scratch: &mut Vec<(f64, usize)>,
    ) -> Result<Vec<Neighbor>> {
        self.check_query(z, k)?;
        scratch.clear();
        scratch.extend(
            self.points
                .rows()
                .into_iter()
                .enumerate()
                .map(|(i, row)| (euclidean(z, row.as_slice().expect("standard layout")), i)),
        );
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scratch.len() {
            scratch.select_nth_unstable_by(k - 1, cmp);
            scratch.truncate(k);
        }
        scratch.sort_unstable_by(cmp);
        Ok(scratch
            .iter()
            .map(|&(distance, row)| Neighbor { row, distance })
            .collect())
    }

    /// Sorted distances to the `k_max` nearest rows.
    pub fn knn_distances(&self, z: &[f64], k_max: usize) -> Result<Vec<f64>> {
        Ok(self
            .knn(z, k_max)?
            .into_iter()
            .map(|n| n.distance)
            .collect())
    }

    /// `Z_k` for every `k` in `ks`, all served by one neighbor query at
    /// `max(ks)`: each value is a prefix mean of the sorted distances.
    pub fn zk_scores(&self, z: &[f64], ks: &[usize]) -> Result<Vec<f64>> {
        let mut scratch = Vec::new();
        self.zk_scores_with(z, ks, &mut scratch)
    }

    pub(crate) fn zk_scores_with(
        &self,
        z: &[f64],
        ks: &[usize],
        scratch: &mut Vec<(f64, usize)>,
    ) -> Result<Vec<f64>> {
        let k_max = ks.iter().copied().max().unwrap_or(0);
        let neighbors = self.knn_with(z, k_max, scratch)?;
        Ok(prefix_means(neighbors.iter().map(|n| n.distance), ks))
    }
}

/// Means of the first `k` values for each `k` in `ks`.
pub fn prefix_means(sorted: impl IntoIterator<Item = f64>, ks: &[usize]) -> Vec<f64> {
    let mut sums = Vec::new();
    let mut acc = 0.0;
    for d in sorted {
        acc += d;
        sums.push(acc);
    }
    ks.iter().map(|&k| sums[k - 1] / k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn exact_hit_is_zero() {
        let idx = LatentIndex::new(array![[1.0, 2.0], [3.0, -1.0]], ProjectionMode::Mean).unwrap();
        assert_eq!(idx.knn_distances(&[3.0, -1.0], 1).unwrap(), [0.0]);
        assert_eq!(idx.zk_scores(&[3.0, -1.0], &[1]).unwrap(), [0.0]);
    }

    #[test]
    fn unit_axes_from_origin() {
        let idx = LatentIndex::new(Array2::eye(3), ProjectionMode::Mean).unwrap();
        assert_eq!(idx.knn_distances(&[0.0; 3], 3).unwrap(), [1.0, 1.0, 1.0]);
        let rows: Vec<usize> = idx
            .knn(&[0.0; 3], 3)
            .unwrap()
            .iter()
            .map(|n| n.row)
            .collect();
        assert_eq!(rows, [0, 1, 2]);
    }

    #[test]
    fn prefix_mean_arithmetic() {
        assert_eq!(prefix_means([1.0, 2.0, 3.0], &[1, 2, 3]), [1.0, 1.5, 2.0]);
    }

    #[test]
    fn k_out_of_range() {
        let idx = LatentIndex::new(Array2::zeros((4, 2)), ProjectionMode::Mean).unwrap();
        assert!(matches!(
            idx.knn(&[0.0, 0.0], 0),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(matches!(
            idx.knn(&[0.0, 0.0], 5),
            Err(Error::KOutOfRange { k: 5, rows: 4 })
        ));
        assert!(idx.knn(&[0.0], 1).is_err());
    }
}
