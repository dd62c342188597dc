//! Threshold-free evaluation. Anomalies are the positive class and a sample
//! is flagged when its score is strictly above the threshold, so a ROC point
//! sits at every distinct score value.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::AttackCategory;
use crate::error::{Error, Result};
use crate::scoring::ScoreRecord;

/// Scores with ground truth, as parallel columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledScores {
    pub scores: Vec<f64>,
    pub is_anomaly: Vec<bool>,
    pub category: Vec<AttackCategory>,
}

/// Which score column of a [`ScoreRecord`] to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    Reconstruction,
    /// Position in the configured k list.
    Latent(usize),
}

impl LabeledScores {
    pub fn new(
        scores: Vec<f64>,
        is_anomaly: Vec<bool>,
        category: Vec<AttackCategory>,
    ) -> Result<Self> {
        if scores.len() != is_anomaly.len() || scores.len() != category.len() {
            return Err(Error::Shape(
                "labeled score columns differ in length".into(),
            ));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Format("non-finite score".into()));
        }
        Ok(LabeledScores {
            scores,
            is_anomaly,
            category,
        })
    }

    /// Anomaly flags derived from categories.
    pub fn from_categories(scores: Vec<f64>, category: Vec<AttackCategory>) -> Result<Self> {
        let is_anomaly = category.iter().map(|c| c.is_attack()).collect();
        Self::new(scores, is_anomaly, category)
    }

    pub fn from_records(records: &[ScoreRecord], detector: Detector) -> Result<Self> {
        let scores =
            records
                .iter()
                .map(|r| match detector {
                    Detector::Reconstruction => Ok(r.rec),
                    Detector::Latent(i) => r.zk.get(i).copied().ok_or_else(|| {
                        Error::Shape(format!("record {} has no Z_k column {i}", r.id))
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
        Self::from_categories(scores, records.iter().map(|r| r.category).collect())
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let p = self.is_anomaly.iter().filter(|&&a| a).count();
        (p, self.len() - p)
    }

    fn check_two_classes(&self) -> Result<(usize, usize)> {
        let (p, n) = self.class_counts();
        if p == 0 || n == 0 {
            return Err(Error::SingleClass {
                positives: p,
                negatives: n,
            });
        }
        Ok((p, n))
    }

    /// Normals plus the attacks of one category.
    pub fn restrict_to(&self, category: AttackCategory) -> LabeledScores {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| !self.is_anomaly[i] || self.category[i] == category)
            .collect();
        LabeledScores {
            scores: keep.iter().map(|&i| self.scores[i]).collect(),
            is_anomaly: keep.iter().map(|&i| self.is_anomaly[i]).collect(),
            category: keep.iter().map(|&i| self.category[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(FPR, TPR)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auroc: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl RocCurve {
    /// Trapezoidal area under the stored points.
    pub fn trapezoid_area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum()
    }

    pub fn summary(&self) -> CurveSummary {
        CurveSummary {
            auroc: self.auroc,
            points: self.points.len(),
            positives: self.positives,
            negatives: self.negatives,
        }
    }
}

pub fn roc_curve(ls: &LabeledScores) -> Result<RocCurve> {
    let (p, n) = ls.check_two_classes()?;
    let mut order: Vec<usize> = (0..ls.len()).collect();
    order.sort_unstable_by(|&a, &b| ls.scores[b].total_cmp(&ls.scores[a]));
    let mut points = Vec::with_capacity(ls.len() + 1);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = ls.scores[order[i]];
        while i < order.len() && ls.scores[order[i]] == s {
            if ls.is_anomaly[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    Ok(RocCurve {
        points,
        auroc: auroc(ls)?,
        positives: p,
        negatives: n,
    })
}

/// Mann–Whitney AUROC with mid-ranks for ties:
/// `(concordant pairs + ½ tied pairs) / (P · N)`.
pub fn auroc(ls: &LabeledScores) -> Result<f64> {
    let (p, n) = ls.check_two_classes()?;
    let mut order: Vec<usize> = (0..ls.len()).collect();
    order.sort_unstable_by(|&a, &b| ls.scores[a].total_cmp(&ls.scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && ls.scores[order[j]] == ls.scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let mid = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = order[i..j].iter().filter(|&&k| ls.is_anomaly[k]).count();
        rank_sum += mid * pos_in_group as f64;
        i = j;
    }
    let (pf, nf) = (p as f64, n as f64);
    Ok((rank_sum - pf * (pf + 1.0) / 2.0) / (pf * nf))
}

/// One ROC curve per attack category present, each against all normals.
pub fn per_category_eval(ls: &LabeledScores) -> Result<BTreeMap<AttackCategory, RocCurve>> {
    let mut out = BTreeMap::new();
    for cat in AttackCategory::ATTACKS {
        let sub = ls.restrict_to(cat);
        let (p, _) = sub.class_counts();
        if p == 0 {
            log::warn!("no {cat} attacks among the scored samples; skipping");
            continue;
        }
        out.insert(cat, roc_curve(&sub)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub auroc: f64,
    pub points: usize,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorMetrics {
    /// `rec` or `z_<k>`.
    pub detector: String,
    pub global: CurveSummary,
    pub per_category: BTreeMap<AttackCategory, CurveSummary>,
}

/// Metrics of one scored run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub ks: Vec<usize>,
    pub detectors: Vec<DetectorMetrics>,
}

impl RunMetrics {
    pub fn rec_auroc(&self) -> f64 {
        self.detectors[0].global.auroc
    }

    pub fn zk_auroc(&self) -> Vec<f64> {
        self.detectors[1..].iter().map(|d| d.global.auroc).collect()
    }
}

/// A named curve, e.g. `z_5000_dos`.
pub type NamedCurve = (String, RocCurve);

/// Global and per-category ROC for the reconstruction detector and each `Z_k`.
pub fn evaluate_records(
    records: &[ScoreRecord],
    ks: &[usize],
) -> Result<(RunMetrics, Vec<NamedCurve>)> {
    let mut detectors = Vec::new();
    let mut curves = Vec::new();
    let dets = std::iter::once(("rec".to_string(), Detector::Reconstruction)).chain(
        ks.iter()
            .enumerate()
            .map(|(i, k)| (format!("z_{k}"), Detector::Latent(i))),
    );
    for (name, det) in dets {
        let ls = LabeledScores::from_records(records, det)?;
        let global = roc_curve(&ls)?;
        let per = per_category_eval(&ls)?;
        detectors.push(DetectorMetrics {
            detector: name.clone(),
            global: global.summary(),
            per_category: per.iter().map(|(c, r)| (*c, r.summary())).collect(),
        });
        curves.push((format!("{name}_global"), global));
        curves.extend(per.into_iter().map(|(c, r)| (format!("{name}_{c}"), r)));
    }
    Ok((
        RunMetrics {
            ks: ks.to_vec(),
            detectors,
        },
        curves,
    ))
}

/// Writes `fpr,tpr` rows.
pub fn write_roc_points(path: impl AsRef<Path>, curve: &RocCurve) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "fpr,tpr")?;
    for (f, t) in &curve.points {
        writeln!(w, "{f:e},{t:e}")?;
    }
    w.flush()?;
    Ok(())
}
