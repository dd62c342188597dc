use std::collections::BTreeSet;
use std::ops::Range;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::schema;
use super::Record;
use crate::error::{Error, Result};

/// Floor applied to every fitted standard deviation.
pub const STD_FLOOR: f64 = 1e-8;

/// One one-hot block: the source feature and its ordered vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalGroup {
    pub feature: String,
    pub tokens: Vec<String>,
}

/// Column layout of an encoded vector: one-hot groups, then booleans, then
/// standardized continuous values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub groups: Vec<CategoricalGroup>,
    pub boolean: Vec<String>,
    pub continuous: Vec<String>,
}

impl Layout {
    /// A layout with placeholder names, for models not tied to NSL-KDD.
    pub fn from_sizes(group_sizes: &[usize], n_boolean: usize, n_continuous: usize) -> Layout {
        Layout {
            groups: group_sizes
                .iter()
                .enumerate()
                .map(|(g, &m)| CategoricalGroup {
                    feature: format!("cat{g}"),
                    tokens: (0..m).map(|t| format!("t{t}")).collect(),
                })
                .collect(),
            boolean: (0..n_boolean).map(|i| format!("bool{i}")).collect(),
            continuous: (0..n_continuous).map(|i| format!("cont{i}")).collect(),
        }
    }

    pub fn categorical_width(&self) -> usize {
        self.groups.iter().map(|g| g.tokens.len()).sum()
    }

    pub fn width(&self) -> usize {
        self.categorical_width() + self.boolean.len() + self.continuous.len()
    }

    pub fn group_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.groups
            .iter()
            .map(|g| {
                let r = start..start + g.tokens.len();
                start = r.end;
                r
            })
            .collect()
    }

    pub fn boolean_range(&self) -> Range<usize> {
        let start = self.categorical_width();
        start..start + self.boolean.len()
    }

    pub fn continuous_range(&self) -> Range<usize> {
        let start = self.boolean_range().end;
        start..start + self.continuous.len()
    }
}

/// An encoded record.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Arc<Layout>,
}

/// Fitted encoding: vocabularies and training-set moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    layout: Arc<Layout>,
    means: Vec<f64>,
    stds: Vec<f64>,
}

/// Serializable view of a [`Preprocessor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessorManifest {
    pub layout: Layout,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub std_floor: f64,
    pub conventions: crate::Conventions,
}

impl Preprocessor {
    /// Builds vocabularies from `all_records` and standardization moments
    /// from `x_train` alone.
    pub fn fit<'a>(
        x_train: &'a [Record],
        all_records: impl IntoIterator<Item = &'a Record>,
    ) -> Result<Preprocessor> {
        if x_train.is_empty() {
            return Err(Error::EmptyTrain);
        }
        let mut vocab: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); schema::N_CATEGORICAL];
        for record in x_train.iter().chain(all_records) {
            for (set, token) in vocab.iter_mut().zip(&record.categorical) {
                set.insert(token.as_str());
            }
        }
        let groups = schema::categorical_names()
            .into_iter()
            .zip(vocab)
            .map(|(feature, tokens)| CategoricalGroup {
                feature: feature.to_string(),
                tokens: tokens.into_iter().map(String::from).collect(),
            })
            .collect();
        let layout = Layout {
            groups,
            boolean: schema::boolean_names()
                .into_iter()
                .map(String::from)
                .collect(),
            continuous: schema::continuous_names()
                .into_iter()
                .map(String::from)
                .collect(),
        };

        let n = x_train.len() as f64;
        let mut means = Vec::with_capacity(schema::N_CONTINUOUS);
        let mut stds = Vec::with_capacity(schema::N_CONTINUOUS);
        for c in 0..schema::N_CONTINUOUS {
            let column = x_train.iter().map(|r| r.continuous[c]);
            let first = x_train[0].continuous[c];
            if column.clone().all(|v| v == first) {
                // Exact mean for constant columns so they encode to exact zeros.
                means.push(first);
                stds.push(STD_FLOOR);
                continue;
            }
            let mean = column.clone().sum::<f64>() / n;
            let var = column.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            means.push(mean);
            stds.push(var.sqrt().max(STD_FLOOR));
        }
        Ok(Preprocessor {
            layout: Arc::new(layout),
            means,
            stds,
        })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn transform(&self, record: &Record) -> FeatureVector {
        let mut values = vec![0.0; self.width()];
        self.encode_into(record, &mut values);
        FeatureVector {
            values,
            layout: Arc::clone(&self.layout),
        }
    }

    /// Encodes many records into the rows of a matrix.
    pub fn transform_all<'a>(&self, records: impl IntoIterator<Item = &'a Record>) -> Array2<f64> {
        let records: Vec<&Record> = records.into_iter().collect();
        let mut out = Array2::zeros((records.len(), self.width()));
        for (mut row, record) in out.rows_mut().into_iter().zip(records) {
            self.encode_into(record, row.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn encode_into(&self, record: &Record, out: &mut [f64]) {
        out.fill(0.0);
        for ((group, range), token) in self
            .layout
            .groups
            .iter()
            .zip(self.layout.group_ranges())
            .zip(&record.categorical)
        {
            // Unknown tokens leave the block all-zero.
            if let Ok(pos) = group.tokens.binary_search(token) {
                out[range.start + pos] = 1.0;
            }
        }
        let b = self.layout.boolean_range();
        for (slot, &bit) in out[b].iter_mut().zip(&record.boolean) {
            *slot = if bit { 1.0 } else { 0.0 };
        }
        let c = self.layout.continuous_range();
        for (((slot, &v), &m), &s) in out[c]
            .iter_mut()
            .zip(&record.continuous)
            .zip(&self.means)
            .zip(&self.stds)
        {
            *slot = (v - m) / s;
        }
    }

    /// Recovers categorical tokens from an encoded vector by argmax; an
    /// all-zero block decodes to `None`.
    pub fn decode_categorical(&self, values: &[f64]) -> Vec<Option<String>> {
        self.layout
            .groups
            .iter()
            .zip(self.layout.group_ranges())
            .map(|(group, range)| {
                let block = &values[range];
                let (best, &v) = block.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
                (v > 0.0).then(|| group.tokens[best].clone())
            })
            .collect()
    }

    pub fn manifest(&self) -> PreprocessorManifest {
        PreprocessorManifest {
            layout: (*self.layout).clone(),
            means: self.means.clone(),
            stds: self.stds.clone(),
            std_floor: STD_FLOOR,
            conventions: crate::Conventions::default(),
        }
    }

    pub fn from_manifest(manifest: PreprocessorManifest) -> Result<Preprocessor> {
        let n = manifest.layout.continuous.len();
        if manifest.means.len() != n || manifest.stds.len() != n {
            return Err(Error::Format(format!(
                "manifest has {} means / {} stds for {n} continuous features",
                manifest.means.len(),
                manifest.stds.len()
            )));
        }
        if manifest.stds.iter().any(|&s| s.is_nan() || s < STD_FLOOR) {
            return Err(Error::Format("manifest std below floor".into()));
        }
        Ok(Preprocessor {
            layout: Arc::new(manifest.layout),
            means: manifest.means,
            stds: manifest.stds,
        })
    }
}
