use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{AttackCategory, DatasetSplit, Preprocessor, PreprocessorManifest, Source};
use crate::container;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"BVIDSARC";
const VERSION: u32 = 1;

/// Per-row metadata carried beside the encoded features. Never a model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub label: String,
    pub category: AttackCategory,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSet {
    pub features: Array2<f64>,
    pub samples: Vec<SampleMeta>,
}

impl EncodedSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Encoded `X_train`, `X_test`, `X_attack` together with the fitted encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedArchive {
    pub preprocessor: Preprocessor,
    pub train: EncodedSet,
    pub test: EncodedSet,
    pub attack: EncodedSet,
}

#[derive(Serialize, Deserialize)]
struct SetHeader {
    name: String,
    rows: usize,
    labels: Vec<String>,
    /// (index into `labels`, source) per row.
    samples: Vec<(u32, Source)>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    manifest: PreprocessorManifest,
    sets: Vec<SetHeader>,
}

impl EncodedArchive {
    /// Fits the preprocessor on the split and encodes all three sets.
    pub fn build(split: &DatasetSplit) -> Result<EncodedArchive> {
        let pre = Preprocessor::fit(&split.x_train, split.all_records())?;
        let normal = |source| {
            move |_: &_| SampleMeta {
                label: "normal".into(),
                category: AttackCategory::Normal,
                source,
            }
        };
        let train = EncodedSet {
            features: pre.transform_all(&split.x_train),
            samples: split.x_train.iter().map(normal(Source::Train)).collect(),
        };
        let test = EncodedSet {
            features: pre.transform_all(&split.x_test),
            samples: split.x_test.iter().map(normal(Source::Test)).collect(),
        };
        let attack = EncodedSet {
            features: pre.transform_all(split.x_attack.iter().map(|a| &a.record)),
            samples: split
                .x_attack
                .iter()
                .map(|a| SampleMeta {
                    label: a.record.label.clone(),
                    category: a.category,
                    source: a.source,
                })
                .collect(),
        };
        Ok(EncodedArchive {
            preprocessor: pre,
            train,
            test,
            attack,
        })
    }

    pub fn width(&self) -> usize {
        self.preprocessor.width()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let sets = [
            ("train", &self.train),
            ("test", &self.test),
            ("attack", &self.attack),
        ];
        let header = Header {
            manifest: self.preprocessor.manifest(),
            sets: sets
                .iter()
                .map(|(name, set)| {
                    let mut labels: Vec<String> = Vec::new();
                    let samples = set
                        .samples
                        .iter()
                        .map(|s| {
                            let idx = match labels.iter().position(|l| *l == s.label) {
                                Some(i) => i,
                                None => {
                                    labels.push(s.label.clone());
                                    labels.len() - 1
                                }
                            };
                            (idx as u32, s.source)
                        })
                        .collect();
                    SetHeader {
                        name: name.to_string(),
                        rows: set.len(),
                        labels,
                        samples,
                    }
                })
                .collect(),
        };
        let payload = sets.iter().flat_map(|(_, s)| s.features.iter().copied());
        container::encode(MAGIC, VERSION, &header, payload)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<EncodedArchive> {
        let decoded: container::Decoded<Header> = container::decode(bytes, MAGIC, VERSION)?;
        let Header { manifest, sets } = decoded.header;
        let pre = Preprocessor::from_manifest(manifest)?;
        let width = pre.width();
        if sets.len() != 3 {
            return Err(Error::Format(format!(
                "expected 3 sets, found {}",
                sets.len()
            )));
        }
        let total: usize = sets.iter().map(|s| s.rows).sum();
        if total * width != decoded.payload.len() {
            return Err(Error::Format("payload size does not match header".into()));
        }
        let mut offset = 0;
        let mut out = Vec::with_capacity(3);
        for set in sets {
            let n = set.rows * width;
            let features = Array2::from_shape_vec(
                (set.rows, width),
                decoded.payload[offset..offset + n].to_vec(),
            )
            .map_err(|e| Error::Format(e.to_string()))?;
            offset += n;
            if set.samples.len() != set.rows {
                return Err(Error::Format(format!(
                    "set {} metadata length mismatch",
                    set.name
                )));
            }
            let samples = set
                .samples
                .iter()
                .map(|&(idx, source)| {
                    let label = set
                        .labels
                        .get(idx as usize)
                        .ok_or_else(|| Error::Format("label index out of range".into()))?
                        .clone();
                    let category = super::map_attack_category(&label)?;
                    Ok(SampleMeta {
                        label,
                        category,
                        source,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(EncodedSet { features, samples });
        }
        let attack = out.pop().unwrap();
        let test = out.pop().unwrap();
        let train = out.pop().unwrap();
        Ok(EncodedArchive {
            preprocessor: pre,
            train,
            test,
            attack,
        })
    }

    /// Writes the archive and returns its content digest.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<String> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, &bytes)?;
        Ok(container::trailing_digest(&bytes))
    }

    /// Reads an archive, returning it with its content digest.
    pub fn load(path: impl AsRef<Path>) -> Result<(EncodedArchive, String)> {
        let bytes = std::fs::read(path)?;
        let archive = Self::from_bytes(&bytes)?;
        Ok((archive, container::trailing_digest(&bytes)))
    }

    /// SHA-256 of the serialized archive.
    pub fn digest(&self) -> Result<String> {
        Ok(container::trailing_digest(&self.to_bytes()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests::line;
    use crate::dataset::{parse_reader, split_dataset};

    fn archive() -> EncodedArchive {
        let train = parse_reader(
            [
                line("tcp", "http", "SF", "normal"),
                line("udp", "private", "SF", "normal"),
                line("tcp", "private", "S0", "neptune"),
            ]
            .join("\n")
            .as_bytes(),
            "train",
        )
        .unwrap();
        let test = parse_reader(
            [
                line("tcp", "http", "SF", "normal"),
                line("icmp", "ecr_i", "SF", "smurf"),
            ]
            .join("\n")
            .as_bytes(),
            "test",
        )
        .unwrap();
        EncodedArchive::build(&split_dataset(train, test).unwrap()).unwrap()
    }

    #[test]
    fn bytes_round_trip() {
        let a = archive();
        assert_eq!((a.train.len(), a.test.len(), a.attack.len()), (2, 1, 2));
        let back = EncodedArchive::from_bytes(&a.to_bytes().unwrap()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.attack.samples[1].category, AttackCategory::DoS);
        assert_eq!(back.attack.samples[1].source, Source::Test);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(archive().digest().unwrap(), archive().digest().unwrap());
    }
}
