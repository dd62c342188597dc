//! NSL-KDD ingestion: parsing, the normal/attack re-split, and the feature
//! encoding pipeline.

mod archive;
mod category;
mod preprocess;
pub mod schema;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use schema::{FeatureKind, COLUMNS, FEATURES, N_BOOLEAN, N_CATEGORICAL, N_CONTINUOUS};

pub use archive::{EncodedArchive, EncodedSet, SampleMeta};
pub use category::{map_attack_category, AttackCategory, ATTACK_NAMES};
pub use preprocess::{
    CategoricalGroup, FeatureVector, Layout, Preprocessor, PreprocessorManifest, STD_FLOOR,
};

/// One NSL-KDD line with the difficulty column dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// `protocol_type`, `service`, `flag`.
    pub categorical: [String; N_CATEGORICAL],
    /// `land`, `logged_in`, `is_host_login`, `is_guest_login`.
    pub boolean: [bool; N_BOOLEAN],
    /// Remaining numeric columns in file order.
    pub continuous: [f64; N_CONTINUOUS],
    pub label: String,
}

impl Record {
    pub fn category(&self) -> Result<AttackCategory> {
        map_attack_category(&self.label)
    }

    pub fn is_normal(&self) -> bool {
        self.label == "normal"
    }
}

/// Which raw file a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Train,
    Test,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Train => "train",
            Source::Test => "test",
        }
    }
}

/// Reads a `KDDTrain+` / `KDDTest+` style file.
pub fn parse_nslkdd(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_reader(BufReader::new(file), path)
}

/// Parses NSL-KDD lines from any reader; `origin` only labels error messages.
pub fn parse_reader<R: BufRead>(reader: R, origin: impl AsRef<Path>) -> Result<Vec<Record>> {
    let origin = origin.as_ref();
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let record = parse_line(line).map_err(|msg| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            msg,
        })?;
        records.push(record);
    }
    Ok(records)
}

fn parse_line(line: &str) -> Result<Record, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != COLUMNS {
        return Err(format!("expected {COLUMNS} fields, found {}", fields.len()));
    }
    let mut categorical: [String; N_CATEGORICAL] = Default::default();
    let mut boolean = [false; N_BOOLEAN];
    let mut continuous = [0.0; N_CONTINUOUS];
    let (mut ci, mut bi, mut ni) = (0, 0, 0);
    for ((name, kind), raw) in FEATURES.iter().zip(&fields) {
        match kind {
            FeatureKind::Categorical => {
                if raw.is_empty() {
                    return Err(format!("empty categorical field `{name}`"));
                }
                categorical[ci] = raw.to_string();
                ci += 1;
            }
            FeatureKind::Boolean => {
                boolean[bi] = match *raw {
                    "0" => false,
                    "1" => true,
                    other => return Err(format!("boolean field `{name}` is {other:?}")),
                };
                bi += 1;
            }
            FeatureKind::Continuous => {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| format!("non-numeric value {raw:?} in `{name}`"))?;
                if !v.is_finite() {
                    return Err(format!("non-finite value in `{name}`"));
                }
                continuous[ni] = v;
                ni += 1;
            }
        }
    }
    let label = fields[FEATURES.len()].to_string();
    map_attack_category(&label).map_err(|e| e.to_string())?;
    Ok(Record {
        categorical,
        boolean,
        continuous,
        label,
    })
}

/// An attack record kept together with its file of origin.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackRecord {
    pub record: Record,
    pub source: Source,
    pub category: AttackCategory,
}

/// The normal-only training/test sets plus all attacks from both files.
#[derive(Debug, Clone, Default)]
pub struct DatasetSplit {
    pub x_train: Vec<Record>,
    pub x_test: Vec<Record>,
    pub x_attack: Vec<AttackRecord>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.x_train.len() + self.x_test.len() + self.x_attack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every record of the split, used to build categorical vocabularies.
    pub fn all_records(&self) -> impl Iterator<Item = &Record> {
        self.x_train
            .iter()
            .chain(&self.x_test)
            .chain(self.x_attack.iter().map(|a| &a.record))
    }
}

/// Partitions parsed train/test records: normals of each file go to their
/// own set, attacks from both files are pooled.
pub fn split_dataset(train: Vec<Record>, test: Vec<Record>) -> Result<DatasetSplit> {
    let mut split = DatasetSplit::default();
    for (source, records) in [(Source::Train, train), (Source::Test, test)] {
        for record in records {
            let category = record.category()?;
            match (category, source) {
                (AttackCategory::Normal, Source::Train) => split.x_train.push(record),
                (AttackCategory::Normal, Source::Test) => split.x_test.push(record),
                _ => split.x_attack.push(AttackRecord {
                    record,
                    source,
                    category,
                }),
            }
        }
    }
    if split.x_train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    Ok(split)
}
