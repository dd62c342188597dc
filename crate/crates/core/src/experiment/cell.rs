use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{score_archive, SweepConfig};
use crate::dataset::EncodedArchive;
use crate::error::{Error, Result};
use crate::eval::evaluate_records;
use crate::model::{save_checkpoint, train, Checkpoint, ModelConfig};
use crate::scoring::{write_scores, DetectorConfig, ScoresHeader};
use crate::Conventions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub beta: f64,
    pub seed: u64,
}

/// What a finished cell leaves in `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cache_key: String,
    pub dataset_digest: String,
    pub beta: f64,
    pub seed: u64,
    pub checkpoint_digest: String,
    pub rec_auroc: f64,
    /// Same order as the sweep's k list.
    pub zk_auroc: Vec<f64>,
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    dataset_digest: &'a str,
    model: ModelConfig,
    detector: DetectorConfig,
    conventions: Conventions,
    version: &'static str,
}

/// Hex SHA-256 over everything that determines a cell's numbers.
pub fn cache_key(dataset_digest: &str, config: &SweepConfig, cell: CellSpec) -> String {
    let material = KeyMaterial {
        dataset_digest,
        model: config.model_for(cell),
        detector: config.detector(),
        conventions: Conventions::default(),
        version: env!("CARGO_PKG_VERSION"),
    };
    let json = serde_json::to_vec(&material).expect("key material serializes");
    hex::encode(Sha256::digest(&json))
}

fn cached(dir: &Path, key: &str, dataset_digest: &str) -> Option<CellRecord> {
    let text = fs::read_to_string(dir.join("result.json")).ok()?;
    let rec: CellRecord = serde_json::from_str(&text).ok()?;
    (rec.cache_key == key && rec.dataset_digest == dataset_digest).then_some(rec)
}

/// Trains, scores and evaluates one cell inside `dir`, or returns the cached
/// record. The flag is true when a model was trained.
pub fn run_cell(
    archive: &EncodedArchive,
    dataset_digest: &str,
    config: &SweepConfig,
    spec: CellSpec,
    dir: &Path,
) -> Result<(CellRecord, bool)> {
    let key = cache_key(dataset_digest, config, spec);
    if let Some(rec) = cached(dir, &key, dataset_digest) {
        log::info!("cell beta={} seed={}: cached", spec.beta, spec.seed);
        return Ok((rec, false));
    }
    fs::create_dir_all(dir)?;
    let model_cfg = config.model_for(spec);
    log::info!("cell beta={} seed={}: training", spec.beta, spec.seed);
    let (model, report) = train(archive, &model_cfg)?;
    let checkpoint = Checkpoint {
        model,
        config: model_cfg,
        manifest: Some(archive.preprocessor.manifest()),
    };
    let checkpoint_digest = save_checkpoint(&checkpoint, dir.join("checkpoint.bin"))?;
    if checkpoint_digest != report.checkpoint_digest {
        return Err(Error::Format("checkpoint digest changed on save".into()));
    }
    fs::write(
        dir.join("train.json"),
        serde_json::to_string_pretty(&report)?,
    )?;

    let detector = config.detector();
    let records = score_archive(&checkpoint.model, archive, &detector, spec.seed)?;
    let header = ScoresHeader {
        beta: spec.beta,
        seed: spec.seed,
        projection: detector.projection,
        ks: detector.ks.clone(),
    };
    write_scores(dir.join("scores.csv"), &header, &records)?;
    let (metrics, _) = evaluate_records(&records, &detector.ks)?;
    fs::write(
        dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics)?,
    )?;

    let record = CellRecord {
        cache_key: key,
        dataset_digest: dataset_digest.to_string(),
        beta: spec.beta,
        seed: spec.seed,
        checkpoint_digest,
        rec_auroc: metrics.rec_auroc(),
        zk_auroc: metrics.zk_auroc(),
    };
    // written last and renamed into place: its presence marks a complete cell
    let tmp = dir.join("result.json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(&record)?)?;
    fs::rename(tmp, dir.join("result.json"))?;
    Ok((record, true))
}
