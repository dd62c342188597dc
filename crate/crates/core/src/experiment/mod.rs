//! The β × seed sweep: one trained model per cell, both detectors scored on
//! every held-out sample, AUROCs aggregated into a β × detector grid.
//!
//! Cells are cached under `cells/<key>/`, where the key hashes everything
//! that can change a cell's numbers: the dataset digest, the model and
//! detector settings, the loss conventions and the crate version. A rerun
//! only trains what is missing.

mod cell;
mod report;
mod result;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{parse_nslkdd, split_dataset, EncodedArchive};
use crate::error::{Error, Result};
use crate::model::{BetaVae, ModelConfig};
use crate::rng::{stream_rng, Stream};
use crate::scoring::{
    build_latent_index, score_sets, DetectorConfig, ProjectionMode, ScoreRecord, DEFAULT_KS,
};

pub use cell::{cache_key, run_cell, CellRecord, CellSpec};
pub use report::{emit_report, ReportFormat};
pub use result::{aggregate, CellOutcome, Column, MeanRow, SweepResult};

/// Default β grid.
pub const DEFAULT_BETAS: [f64; 7] = [0.0, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5];

/// The cell whose per-class ROC and joint scores are exported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Highlight {
    pub beta: f64,
    pub k: usize,
}

impl Default for Highlight {
    fn default() -> Self {
        Highlight {
            beta: 1e-5,
            k: 5000,
        }
    }
}

/// Sweep settings. Every field has a default, so a config file only needs
/// the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub train_file: PathBuf,
    pub test_file: PathBuf,
    /// Holds the archive, the cell cache, `sweep.json` and `report/`.
    pub out_dir: PathBuf,
    /// Base model settings; `beta` and `seed` are set per cell.
    pub model: ModelConfig,
    pub projection: ProjectionMode,
    /// Cells trained concurrently.
    pub workers: usize,
    pub highlight: Highlight,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            betas: DEFAULT_BETAS.to_vec(),
            ks: DEFAULT_KS.to_vec(),
            seeds: vec![1, 2, 3, 4],
            train_file: PathBuf::from("data/KDDTrain+.txt"),
            test_file: PathBuf::from("data/KDDTest+.txt"),
            out_dir: PathBuf::from("sweep"),
            model: ModelConfig::default(),
            projection: ProjectionMode::Mean,
            workers: 1,
            highlight: Highlight::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<SweepConfig> {
        let cfg: SweepConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.betas.is_empty() || self.seeds.is_empty() || self.ks.is_empty() {
            return bad("beta, seed and k lists must be non-empty");
        }
        if self.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("beta values must be finite and non-negative");
        }
        let distinct: BTreeSet<u64> = self.betas.iter().map(|b| b.to_bits()).collect();
        if distinct.len() != self.betas.len() {
            return bad("beta values must be distinct");
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return bad("seeds must be distinct");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        self.detector().validate(usize::MAX)?;
        self.model.validate()
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            ks: self.ks.clone(),
            threshold: None,
            projection: self.projection,
        }
    }

    /// Every (β, seed) cell, β-major.
    pub fn cells(&self) -> Vec<CellSpec> {
        self.betas
            .iter()
            .flat_map(|&beta| self.seeds.iter().map(move |&seed| CellSpec { beta, seed }))
            .collect()
    }

    pub fn model_for(&self, cell: CellSpec) -> ModelConfig {
        ModelConfig {
            beta: cell.beta,
            seed: cell.seed,
            ..self.model.clone()
        }
    }
}

/// Parses both files, splits them and encodes the three sets.
pub fn preprocess(
    train_file: impl AsRef<Path>,
    test_file: impl AsRef<Path>,
) -> Result<EncodedArchive> {
    let train = parse_nslkdd(train_file)?;
    let test = parse_nslkdd(test_file)?;
    let split = split_dataset(train, test)?;
    log::info!(
        "split: {} train normals, {} test normals, {} attacks",
        split.x_train.len(),
        split.x_test.len(),
        split.x_attack.len()
    );
    EncodedArchive::build(&split)
}

/// Scores the archive's test normals and attacks, indexing its training
/// normals. Sampled-mode noise comes from the seed's scoring stream.
pub fn score_archive(
    model: &BetaVae,
    archive: &EncodedArchive,
    detector: &DetectorConfig,
    seed: u64,
) -> Result<Vec<ScoreRecord>> {
    detector.validate(archive.train.len())?;
    let mut rng = stream_rng(seed, Stream::ScoreNoise);
    let index = build_latent_index(
        model,
        archive.train.features.view(),
        detector.projection,
        &mut rng,
    )?;
    score_sets(
        model,
        &index,
        &[("test", &archive.test), ("attack", &archive.attack)],
        detector,
        &mut rng,
    )
}

/// Counts from one invocation of [`run_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepStats {
    pub trained: usize,
    pub cached: usize,
    pub failed: usize,
}

/// Runs every cell not already cached, then aggregates. Writes the archive,
/// the cells and `sweep.json` under `out_dir`.
pub fn run_sweep(config: &SweepConfig) -> Result<(SweepResult, SweepStats)> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;
    let archive = preprocess(&config.train_file, &config.test_file)?;
    config.detector().validate(archive.train.len())?;
    let dataset_digest = archive.save(config.out_dir.join("archive.bin"))?;
    log::info!("dataset digest {dataset_digest}");

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let specs = config.cells();
    let runs: Vec<(CellOutcome, Option<bool>)> = pool.install(|| {
        use rayon::prelude::*;
        specs
            .par_iter()
            .map(|&spec| {
                let key = cache_key(&dataset_digest, config, spec);
                let dir = PathBuf::from("cells").join(&key);
                match run_cell(
                    &archive,
                    &dataset_digest,
                    config,
                    spec,
                    &config.out_dir.join(&dir),
                ) {
                    Ok((record, trained)) => (CellOutcome::ok(spec, dir, record), Some(trained)),
                    Err(e) => {
                        log::error!("cell beta={} seed={} failed: {e}", spec.beta, spec.seed);
                        (CellOutcome::gap(spec, dir, e.to_string()), None)
                    }
                }
            })
            .collect()
    });

    let mut stats = SweepStats::default();
    for (_, t) in &runs {
        match t {
            Some(true) => stats.trained += 1,
            Some(false) => stats.cached += 1,
            None => stats.failed += 1,
        }
    }
    let cells = runs.into_iter().map(|(c, _)| c).collect();
    let result = aggregate(config, dataset_digest, cells);
    fs::write(
        config.out_dir.join("sweep.json"),
        serde_json::to_string_pretty(&result)?,
    )?;
    Ok((result, stats))
}
