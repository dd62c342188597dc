use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use betavae_ids::dataset::EncodedArchive;
use betavae_ids::eval::{evaluate_records, write_roc_points};
use betavae_ids::experiment::{
    emit_report, preprocess, run_sweep, score_archive, ReportFormat, SweepConfig, SweepResult,
};
use betavae_ids::model::{load_checkpoint, save_checkpoint, train, Checkpoint, ModelConfig};
use betavae_ids::scoring::{
    read_scores, write_scores, DetectorConfig, ProjectionMode, ScoresHeader, DEFAULT_KS,
};
use betavae_ids::synth::{write_synth, SynthConfig};
use betavae_ids::{Error, ErrorCategory};
use clap::{Parser, Subcommand};

/// β-VAE anomaly detection on NSL-KDD traffic.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the raw files and write the encoded split archive.
    Preprocess {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "archive.bin")]
        out: PathBuf,
        /// Also write the preprocessing manifest as JSON.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Train one model on an archive's normal training rows.
    Train {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        seed: u64,
        /// Model settings as JSON; flags below take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long, default_value = "checkpoint.bin")]
        out: PathBuf,
        /// Per-epoch losses as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score the archive's test normals and attacks with both detectors.
    Score {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        archive: PathBuf,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
        ks: Vec<usize>,
        #[arg(long, default_value = "mean")]
        projection: ProjectionMode,
        /// Noise seed for sampled projection; defaults to the training seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "scores.csv")]
        out: PathBuf,
    },
    /// ROC curves and AUROC for every detector, globally and per category.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value = "eval")]
        out_dir: PathBuf,
    },
    /// Run the β × seed grid and write the report.
    Sweep {
        /// Sweep settings as JSON; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Rewrite tables and plot data from a sweep result.
    Report {
        #[arg(long)]
        result: PathBuf,
        #[arg(long, default_value = "report")]
        out_dir: PathBuf,
        /// table-text, delimited or json; repeatable. Default: all.
        #[arg(long = "format")]
        formats: Vec<String>,
        /// Directory holding `cells/`; defaults to the result file's directory.
        #[arg(long)]
        cache_root: Option<PathBuf>,
    },
    /// Write synthetic train and test files in the NSL-KDD format.
    Synth {
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        train_normal: usize,
        #[arg(long, default_value_t = 500)]
        test_normal: usize,
        /// Attacks per category in each file.
        #[arg(long, default_value_t = 100)]
        attacks: usize,
        /// Share of attacks that look like normal traffic.
        #[arg(long, default_value_t = 0.15)]
        camouflage: f64,
    },
}

fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    let category = err
        .chain()
        .find_map(|e| e.downcast_ref::<Error>())
        .map(Error::category);
    match category {
        Some(ErrorCategory::Config) => (2, "config"),
        Some(ErrorCategory::Data) => (3, "data"),
        Some(ErrorCategory::Training) => (4, "train"),
        Some(ErrorCategory::Evaluation) => (5, "eval"),
        Some(ErrorCategory::Io) | None => (1, "io"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, tag) = exit_code(&e);
            eprintln!("error[{tag}]: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Preprocess {
            train,
            test,
            out,
            manifest,
        } => {
            let archive = preprocess(&train, &test)?;
            let digest = archive.save(&out)?;
            if let Some(m) = manifest {
                write_json(&m, &archive.preprocessor.manifest())?;
            }
            println!("{digest}  {}", out.display());
        }
        Command::Train {
            archive,
            beta,
            seed,
            config,
            epochs,
            batch_size,
            learning_rate,
            out,
            report,
        } => {
            let mut cfg: ModelConfig = match config {
                Some(p) => serde_json::from_str(&fs::read_to_string(&p)?).map_err(Error::from)?,
                None => ModelConfig::default(),
            };
            cfg.beta = beta;
            cfg.seed = seed;
            cfg.epochs = epochs.unwrap_or(cfg.epochs);
            cfg.batch_size = batch_size.unwrap_or(cfg.batch_size);
            cfg.learning_rate = learning_rate.unwrap_or(cfg.learning_rate);
            let (archive, _) = EncodedArchive::load(&archive)?;
            let (model, train_report) = train(&archive, &cfg)?;
            let checkpoint = Checkpoint {
                model,
                config: cfg,
                manifest: Some(archive.preprocessor.manifest()),
            };
            let digest = save_checkpoint(&checkpoint, &out)?;
            if let Some(r) = report {
                write_json(&r, &train_report)?;
            }
            if let Some(last) = train_report.epochs.last() {
                log::info!(
                    "final loss {:.6} (rec {:.6}, kl {:.6})",
                    last.total,
                    last.l_rec,
                    last.l_kl
                );
            }
            println!("{digest}  {}", out.display());
        }
        Command::Score {
            checkpoint,
            archive,
            ks,
            projection,
            seed,
            out,
        } => {
            let ck = load_checkpoint(&checkpoint)?;
            let (archive, _) = EncodedArchive::load(&archive)?;
            if ck
                .manifest
                .as_ref()
                .is_some_and(|m| *m != archive.preprocessor.manifest())
            {
                return Err(Error::Format(
                    "checkpoint was trained under a different preprocessing manifest".into(),
                )
                .into());
            }
            let detector = DetectorConfig {
                ks,
                threshold: None,
                projection,
            };
            let seed = seed.unwrap_or(ck.config.seed);
            let records = score_archive(&ck.model, &archive, &detector, seed)?;
            let header = ScoresHeader {
                beta: ck.config.beta,
                seed,
                projection,
                ks: detector.ks,
            };
            write_scores(&out, &header, &records)?;
            println!("{} samples  {}", records.len(), out.display());
        }
        Command::Eval { scores, out_dir } => {
            let (header, records) = read_scores(&scores)?;
            let (metrics, curves) = evaluate_records(&records, &header.ks)?;
            fs::create_dir_all(&out_dir)?;
            write_json(&out_dir.join("metrics.json"), &metrics)?;
            for (name, curve) in &curves {
                write_roc_points(out_dir.join(format!("roc_{name}.csv")), curve)?;
            }
            for d in &metrics.detectors {
                println!("{:>8}  AUROC {:.4}", d.detector, d.global.auroc);
            }
        }
        Command::Sweep {
            config,
            out_dir,
            workers,
            epochs,
        } => {
            let mut cfg = match config {
                Some(p) => SweepConfig::from_json_file(&p)?,
                None => SweepConfig::default(),
            };
            cfg.out_dir = out_dir.unwrap_or(cfg.out_dir);
            cfg.workers = workers.unwrap_or(cfg.workers);
            cfg.model.epochs = epochs.unwrap_or(cfg.model.epochs);
            let (result, stats) = run_sweep(&cfg)?;
            log::info!(
                "{} trained, {} cached, {} failed",
                stats.trained,
                stats.cached,
                stats.failed
            );
            let report_dir = cfg.out_dir.join("report");
            emit_report(&result, &ReportFormat::ALL, &report_dir, Some(&cfg.out_dir))?;
            print!("{}", fs::read_to_string(report_dir.join("table.md"))?);
            if stats.failed > 0 {
                bail!(
                    "{} of {} cells failed; see the report",
                    stats.failed,
                    result.cells.len()
                );
            }
        }
        Command::Report {
            result,
            out_dir,
            formats,
            cache_root,
        } => {
            let sweep: SweepResult =
                serde_json::from_str(&fs::read_to_string(&result)?).map_err(Error::from)?;
            if sweep.means.is_empty() {
                return Err(Error::Config("sweep result has no completed cells".into()).into());
            }
            let formats = if formats.is_empty() {
                ReportFormat::ALL.to_vec()
            } else {
                formats
                    .iter()
                    .map(|f| f.parse())
                    .collect::<Result<_, _>>()?
            };
            let root = cache_root
                .unwrap_or_else(|| result.parent().unwrap_or(Path::new(".")).to_path_buf());
            for p in emit_report(&sweep, &formats, &out_dir, Some(&root))? {
                println!("{}", p.display());
            }
        }
        Command::Synth {
            out_dir,
            seed,
            train_normal,
            test_normal,
            attacks,
            camouflage,
        } => {
            let cfg = SynthConfig {
                train_normal,
                train_attacks: attacks,
                test_normal,
                test_attacks: attacks,
                camouflage,
                seed,
            };
            let (a, b) = write_synth(&out_dir, &cfg)?;
            println!("{}\n{}", a.display(), b.display());
        }
    }
    Ok(())
}
