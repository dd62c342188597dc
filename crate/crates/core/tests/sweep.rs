use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use betavae_ids::experiment::{
    aggregate, emit_report, run_sweep, CellOutcome, CellRecord, CellSpec, Column, Highlight,
    ReportFormat, SweepConfig, DEFAULT_BETAS,
};
use betavae_ids::model::ModelConfig;
use betavae_ids::synth::{write_synth, SynthConfig};

fn tiny_config(dir: &Path, betas: Vec<f64>, seeds: Vec<u64>, ks: Vec<usize>) -> SweepConfig {
    let synth = SynthConfig {
        train_normal: 300,
        train_attacks: 10,
        test_normal: 80,
        test_attacks: 15,
        seed: 11,
        ..SynthConfig::default()
    };
    let (train_file, test_file) = write_synth(dir.join("data"), &synth).unwrap();
    SweepConfig {
        betas,
        ks,
        seeds,
        train_file,
        test_file,
        out_dir: dir.join("out"),
        model: ModelConfig {
            encoder_hidden: vec![12],
            latent_dim: 2,
            decoder_hidden: vec![12],
            epochs: 3,
            batch_size: 64,
            ..ModelConfig::default()
        },
        highlight: Highlight { beta: 1e-5, k: 10 },
        ..SweepConfig::default()
    }
}

#[test]
fn one_cell_trains_once_and_yields_two_aurocs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), vec![0.0], vec![5], vec![1]);
    let (result, stats) = run_sweep(&cfg).unwrap();
    assert_eq!(stats.trained, 1);
    assert_eq!(result.cells.len(), 1);
    let rec = result.cells[0].record.as_ref().unwrap();
    assert_eq!(rec.zk_auroc.len() + 1, 2);
    assert_eq!(result.means.len(), 1);
}

#[test]
fn rerun_hits_the_cache_and_reproduces_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), vec![0.0, 1e-5], vec![1, 2], vec![1, 5, 10]);
    let (first, s1) = run_sweep(&cfg).unwrap();
    assert_eq!((s1.trained, s1.cached, s1.failed), (4, 0, 0));
    let (second, s2) = run_sweep(&cfg).unwrap();
    assert_eq!((s2.trained, s2.cached), (0, 4));
    assert_eq!(first, second);

    // a changed epoch budget is a different cell
    let mut longer = cfg.clone();
    longer.model.epochs = 4;
    let (_, s3) = run_sweep(&longer).unwrap();
    assert_eq!(s3.trained, 4);
}

#[test]
fn a_different_dataset_never_reuses_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), vec![0.0], vec![1], vec![1]);
    let (a, _) = run_sweep(&cfg).unwrap();
    let other = SynthConfig {
        train_normal: 301,
        train_attacks: 10,
        test_normal: 80,
        test_attacks: 15,
        seed: 11,
        ..SynthConfig::default()
    };
    write_synth(dir.path().join("data"), &other).unwrap();
    let (b, s) = run_sweep(&cfg).unwrap();
    assert_eq!(s.trained, 1);
    assert_ne!(a.dataset_digest, b.dataset_digest);
    assert_ne!(a.cells[0].artifacts, b.cells[0].artifacts);
}

#[test]
fn identical_seed_gives_identical_cell() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let (a, _) = run_sweep(&tiny_config(d1.path(), vec![1e-3], vec![9], vec![1, 10])).unwrap();
    let (b, _) = run_sweep(&tiny_config(d2.path(), vec![1e-3], vec![9], vec![1, 10])).unwrap();
    assert_eq!(a.cells[0].record, b.cells[0].record);
}

#[test]
fn default_grid_shape() {
    let cfg = SweepConfig::default();
    cfg.validate().unwrap();
    assert_eq!(cfg.cells().len(), 28);

    let cells = cfg
        .cells()
        .into_iter()
        .map(|spec| {
            let zk: Vec<f64> = (0..13)
                .map(|i| 0.9 + 0.001 * i as f64 + 1e-4 * spec.seed as f64)
                .collect();
            CellOutcome::ok(
                spec,
                "x".into(),
                fake_record(spec, zk, 0.95 + spec.beta * 0.01),
            )
        })
        .collect();
    let result = aggregate(&cfg, "d".into(), cells);
    assert_eq!(result.means.len(), 7);
    for row in &result.means {
        assert_eq!(row.zk.len() + 1, 14);
    }
}

fn fake_record(spec: CellSpec, zk_auroc: Vec<f64>, rec_auroc: f64) -> CellRecord {
    CellRecord {
        cache_key: String::new(),
        dataset_digest: "d".into(),
        beta: spec.beta,
        seed: spec.seed,
        checkpoint_digest: String::new(),
        rec_auroc,
        zk_auroc,
    }
}

#[test]
fn means_are_exact_and_gaps_are_skipped() {
    let cfg = SweepConfig {
        betas: vec![0.0, 0.5],
        seeds: vec![1, 2, 3],
        ks: vec![1, 2],
        ..SweepConfig::default()
    };
    let mut cells = Vec::new();
    for spec in cfg.cells() {
        if spec.beta == 0.5 && spec.seed == 2 {
            cells.push(CellOutcome::gap(spec, "x".into(), "diverged".into()));
            continue;
        }
        let v = 0.7 + 0.013 * spec.seed as f64 + spec.beta;
        cells.push(CellOutcome::ok(
            spec,
            "x".into(),
            fake_record(spec, vec![v, v / 2.0], v * 0.9),
        ));
    }
    let result = aggregate(&cfg, "d".into(), cells.clone());
    assert_eq!(result.gaps().count(), 1);
    for row in &result.means {
        let done: Vec<&CellRecord> = cells
            .iter()
            .filter(|c| c.beta == row.beta)
            .filter_map(|c| c.record.as_ref())
            .collect();
        assert_eq!(row.seeds.len(), done.len());
        let mean = done.iter().map(|r| r.rec_auroc).sum::<f64>() / done.len() as f64;
        assert!((row.rec - mean).abs() < 1e-12);
        let mean0 = done.iter().map(|r| r.zk_auroc[0]).sum::<f64>() / done.len() as f64;
        assert!((row.zk[0] - mean0).abs() < 1e-12);
    }
    assert_eq!(result.row(0.5).unwrap().seeds, [1, 3]);
}

#[test]
fn reconstruction_best_when_latent_trails() {
    let cfg = SweepConfig {
        betas: vec![0.5],
        seeds: vec![1],
        ks: vec![1, 5000],
        ..SweepConfig::default()
    };
    let spec = cfg.cells()[0];
    let cells = vec![CellOutcome::ok(
        spec,
        "x".into(),
        fake_record(spec, vec![0.7508, 0.9167], 0.9628),
    )];
    let result = aggregate(&cfg, "d".into(), cells);
    assert_eq!(result.means[0].best, Column::Reconstruction);

    let dir = tempfile::tempdir().unwrap();
    emit_report(&result, &[ReportFormat::TableText], dir.path(), None).unwrap();
    let table = fs::read_to_string(dir.path().join("table.md")).unwrap();
    let body: Vec<&str> = table
        .lines()
        .skip(2)
        .filter(|l| l.starts_with('|'))
        .collect();
    assert_eq!(body.len(), 1);
    assert_eq!(body[0].matches("**").count(), 2);
    assert!(body[0].trim_end().ends_with("**96.28** |"));
    assert!(!body[0].contains('_'));
}

/// Re-derives both marker kinds from the emitted numbers alone.
#[test]
fn emitted_markers_match_an_independent_scan() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), vec![0.0, 1e-5, 0.5], vec![1, 2], vec![1, 5, 10]);
    let (result, _) = run_sweep(&cfg).unwrap();
    let report = dir.path().join("report");
    let files = emit_report(&result, &ReportFormat::ALL, &report, Some(&cfg.out_dir)).unwrap();
    assert!(files
        .iter()
        .any(|p| p.ends_with("highlight/joint_scores.csv")));

    let text = fs::read_to_string(report.join("table.csv")).unwrap();
    // detector, mean, best flag, beats-rec flag
    type Row = (String, f64, bool, Option<bool>);
    let mut rows: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let beats = (!f[5].is_empty()).then(|| f[5] == "1");
        rows.entry(f[0].to_string()).or_default().push((
            f[1].to_string(),
            f[2].parse().unwrap(),
            f[4] == "1",
            beats,
        ));
    }
    assert_eq!(rows.len(), 3);
    for cols in rows.values() {
        let rec = cols.iter().find(|c| c.0 == "rec").unwrap().1;
        let mut best = 0;
        for (i, c) in cols.iter().enumerate() {
            if c.1 > cols[best].1 {
                best = i;
            }
            if c.0 != "rec" {
                assert_eq!(c.3, Some(c.1 > rec));
            }
        }
        for (i, c) in cols.iter().enumerate() {
            assert_eq!(c.2, i == best, "{}", c.0);
        }
    }

    let json: betavae_ids::experiment::SweepResult =
        serde_json::from_str(&fs::read_to_string(report.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json, result);

    let fig1 = fs::read_to_string(report.join("fig1.csv")).unwrap();
    assert_eq!(fig1.lines().count(), 1 + 3 * 3);
}

#[test]
fn config_file_overrides_only_given_keys() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sweep.json");
    fs::write(&p, r#"{"seeds": [7, 8], "model": {"epochs": 5}}"#).unwrap();
    let cfg = SweepConfig::from_json_file(&p).unwrap();
    assert_eq!(cfg.seeds, [7, 8]);
    assert_eq!(cfg.model.epochs, 5);
    assert_eq!(cfg.model.batch_size, 2048);
    assert_eq!(cfg.betas, DEFAULT_BETAS);

    fs::write(&p, r#"{"seeds": [7, 7]}"#).unwrap();
    assert!(SweepConfig::from_json_file(&p).is_err());
    fs::write(&p, r#"{"betas": []}"#).unwrap();
    assert!(SweepConfig::from_json_file(&p).is_err());
}
