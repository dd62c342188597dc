use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betavae-ids"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = bin(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMALL_MODEL: &str =
    r#"{"encoder_hidden": [10], "latent_dim": 2, "decoder_hidden": [10], "batch_size": 64}"#;

#[test]
fn pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth",
            "--out-dir",
            "data",
            "--train-normal",
            "300",
            "--test-normal",
            "60",
            "--attacks",
            "10",
        ],
    );
    let digest = ok(
        d,
        &[
            "preprocess",
            "--train",
            "data/KDDTrain+.txt",
            "--test",
            "data/KDDTest+.txt",
            "--manifest",
            "manifest.json",
        ],
    );
    assert_eq!(digest.split_whitespace().next().unwrap().len(), 64);
    assert!(d.join("archive.bin").exists());

    fs::write(d.join("model.json"), SMALL_MODEL).unwrap();
    let args = [
        "train",
        "--archive",
        "archive.bin",
        "--beta",
        "0.001",
        "--seed",
        "3",
        "--config",
        "model.json",
        "--epochs",
        "2",
        "--report",
        "train.json",
    ];
    let first = ok(d, &args);
    let second = ok(d, &args);
    assert_eq!(first, second, "same seed, same checkpoint digest");

    ok(
        d,
        &[
            "score",
            "--checkpoint",
            "checkpoint.bin",
            "--archive",
            "archive.bin",
            "--ks",
            "1,5,20",
        ],
    );
    let scores = fs::read_to_string(d.join("scores.csv")).unwrap();
    assert!(scores.starts_with("# beta=0.001\n# seed=3\n# projection=mean\n"));
    assert_eq!(
        scores.lines().filter(|l| !l.starts_with('#')).count(),
        1 + 60 + 4 * 20
    );

    let eval = ok(d, &["eval", "--scores", "scores.csv", "--out-dir", "eval"]);
    assert_eq!(eval.lines().count(), 4);
    assert!(d.join("eval/metrics.json").exists());
    assert!(d.join("eval/roc_z_20_global.csv").exists());
    assert!(d.join("eval/roc_rec_u2r.csv").exists());
}

#[test]
fn sweep_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth",
            "--out-dir",
            "data",
            "--train-normal",
            "200",
            "--test-normal",
            "40",
            "--attacks",
            "5",
        ],
    );
    let cfg = format!(
        r#"{{"betas": [0, 0.00001], "seeds": [1, 2], "ks": [1, 10], "train_file": "data/KDDTrain+.txt",
            "test_file": "data/KDDTest+.txt", "out_dir": "sw", "highlight": {{"beta": 0.00001, "k": 10}},
            "model": {}}}"#,
        SMALL_MODEL.replace('}', r#", "epochs": 2}"#)
    );
    fs::write(d.join("sweep.json"), cfg).unwrap();
    let table = ok(d, &["sweep", "--config", "sweep.json"]);
    assert_eq!(table.lines().count(), 2 + 2);
    assert!(d.join("sw/report/highlight/roc_global_z_10.csv").exists());

    let listed = ok(
        d,
        &[
            "report",
            "--result",
            "sw/sweep.json",
            "--out-dir",
            "again",
            "--format",
            "delimited",
        ],
    );
    assert!(listed.contains("table.csv"));
    assert!(!listed.contains("table.md"));
    assert_eq!(
        fs::read_to_string(d.join("again/table.csv")).unwrap(),
        fs::read_to_string(d.join("sw/report/table.csv")).unwrap()
    );
}

#[test]
fn exit_codes_name_the_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("bad.txt"), "0,tcp,http,SF,1\n").unwrap();
    let out = bin(
        d,
        &["preprocess", "--train", "bad.txt", "--test", "bad.txt"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[data]: "));

    fs::write(d.join("sweep.json"), r#"{"seeds": [1, 1]}"#).unwrap();
    let out = bin(d, &["sweep", "--config", "sweep.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = bin(d, &["eval", "--scores", "missing.csv"]);
    assert_eq!(out.status.code(), Some(1));

    let out = bin(d, &["train", "--beta", "0"]);
    assert_eq!(out.status.code(), Some(2), "usage errors");
}

#[test]
fn k_beyond_the_index_is_an_eval_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth",
            "--out-dir",
            "data",
            "--train-normal",
            "50",
            "--test-normal",
            "10",
            "--attacks",
            "2",
        ],
    );
    ok(
        d,
        &[
            "preprocess",
            "--train",
            "data/KDDTrain+.txt",
            "--test",
            "data/KDDTest+.txt",
        ],
    );
    fs::write(d.join("model.json"), SMALL_MODEL).unwrap();
    ok(
        d,
        &[
            "train",
            "--archive",
            "archive.bin",
            "--beta",
            "0",
            "--seed",
            "1",
            "--config",
            "model.json",
            "--epochs",
            "1",
        ],
    );
    let out = bin(
        d,
        &[
            "score",
            "--checkpoint",
            "checkpoint.bin",
            "--archive",
            "archive.bin",
            "--ks",
            "1,51",
        ],
    );
    assert_eq!(out.status.code(), Some(5));
}
