//! Synthetic traffic in the NSL-KDD line format.
//!
//! Each class has its own shape (normal sessions complete their handshake,
//! floods leave half-open connections, probes collect rejections, and so
//! on), so the detectors have something to find. Useful for tests, demos
//! and smoke runs when the real files are not at hand.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::schema::{COLUMNS, FEATURES};
use crate::dataset::{parse_reader, AttackCategory, Record};
use crate::error::Result;

pub const TRAIN_FILE: &str = "KDDTrain+.txt";
pub const TEST_FILE: &str = "KDDTest+.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub train_normal: usize,
    /// Attacks per category in the training file.
    pub train_attacks: usize,
    pub test_normal: usize,
    /// Attacks per category in the test file.
    pub test_attacks: usize,
    /// Share of attacks drawn with the normal traffic profile, so the
    /// classes overlap.
    pub camouflage: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_normal: 2000,
            train_attacks: 100,
            test_normal: 500,
            test_attacks: 100,
            camouflage: 0.15,
            seed: 7,
        }
    }
}

fn column(name: &str) -> usize {
    FEATURES
        .iter()
        .position(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

struct Line(Vec<String>);

impl Line {
    fn new() -> Self {
        Line(vec!["0".to_string(); COLUMNS])
    }

    fn set(&mut self, name: &str, v: impl ToString) -> &mut Self {
        self.0[column(name)] = v.to_string();
        self
    }

    fn count(&mut self, name: &str, v: f64) -> &mut Self {
        self.set(name, v.round().max(0.0) as i64)
    }

    fn rate(&mut self, name: &str, v: f64) -> &mut Self {
        self.set(name, format!("{:.2}", v.clamp(0.0, 1.0)))
    }
}

fn jitter(rng: &mut ChaCha8Rng, centre: f64, spread: f64) -> f64 {
    centre + rng.random_range(-spread..=spread)
}

fn bytes(rng: &mut ChaCha8Rng, median: f64) -> f64 {
    LogNormal::new(median.ln(), 0.6).unwrap().sample(rng)
}

fn one_line(rng: &mut ChaCha8Rng, category: AttackCategory, camouflage: f64) -> String {
    use AttackCategory::*;
    let mut l = Line::new();
    let profile = if category.is_attack() && rng.random_bool(camouflage) {
        Normal
    } else {
        category
    };
    let label = match profile {
        Normal => {
            let service = *["http", "smtp", "ftp_data", "domain_u", "private"]
                .choose(rng)
                .unwrap();
            let proto = if service == "domain_u" { "udp" } else { "tcp" };
            l.set("protocol_type", proto)
                .set("service", service)
                .set("flag", "SF");
            l.count("src_bytes", bytes(rng, 250.0))
                .count("dst_bytes", bytes(rng, 2000.0))
                .set("logged_in", u8::from(proto == "tcp"))
                .count("count", jitter(rng, 8.0, 6.0))
                .count("srv_count", jitter(rng, 10.0, 6.0))
                .rate("same_srv_rate", jitter(rng, 0.95, 0.05))
                .rate("diff_srv_rate", jitter(rng, 0.03, 0.03))
                .count("dst_host_count", jitter(rng, 150.0, 100.0))
                .count("dst_host_srv_count", jitter(rng, 200.0, 55.0))
                .rate("dst_host_same_srv_rate", jitter(rng, 0.9, 0.1))
                .rate("dst_host_same_src_port_rate", jitter(rng, 0.05, 0.05));
            "normal"
        }
        DoS => {
            let label = *["neptune", "smurf", "back", "teardrop"]
                .choose(rng)
                .unwrap();
            let (proto, service, flag) = match label {
                "smurf" => ("icmp", "ecr_i", "SF"),
                "teardrop" => ("udp", "private", "SF"),
                "back" => ("tcp", "http", "RSTR"),
                _ => ("tcp", "private", "S0"),
            };
            l.set("protocol_type", proto)
                .set("service", service)
                .set("flag", flag);
            l.count("src_bytes", if label == "smurf" { 1032.0 } else { 0.0 })
                .count(
                    "wrong_fragment",
                    if label == "teardrop" { 3.0 } else { 0.0 },
                )
                .count("count", jitter(rng, 400.0, 110.0))
                .count("srv_count", jitter(rng, 20.0, 15.0))
                .rate(
                    "serror_rate",
                    jitter(rng, if flag == "S0" { 1.0 } else { 0.1 }, 0.05),
                )
                .rate(
                    "srv_serror_rate",
                    jitter(rng, if flag == "S0" { 1.0 } else { 0.1 }, 0.05),
                )
                .rate("same_srv_rate", jitter(rng, 0.05, 0.05))
                .rate("diff_srv_rate", jitter(rng, 0.07, 0.03))
                .count("dst_host_count", 255.0)
                .count("dst_host_srv_count", jitter(rng, 15.0, 10.0))
                .rate("dst_host_serror_rate", jitter(rng, 0.95, 0.05));
            label
        }
        Probe => {
            let label = *["portsweep", "satan", "ipsweep", "nmap"]
                .choose(rng)
                .unwrap();
            let service = *["private", "other", "eco_i", "ftp"].choose(rng).unwrap();
            let proto = if service == "eco_i" { "icmp" } else { "tcp" };
            l.set("protocol_type", proto)
                .set("service", service)
                .set("flag", *["REJ", "RSTO", "SH"].choose(rng).unwrap());
            l.count("duration", bytes(rng, 2.0))
                .count("count", jitter(rng, 3.0, 2.0))
                .count("srv_count", jitter(rng, 2.0, 1.0))
                .rate("rerror_rate", jitter(rng, 0.9, 0.1))
                .rate("srv_rerror_rate", jitter(rng, 0.9, 0.1))
                .rate("diff_srv_rate", jitter(rng, 0.8, 0.2))
                .rate("srv_diff_host_rate", jitter(rng, 0.6, 0.3))
                .count("dst_host_count", jitter(rng, 40.0, 35.0))
                .count("dst_host_srv_count", jitter(rng, 3.0, 2.0))
                .rate("dst_host_diff_srv_rate", jitter(rng, 0.8, 0.2))
                .rate("dst_host_rerror_rate", jitter(rng, 0.85, 0.15))
                .rate("dst_host_srv_rerror_rate", jitter(rng, 0.85, 0.15));
            label
        }
        U2R => {
            let label = *["buffer_overflow", "rootkit", "perl", "loadmodule"]
                .choose(rng)
                .unwrap();
            l.set("protocol_type", "tcp")
                .set("service", "telnet")
                .set("flag", "SF");
            l.count("duration", bytes(rng, 60.0))
                .count("src_bytes", bytes(rng, 1500.0))
                .count("dst_bytes", bytes(rng, 4000.0))
                .set("logged_in", 1)
                .count("hot", jitter(rng, 2.0, 1.0))
                .count("num_compromised", jitter(rng, 1.0, 1.0))
                .set("root_shell", 1)
                .count("num_file_creations", jitter(rng, 2.0, 2.0))
                .count("num_shells", jitter(rng, 1.0, 1.0))
                .count("count", 1.0)
                .count("srv_count", 1.0)
                .count("dst_host_count", jitter(rng, 5.0, 4.0))
                .count("dst_host_srv_count", jitter(rng, 5.0, 4.0));
            label
        }
        R2L => {
            let label = *["guess_passwd", "warezclient", "ftp_write", "named"]
                .choose(rng)
                .unwrap();
            let service = match label {
                "warezclient" | "ftp_write" => "ftp",
                "named" => "domain",
                _ => "telnet",
            };
            l.set("protocol_type", "tcp")
                .set("service", service)
                .set("flag", "SF");
            l.count("duration", bytes(rng, 20.0))
                .count("src_bytes", bytes(rng, 120.0))
                .count("dst_bytes", bytes(rng, 90.0))
                .count(
                    "num_failed_logins",
                    if label == "guess_passwd" { 1.0 } else { 0.0 },
                )
                .set("is_guest_login", u8::from(service == "ftp"))
                .count("hot", jitter(rng, 1.0, 1.0))
                .count("count", jitter(rng, 2.0, 1.0))
                .count("srv_count", jitter(rng, 2.0, 1.0))
                .count("dst_host_count", jitter(rng, 20.0, 15.0))
                .count("dst_host_srv_count", jitter(rng, 2.0, 1.0))
                .rate("dst_host_same_src_port_rate", jitter(rng, 0.6, 0.4));
            label
        }
    };
    let label = if profile == category {
        label
    } else {
        camouflage_label(category)
    };
    l.0[COLUMNS - 2] = label.to_string();
    l.0[COLUMNS - 1] = rng.random_range(5..=21).to_string();
    l.0.join(",")
}

fn camouflage_label(category: AttackCategory) -> &'static str {
    match category {
        AttackCategory::DoS => "back",
        AttackCategory::Probe => "satan",
        AttackCategory::U2R => "perl",
        AttackCategory::R2L => "warezclient",
        AttackCategory::Normal => "normal",
    }
}

fn block(rng: &mut ChaCha8Rng, normal: usize, attacks: usize, camouflage: f64) -> Vec<String> {
    let mut out: Vec<String> = (0..normal)
        .map(|_| one_line(rng, AttackCategory::Normal, 0.0))
        .collect();
    for cat in AttackCategory::ATTACKS {
        out.extend((0..attacks).map(|_| one_line(rng, cat, camouflage)));
    }
    out
}

/// `(train, test)` lines.
pub fn synth_lines(cfg: &SynthConfig) -> (Vec<String>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train = block(
        &mut rng,
        cfg.train_normal,
        cfg.train_attacks,
        cfg.camouflage,
    );
    let test = block(&mut rng, cfg.test_normal, cfg.test_attacks, cfg.camouflage);
    (train, test)
}

/// Parsed `(train, test)` records.
pub fn synth_records(cfg: &SynthConfig) -> Result<(Vec<Record>, Vec<Record>)> {
    let (train, test) = synth_lines(cfg);
    Ok((
        parse_reader(train.join("\n").as_bytes(), TRAIN_FILE)?,
        parse_reader(test.join("\n").as_bytes(), TEST_FILE)?,
    ))
}

/// Writes both files into `dir` and returns their paths.
pub fn write_synth(dir: impl AsRef<Path>, cfg: &SynthConfig) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let (train, test) = synth_lines(cfg);
    let paths = (dir.join(TRAIN_FILE), dir.join(TEST_FILE));
    fs::write(&paths.0, train.join("\n") + "\n")?;
    fs::write(&paths.1, test.join("\n") + "\n")?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::split_dataset;

    #[test]
    fn lines_parse_and_split() {
        let cfg = SynthConfig {
            train_normal: 50,
            train_attacks: 5,
            test_normal: 20,
            test_attacks: 4,
            camouflage: 0.5,
            seed: 3,
        };
        let (train, test) = synth_records(&cfg).unwrap();
        assert_eq!(train.len(), 70);
        assert_eq!(test.len(), 36);
        let split = split_dataset(train, test).unwrap();
        assert_eq!(split.x_train.len(), 50);
        assert_eq!(split.x_test.len(), 20);
        assert_eq!(split.x_attack.len(), 36);
    }

    #[test]
    fn seeded() {
        let cfg = SynthConfig::default();
        assert_eq!(synth_lines(&cfg), synth_lines(&cfg));
        let other = SynthConfig {
            seed: 8,
            ..cfg.clone()
        };
        assert_ne!(synth_lines(&cfg).0, synth_lines(&other).0);
    }
}
