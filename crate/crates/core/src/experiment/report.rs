use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::{Column, SweepResult};
use crate::dataset::AttackCategory;
use crate::error::{Error, Result};
use crate::eval::{
    per_category_eval, roc_curve, write_roc_points, CurveSummary, Detector, LabeledScores,
};
use crate::scoring::read_scores;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Markdown grid, percentages to two decimals.
    TableText,
    /// Long-form CSV at full precision.
    Delimited,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [
        ReportFormat::TableText,
        ReportFormat::Delimited,
        ReportFormat::Json,
    ];
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table-text" => Ok(ReportFormat::TableText),
            "delimited" => Ok(ReportFormat::Delimited),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }
}

/// Writes the requested formats plus the plot data into `out_dir`. The
/// highlighted cell's files need the cell artifacts, found under
/// `cache_root`; without it they are skipped.
pub fn emit_report(
    result: &SweepResult,
    formats: &[ReportFormat],
    out_dir: &Path,
    cache_root: Option<&Path>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let p = out_dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    for f in formats {
        match f {
            ReportFormat::TableText => put("table.md", table_text(result))?,
            ReportFormat::Delimited => {
                put("table.csv", table_csv(result))?;
                put("cells.csv", cells_csv(result))?;
            }
            ReportFormat::Json => put("sweep.json", serde_json::to_string_pretty(result)?)?,
        }
    }
    let (latent, rec) = fig1(result);
    put("fig1.csv", latent)?;
    put("fig1_rec.csv", rec)?;
    if let Some(root) = cache_root {
        written.extend(highlight(result, root, &out_dir.join("highlight"))?);
    }
    Ok(written)
}

fn columns(result: &SweepResult) -> Vec<Column> {
    result
        .ks
        .iter()
        .map(|&k| Column::Latent(k))
        .chain([Column::Reconstruction])
        .collect()
}

/// `**x**` marks the best mean of a row, `_x_` a `Z_k` mean above the
/// reconstruction mean.
fn table_text(result: &SweepResult) -> String {
    let cols = columns(result);
    let mut s = String::from("| beta |");
    for c in &cols {
        match c {
            Column::Latent(k) => write!(s, " Z_{k} |").unwrap(),
            Column::Reconstruction => s.push_str(" L_rec |"),
        }
    }
    s.push_str("\n|---:|");
    s.push_str(&"---:|".repeat(cols.len()));
    s.push('\n');
    for row in &result.means {
        write!(s, "| {} |", row.beta).unwrap();
        for (i, c) in cols.iter().enumerate() {
            let mut cell = format!("{:.2}", 100.0 * row.value(&result.ks, *c).unwrap());
            if i < row.zk_beats_rec.len() && row.zk_beats_rec[i] {
                cell = format!("_{cell}_");
            }
            if *c == row.best {
                cell = format!("**{cell}**");
            }
            write!(s, " {cell} |").unwrap();
        }
        s.push('\n');
    }
    let gaps: Vec<_> = result.gaps().collect();
    if !gaps.is_empty() {
        s.push_str("\nMissing cells:\n\n");
        for g in gaps {
            writeln!(
                s,
                "- beta={} seed={}: {}",
                g.beta,
                g.seed,
                g.error.as_deref().unwrap_or("")
            )
            .unwrap();
        }
    }
    s
}

fn table_csv(result: &SweepResult) -> String {
    let mut s = String::from("beta,detector,mean_auroc,n_seeds,best,beats_rec\n");
    for row in &result.means {
        for (i, c) in columns(result).into_iter().enumerate() {
            let beats = row
                .zk_beats_rec
                .get(i)
                .map(|&b| u8::from(b).to_string())
                .unwrap_or_default();
            writeln!(
                s,
                "{},{c},{},{},{},{beats}",
                row.beta,
                row.value(&result.ks, c).unwrap(),
                row.seeds.len(),
                u8::from(c == row.best)
            )
            .unwrap();
        }
    }
    s
}

fn cells_csv(result: &SweepResult) -> String {
    let mut s = String::from("beta,seed,detector,auroc,checkpoint_digest\n");
    for cell in &result.cells {
        match &cell.record {
            Some(r) => {
                for (k, a) in result.ks.iter().zip(&r.zk_auroc) {
                    writeln!(
                        s,
                        "{},{},z_{k},{a},{}",
                        cell.beta, cell.seed, r.checkpoint_digest
                    )
                    .unwrap();
                }
                writeln!(
                    s,
                    "{},{},rec,{},{}",
                    cell.beta, cell.seed, r.rec_auroc, r.checkpoint_digest
                )
                .unwrap();
            }
            None => writeln!(s, "{},{},gap,,", cell.beta, cell.seed).unwrap(),
        }
    }
    s
}

/// `(β, k, mean AUROC)` triples, and the reconstruction mean per β.
fn fig1(result: &SweepResult) -> (String, String) {
    let mut latent = String::from("beta,k,mean_auroc\n");
    let mut rec = String::from("beta,mean_auroc\n");
    for row in &result.means {
        for (k, v) in result.ks.iter().zip(&row.zk) {
            writeln!(latent, "{},{k},{v}", row.beta).unwrap();
        }
        writeln!(rec, "{},{}", row.beta, row.rec).unwrap();
    }
    (latent, rec)
}

#[derive(Serialize)]
struct HighlightSummary {
    beta: f64,
    seed: u64,
    k: usize,
    global: Vec<(String, CurveSummary)>,
    per_category: Vec<(String, AttackCategory, CurveSummary)>,
}

/// Global and per-class ROC points for both detectors, and the joint
/// `(rec, Z_k, category)` scores, from the first completed seed of the
/// highlighted β.
fn highlight(result: &SweepResult, cache_root: &Path, dir: &Path) -> Result<Vec<PathBuf>> {
    let h = result.highlight;
    let Some(ki) = result.ks.iter().position(|&k| k == h.k) else {
        log::warn!("highlight k={} not in the k list; skipping", h.k);
        return Ok(Vec::new());
    };
    let Some(cell) = result
        .cells
        .iter()
        .find(|c| c.beta == h.beta && c.record.is_some())
    else {
        log::warn!("no completed cell for highlight beta={}; skipping", h.beta);
        return Ok(Vec::new());
    };
    let (_, records) = read_scores(cache_root.join(&cell.artifacts).join("scores.csv"))?;
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut summary = HighlightSummary {
        beta: h.beta,
        seed: cell.seed,
        k: h.k,
        global: Vec::new(),
        per_category: Vec::new(),
    };
    for (name, det) in [
        ("rec".to_string(), Detector::Reconstruction),
        (format!("z_{}", h.k), Detector::Latent(ki)),
    ] {
        let ls = LabeledScores::from_records(&records, det)?;
        let global = roc_curve(&ls)?;
        let p = dir.join(format!("roc_global_{name}.csv"));
        write_roc_points(&p, &global)?;
        written.push(p);
        summary.global.push((name.clone(), global.summary()));
        for (cat, curve) in per_category_eval(&ls)? {
            let p = dir.join(format!("roc_{cat}_{name}.csv"));
            write_roc_points(&p, &curve)?;
            written.push(p);
            summary
                .per_category
                .push((name.clone(), cat, curve.summary()));
        }
    }
    let mut joint = format!("rec,z_{},category,label\n", h.k);
    for r in &records {
        writeln!(
            joint,
            "{:e},{:e},{},{}",
            r.rec, r.zk[ki], r.category, r.label
        )
        .unwrap();
    }
    let p = dir.join("joint_scores.csv");
    fs::write(&p, joint)?;
    written.push(p);
    let p = dir.join("summary.json");
    fs::write(&p, serde_json::to_string_pretty(&summary)?)?;
    written.push(p);
    Ok(written)
}
