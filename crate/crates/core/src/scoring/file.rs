//! Delimited scores file: `#`-prefixed `key=value` header lines, then CSV
//! with columns `id,split,label,category,rec,z_<k>...`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ProjectionMode, ScoreRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresHeader {
    pub beta: f64,
    pub seed: u64,
    pub projection: ProjectionMode,
    pub ks: Vec<usize>,
}

pub fn write_scores(
    path: impl AsRef<Path>,
    header: &ScoresHeader,
    records: &[ScoreRecord],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# beta={}", header.beta)?;
    writeln!(w, "# seed={}", header.seed)?;
    writeln!(w, "# projection={}", header.projection.as_str())?;
    let mut csv = csv::Writer::from_writer(w);
    let mut cols: Vec<String> = ["id", "split", "label", "category", "rec"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(header.ks.iter().map(|k| format!("z_{k}")));
    csv.write_record(&cols)?;
    for r in records {
        if r.zk.len() != header.ks.len() {
            return Err(Error::Shape(format!(
                "record {} has {} Z_k values",
                r.id,
                r.zk.len()
            )));
        }
        let mut row = vec![
            r.id.to_string(),
            r.split.clone(),
            r.label.clone(),
            r.category.to_string(),
            format!("{:e}", r.rec),
        ];
        row.extend(r.zk.iter().map(|v| format!("{v:e}")));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<(ScoresHeader, Vec<ScoreRecord>)> {
    let path = path.as_ref();
    let bad = |m: String| Error::Format(format!("{}: {m}", path.display()));
    let mut reader = BufReader::new(File::open(path)?);
    let (mut beta, mut seed, mut projection) = (None, None, None);
    let mut line = String::new();
    let mut header_bytes = 0u64;
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 || !line.starts_with('#') {
            break;
        }
        header_bytes += n as u64;
        let body = line.trim_start_matches('#').trim();
        if let Some((k, v)) = body.split_once('=') {
            match k.trim() {
                "beta" => beta = v.trim().parse::<f64>().ok(),
                "seed" => seed = v.trim().parse::<u64>().ok(),
                "projection" => projection = v.trim().parse::<ProjectionMode>().ok(),
                _ => {}
            }
        }
    }
    let mut file = File::open(path)?;
    std::io::Seek::seek(&mut file, std::io::SeekFrom::Start(header_bytes))?;
    let mut csv = csv::Reader::from_reader(BufReader::new(file));
    let cols = csv.headers()?.clone();
    if cols.len() < 5 || &cols[0] != "id" || &cols[4] != "rec" {
        return Err(bad("unexpected column header".into()));
    }
    let ks = cols
        .iter()
        .skip(5)
        .map(|c| {
            c.strip_prefix("z_")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| bad(format!("bad column {c:?}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut records = Vec::new();
    for row in csv.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| bad(format!("bad number {:?}", &row[i])))
        };
        records.push(ScoreRecord {
            id: row[0].parse().map_err(|_| bad("bad id".into()))?,
            split: row[1].to_string(),
            label: row[2].to_string(),
            category: row[3].parse()?,
            rec: num(4)?,
            zk: (5..row.len()).map(num).collect::<Result<_>>()?,
        });
    }
    let header = ScoresHeader {
        beta: beta.ok_or_else(|| bad("missing beta".into()))?,
        seed: seed.ok_or_else(|| bad("missing seed".into()))?,
        projection: projection.ok_or_else(|| bad("missing projection".into()))?,
        ks,
    };
    Ok((header, records))
}
