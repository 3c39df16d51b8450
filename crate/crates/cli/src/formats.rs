//! File formats owned by the CLI: the observation/truth CSVs, the skills
//! and prediction JSON documents, and the tidy plot CSV.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use crowdcorr::{Observation, ObservationSet};
use serde_json::{json, Value};

/// Flag mistakes that should exit with the usage code.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "usage: {}", self.0)
    }
}

impl std::error::Error for Usage {}

/// How labels appear in CSV files. Binary data defaults to `{-1, 1}`;
/// multiclass data uses class indices `0..M-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelEncoding {
    Pm1,
    Indexed,
}

impl LabelEncoding {
    pub fn resolve(flag: Option<&str>, classes: usize) -> Result<Self> {
        match flag {
            None => Ok(if classes == 2 { Self::Pm1 } else { Self::Indexed }),
            Some("pm1") => {
                if classes != 2 {
                    bail!(Usage("label encoding pm1 requires --classes 2".into()));
                }
                Ok(Self::Pm1)
            }
            Some("indexed") => Ok(Self::Indexed),
            Some(other) => bail!(Usage(format!(
                "unknown label encoding '{other}' (expected pm1 or indexed)"
            ))),
        }
    }

    pub fn parse(&self, raw: &str, classes: usize) -> Result<usize> {
        let raw = raw.trim();
        match self {
            Self::Pm1 => match raw {
                "-1" => Ok(0),
                "1" | "+1" => Ok(1),
                _ => bail!("label '{raw}' is not one of -1, 1"),
            },
            Self::Indexed => {
                let v: usize = raw
                    .parse()
                    .map_err(|_| anyhow!("label '{raw}' is not a class index"))?;
                if v >= classes {
                    bail!("label {v} out of range for {classes} classes");
                }
                Ok(v)
            }
        }
    }

    pub fn format(&self, class: usize) -> String {
        match self {
            Self::Pm1 => {
                if class == 1 {
                    "1".into()
                } else {
                    "-1".into()
                }
            }
            Self::Indexed => class.to_string(),
        }
    }
}

/// Reads the `worker_id,task_id,label` CSV; ids are interned in first
/// appearance order.
pub fn read_observations(
    path: &Path,
    classes: usize,
    encoding: LabelEncoding,
) -> Result<ObservationSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    {
        let headers = reader.headers().context("missing CSV header")?;
        let expected = ["worker_id", "task_id", "label"];
        let actual: Vec<&str> = headers.iter().collect();
        if actual != expected {
            bail!(
                "{}: expected header worker_id,task_id,label, found {}",
                path.display(),
                actual.join(",")
            );
        }
    }

    let mut worker_index: HashMap<String, usize> = HashMap::new();
    let mut task_index: HashMap<String, usize> = HashMap::new();
    let mut worker_ids: Vec<String> = Vec::new();
    let mut task_ids: Vec<String> = Vec::new();
    let mut triples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2; // header is line 1
        let record = record.with_context(|| format!("{}:{line}: malformed row", path.display()))?;
        if record.len() != 3 {
            bail!("{}:{line}: expected 3 fields, found {}", path.display(), record.len());
        }
        let worker = *worker_index
            .entry(record[0].to_string())
            .or_insert_with(|| {
                worker_ids.push(record[0].to_string());
                worker_ids.len() - 1
            });
        let task = *task_index.entry(record[1].to_string()).or_insert_with(|| {
            task_ids.push(record[1].to_string());
            task_ids.len() - 1
        });
        let label = encoding
            .parse(&record[2], classes)
            .with_context(|| format!("{}:{line}", path.display()))?;
        triples.push(Observation { worker, task, label });
    }
    if triples.is_empty() {
        bail!("{}: no observations", path.display());
    }
    ObservationSet::with_ids(worker_ids, task_ids, classes, triples)
        .with_context(|| format!("{}: invalid observation set", path.display()))
}

pub fn write_observations(
    path: &Path,
    obs: &ObservationSet,
    encoding: LabelEncoding,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writer.write_record(["worker_id", "task_id", "label"])?;
    for o in obs.observations() {
        writer.write_record([
            obs.worker_ids()[o.worker].as_str(),
            obs.task_ids()[o.task].as_str(),
            &encoding.format(o.label),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads `task_id,label` ground truth.
pub fn read_truth(
    path: &Path,
    classes: usize,
    encoding: LabelEncoding,
) -> Result<Vec<(String, usize)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.with_context(|| format!("{}:{line}: malformed row", path.display()))?;
        if record.len() != 2 {
            bail!("{}:{line}: expected 2 fields, found {}", path.display(), record.len());
        }
        let label = encoding
            .parse(&record[1], classes)
            .with_context(|| format!("{}:{line}", path.display()))?;
        rows.push((record[0].to_string(), label));
    }
    if rows.is_empty() {
        bail!("{}: no ground-truth rows", path.display());
    }
    Ok(rows)
}

pub fn write_truth(
    path: &Path,
    task_ids: &[String],
    labels: &[usize],
    encoding: LabelEncoding,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writer.write_record(["task_id", "label"])?;
    for (id, &label) in task_ids.iter().zip(labels) {
        writer.write_record([id.as_str(), &encoding.format(label)])?;
    }
    writer.flush()?;
    Ok(())
}

/// One worker row of the skills JSON.
#[derive(Debug, Clone)]
pub struct SkillRow {
    pub id: String,
    pub s: f64,
    pub magnitude: Option<f64>,
    pub sign: Option<i8>,
    pub n_tasks: u64,
}

pub fn skills_document(rows: &[SkillRow], meta: Value) -> Value {
    let workers: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut obj = json!({
                "id": r.id,
                "s": r.s,
                "n_tasks": r.n_tasks,
            });
            if let Some(m) = r.magnitude {
                obj["magnitude"] = json!(m);
            }
            if let Some(sg) = r.sign {
                obj["sign"] = json!(sg);
            }
            obj
        })
        .collect();
    json!({ "workers": workers, "meta": meta })
}

/// Worker id, skill, and labeled-task count from a skills JSON.
pub type SkillTriple = (String, f64, u64);

/// Reads a skills JSON into `(rows, meta)`.
pub fn read_skills(path: &Path) -> Result<(Vec<SkillTriple>, Value)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let doc: Value =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?;
    let workers = doc["workers"]
        .as_array()
        .ok_or_else(|| anyhow!("{}: missing 'workers' array", path.display()))?;
    let mut rows = Vec::with_capacity(workers.len());
    for (k, wv) in workers.iter().enumerate() {
        let id = wv["id"]
            .as_str()
            .ok_or_else(|| anyhow!("{}: workers[{k}] has no id", path.display()))?;
        let s = wv["s"]
            .as_f64()
            .ok_or_else(|| anyhow!("{}: workers[{k}] has no numeric s", path.display()))?;
        let n = wv["n_tasks"].as_u64().unwrap_or(0);
        rows.push((id.to_string(), s, n));
    }
    Ok((rows, doc["meta"].clone()))
}

pub fn write_json(path: Option<&Path>, doc: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")
            .with_context(|| format!("cannot write {}", p.display()))?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            if let Err(e) = writeln!(out, "{text}") {
                // A closed pipe (e.g. `| head`) is not an error.
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

/// Appends `x,mean,std,series` rows, writing the header when the file is new.
pub fn append_plot_rows(path: &Path, rows: &[(f64, f64, f64, String)]) -> Result<()> {
    let new_file = !path.exists();
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    let mut writer = csv::Writer::from_writer(file);
    if new_file {
        writer.write_record(["x", "mean", "std", "series"])?;
    }
    for (x, mean, std, series) in rows {
        writer.write_record([
            format!("{x}"),
            format!("{mean}"),
            format!("{std}"),
            series.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn unix_timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
