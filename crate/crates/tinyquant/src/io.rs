//! File formats: program text, weights, datasets, live-range traces,
//! assignments and ledgers.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use tinyquant_core::haunter::{BitwidthAssignment, LedgerEntry};
use tinyquant_core::interp::Dataset;
use tinyquant_core::ir::{parse, Model};
use tinyquant_core::memplan::LiveRange;

fn flatten(v: &Value, out: &mut Vec<f64>) -> Result<()> {
    match v {
        Value::Number(n) => out.push(n.as_f64().context("number out of range")?),
        Value::Array(items) => {
            for item in items {
                flatten(item, out)?;
            }
        }
        other => bail!("expected a number or an array of numbers, found {other}"),
    }
    Ok(())
}

/// Flattens a number or nested array of numbers in row-major order.
pub fn flat_values(v: &Value) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    flatten(v, &mut out)?;
    Ok(out)
}

/// Weights: a JSON object mapping keys to numbers or (nested) arrays.
pub fn parse_weights(text: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    let doc: BTreeMap<String, Value> = serde_json::from_str(text).context("weights must be a JSON object")?;
    doc.into_iter()
        .map(|(k, v)| {
            let values = flat_values(&v).with_context(|| format!("weights entry `{k}`"))?;
            Ok((k, values))
        })
        .collect()
}

#[derive(Deserialize)]
struct DatasetFile {
    inputs: Vec<Value>,
    #[serde(default)]
    labels: Option<Vec<usize>>,
}

/// Dataset: `{"inputs": [tensor, ...], "labels": [int, ...]}` with labels
/// optional and each tensor a (nested) array in row-major order.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let doc: DatasetFile = serde_json::from_str(text).context("dataset must be {\"inputs\": [...]}")?;
    let inputs = doc
        .inputs
        .iter()
        .enumerate()
        .map(|(i, v)| flat_values(v).with_context(|| format!("dataset sample {i}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(inputs, doc.labels))
}

pub fn dataset_json(d: &Dataset) -> String {
    serde_json::to_string(d).expect("dataset serializes")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TraceFile {
    Wrapped { ranges: Vec<LiveRange> },
    Bare(Vec<LiveRange>),
}

/// Live-range trace: `{"ranges": [{"name", "size", "start", "end"}, ...]}`
/// or the bare array.
pub fn parse_trace(text: &str) -> Result<Vec<LiveRange>> {
    let t: TraceFile = serde_json::from_str(text).context("trace must list {name, size, start, end} ranges")?;
    Ok(match t {
        TraceFile::Wrapped { ranges } | TraceFile::Bare(ranges) => ranges,
    })
}

pub fn trace_json(ranges: &[LiveRange]) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        ranges: &'a [LiveRange],
    }
    serde_json::to_string_pretty(&Out { ranges }).expect("trace serializes")
}

pub fn parse_assignment(text: &str) -> Result<BitwidthAssignment> {
    serde_json::from_str(text).context("assignment must map tensor names to bitwidths")
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Parses the program, binds weights (absent file: no weights) and checks
/// shapes.
pub fn load_model(program: &Path, weights: Option<&Path>) -> Result<Model> {
    let text = read(program)?;
    let program = parse(&text).with_context(|| format!("parsing {}", program.display()))?;
    let weights = match weights {
        Some(p) => parse_weights(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => BTreeMap::new(),
    };
    Ok(Model::new(program, &weights)?)
}

/// The dataset file, or one empty sample for programs without an input.
pub fn load_dataset(path: Option<&Path>, model: &Model) -> Result<Dataset> {
    match path {
        Some(p) => parse_dataset(&read(p)?).with_context(|| format!("in {}", p.display())),
        None if model.input().is_none() => Ok(Dataset::single_empty()),
        None => bail!("the program reads an input; pass a dataset with --data"),
    }
}

#[derive(Serialize)]
struct LedgerLine<'a> {
    rho: &'a BitwidthAssignment,
    planned_ram_bytes: u64,
    metric: f64,
    invalid: usize,
    stage: tinyquant_core::haunter::Stage,
}

/// One JSON object per line: `{rho, planned_ram_bytes, metric, ...}`.
pub fn ledger_jsonl(ledger: &[LedgerEntry]) -> String {
    let mut out = Vec::new();
    for e in ledger {
        let line = LedgerLine {
            rho: &e.rho,
            planned_ram_bytes: e.planned_ram_bytes,
            metric: e.accuracy.score,
            invalid: e.accuracy.invalid,
            stage: e.stage,
        };
        serde_json::to_writer(&mut out, &line).expect("ledger serializes");
        out.write_all(b"\n").expect("in-memory write");
    }
    String::from_utf8(out).expect("JSON is UTF-8")
}
