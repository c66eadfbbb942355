//! Reference executor.
//!
//! Every operation decodes its operands to `f64`, computes in double
//! precision and re-quantizes the result into the destination tensor's
//! format. For fixed-point there is a second mode, [`FixedSemantics::Integer`],
//! that runs the same integer pipeline the emitted C runs.

pub mod intops;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::haunter::BitwidthAssignment;
use crate::ir::{Model, OpKind, TensorKind};
use crate::numrep::{FixedFormat, Format, NumRepError, RepParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpError {
    #[error("no bitwidth assigned to `{0}`")]
    Unassigned(String),
    #[error("tensor `{tensor}`: {source}")]
    Params { tensor: String, source: NumRepError },
    #[error("sample {sample}: input has {found} values, expected {expected}")]
    InputSize { sample: usize, expected: usize, found: usize },
    #[error("program declares no input but dataset sample {0} carries values")]
    UnexpectedInput(usize),
    #[error("dataset has {inputs} samples but {labels} labels")]
    LabelCount { inputs: usize, labels: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("results cover {0} and {1} samples")]
    LengthMismatch(usize, usize),
    #[error("integer semantics need fixed-point parameters")]
    NotFixedPoint,
    #[error("integer semantics support 8- and 16-bit tensors, `{tensor}` has {bits}")]
    IntegerBitwidth { tensor: String, bits: u32 },
}

/// Samples to run a model on. A program without an input runs on samples
/// with empty input vectors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Self {
        Self { inputs, labels }
    }

    /// One sample with no input, for programs that only read params.
    pub fn single_empty() -> Self {
        Self { inputs: vec![Vec::new()], labels: None }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn validate(&self, model: &Model) -> Result<(), InterpError> {
        if self.inputs.is_empty() {
            return Err(InterpError::EmptyDataset);
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.inputs.len() {
                return Err(InterpError::LabelCount { inputs: self.inputs.len(), labels: labels.len() });
            }
        }
        let expected = model.input().map(|id| model.tensor(id).cardinality());
        for (sample, x) in self.inputs.iter().enumerate() {
            match expected {
                Some(expected) if x.len() != expected => {
                    return Err(InterpError::InputSize { sample, expected, found: x.len() });
                }
                None if !x.is_empty() => return Err(InterpError::UnexpectedInput(sample)),
                _ => {}
            }
        }
        Ok(())
    }
}

/// How fixed-point parameters are executed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedSemantics {
    /// decode, compute in `f64`, re-encode
    #[default]
    QuantizeCompute,
    /// integer arithmetic with shifts, bit-identical to the emitted C
    Integer,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub log_values: bool,
    pub fixed_semantics: FixedSemantics,
}

impl RunOptions {
    pub fn logged() -> Self {
        Self { log_values: true, ..Self::default() }
    }

    pub fn integer() -> Self {
        Self { fixed_semantics: FixedSemantics::Integer, ..Self::default() }
    }
}

/// Decoded values per tensor, concatenated across samples in sample order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueMap {
    values: BTreeMap<String, Vec<f64>>,
}

impl ValueMap {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.values.get(name).map(|v| v.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(|k| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn insert(&mut self, name: &str, values: Vec<f64>) {
        self.values.insert(name.into(), values);
    }

    fn extend(&mut self, name: &str, values: &[f64]) {
        self.values.entry(name.into()).or_default().extend_from_slice(values);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutput {
    /// Decoded output tensor (empty for classifiers).
    pub values: Vec<f64>,
    pub label: Option<usize>,
    /// Integer words of the output under integer semantics.
    pub raw: Option<Vec<i64>>,
    /// False when a value left the reals (NaR, NaN, infinity).
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub outputs: Vec<SampleOutput>,
    pub value_map: Option<ValueMap>,
}

impl RunResult {
    pub fn invalid_count(&self) -> usize {
        self.outputs.iter().filter(|o| !o.valid).count()
    }
}

fn resolve_formats(model: &Model, params: &RepParams, rho: &BitwidthAssignment) -> Result<Vec<Format>, InterpError> {
    model
        .tensors()
        .iter()
        .map(|t| {
            if !t.is_quantized() || matches!(params, RepParams::Float) {
                return Ok(Format::Float);
            }
            let bits = rho.get(&t.name).ok_or_else(|| InterpError::Unassigned(t.name.clone()))?;
            params.format_for(&t.name, bits).map_err(|source| InterpError::Params { tensor: t.name.clone(), source })
        })
        .collect()
}

/// Fixed-point format of every quantized tensor, as used by integer mode
/// and by the C emitter. Labels get `None`.
pub fn fixed_formats(
    model: &Model,
    params: &RepParams,
    rho: &BitwidthAssignment,
) -> Result<Vec<Option<FixedFormat>>, InterpError> {
    if !matches!(params, RepParams::Fixed { .. }) {
        return Err(InterpError::NotFixedPoint);
    }
    let formats = resolve_formats(model, params, rho)?;
    model
        .tensors()
        .iter()
        .zip(formats)
        .map(|(t, f)| match f {
            Format::Fixed(f) if f.bits() == 8 || f.bits() == 16 => Ok(Some(f)),
            Format::Fixed(f) => Err(InterpError::IntegerBitwidth { tensor: t.name.clone(), bits: f.bits() }),
            _ => Ok(None),
        })
        .collect()
}

/// Encodes one input sample into integer words under integer semantics.
pub fn encode_input(formats: &[Option<FixedFormat>], model: &Model, sample: &[f64]) -> Vec<i64> {
    match model.input().and_then(|id| formats[id]) {
        Some(f) => sample.iter().map(|&x| f.encode(x)).collect(),
        None => Vec::new(),
    }
}

/// Runs `model` over every sample of `dataset`.
pub fn run(
    model: &Model,
    dataset: &Dataset,
    params: &RepParams,
    rho: &BitwidthAssignment,
    opts: RunOptions,
) -> Result<RunResult, InterpError> {
    dataset.validate(model)?;
    let mut map = opts.log_values.then(ValueMap::default);
    let mut outputs = Vec::with_capacity(dataset.len());

    if opts.fixed_semantics == FixedSemantics::Integer && matches!(params, RepParams::Fixed { .. }) {
        let formats = fixed_formats(model, params, rho)?;
        for sample in &dataset.inputs {
            let words = encode_input(&formats, model, sample);
            let (out, env) = run_integer_words(model, &formats, &words);
            if let Some(map) = map.as_mut() {
                for (id, t) in model.quantized_tensors() {
                    let f = formats[id].expect("quantized tensor has a format");
                    let decoded: Vec<f64> = env[id].iter().map(|&v| f.decode(v)).collect();
                    map.extend(&t.name, &decoded);
                }
            }
            outputs.push(out);
        }
    } else {
        let formats = resolve_formats(model, params, rho)?;
        for sample in &dataset.inputs {
            let (out, env) = run_sample(model, &formats, sample);
            if let Some(map) = map.as_mut() {
                for (id, t) in model.quantized_tensors() {
                    map.extend(&t.name, &env[id]);
                }
            }
            outputs.push(out);
        }
    }
    Ok(RunResult { outputs, value_map: map })
}

fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            return None;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

fn run_sample(model: &Model, formats: &[Format], sample: &[f64]) -> (SampleOutput, Vec<Vec<f64>>) {
    let mut valid = true;
    fn quantize_all(valid: &mut bool, fmt: &Format, xs: Vec<f64>) -> Vec<f64> {
        xs.into_iter()
            .map(|x| match fmt.quantize(x) {
                Ok(q) => q,
                Err(_) => {
                    *valid = false;
                    f64::NAN
                }
            })
            .collect()
    }

    let mut env: Vec<Vec<f64>> = vec![Vec::new(); model.tensors().len()];
    let mut label = None;
    for (id, t) in model.tensors().iter().enumerate() {
        match t.kind {
            TensorKind::Param => {
                env[id] = quantize_all(&mut valid, &formats[id], model.weights(id).unwrap_or(&[]).to_vec())
            }
            TensorKind::Input => env[id] = quantize_all(&mut valid, &formats[id], sample.to_vec()),
            _ => {}
        }
    }

    for ins in model.instructions() {
        let Some(dest) = ins.dest else { continue };
        let a = &env[ins.srcs[0]];
        let b = ins.srcs.get(1).map(|&s| &env[s]);
        let raw: Vec<f64> = match ins.op {
            OpKind::MatMul => {
                let (sa, sb) = (model.tensor(ins.srcs[0]).shape, model.tensor(ins.srcs[1]).shape);
                let b = b.expect("binary op");
                let mut out = vec![0.0; sa.rows * sb.cols];
                for i in 0..sa.rows {
                    for j in 0..sb.cols {
                        let mut acc = 0.0;
                        for k in 0..sa.cols {
                            acc += a[i * sa.cols + k] * b[k * sb.cols + j];
                        }
                        out[i * sb.cols + j] = acc;
                    }
                }
                out
            }
            OpKind::Add => a.iter().zip(b.expect("binary op")).map(|(x, y)| x + y).collect(),
            OpKind::Sub => a.iter().zip(b.expect("binary op")).map(|(x, y)| x - y).collect(),
            OpKind::Hadamard => a.iter().zip(b.expect("binary op")).map(|(x, y)| x * y).collect(),
            OpKind::ScalarMul(c) => a.iter().map(|x| c * x).collect(),
            OpKind::Sigmoid => a.iter().map(|&x| intops::sigmoid(x)).collect(),
            OpKind::Tanh => a.iter().map(|&x| libm::tanh(x)).collect(),
            OpKind::Relu => a.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect(),
            OpKind::Exp => a.iter().map(|&x| libm::exp(x)).collect(),
            OpKind::Reshape(_) => a.clone(),
            OpKind::ArgMax => {
                let l = argmax(a);
                if l.is_none() {
                    valid = false;
                }
                label = l;
                env[dest] = vec![l.map_or(f64::NAN, |l| l as f64)];
                continue;
            }
            OpKind::Return => unreachable!("return has no destination"),
        };
        env[dest] = quantize_all(&mut valid, &formats[dest], raw);
    }

    let out_id = model.output();
    let out = if model.is_classifier() {
        SampleOutput { values: Vec::new(), label, raw: None, valid: valid && label.is_some() }
    } else {
        let values = env[out_id].clone();
        let finite = values.iter().all(|v| v.is_finite());
        SampleOutput { values, label: None, raw: None, valid: valid && finite }
    };
    (out, env)
}

/// Integer pipeline on pre-encoded input words. Returns the output and the
/// integer value of every tensor (labels hold their index).
pub fn run_integer_words(
    model: &Model,
    formats: &[Option<FixedFormat>],
    input: &[i64],
) -> (SampleOutput, Vec<Vec<i64>>) {
    use intops::{from_real, rescale, saturate, to_real};

    let mut env: Vec<Vec<i64>> = vec![Vec::new(); model.tensors().len()];
    for (id, t) in model.tensors().iter().enumerate() {
        match t.kind {
            TensorKind::Param => {
                let f = formats[id].expect("param format");
                env[id] = model.weights(id).unwrap_or(&[]).iter().map(|&w| f.encode(w)).collect();
            }
            TensorKind::Input => {
                let f = formats[id].expect("input format");
                env[id] = input.iter().map(|&v| saturate(v, f.bits())).collect();
            }
            _ => {}
        }
    }

    let mut label = None;
    for ins in model.instructions() {
        let Some(dest) = ins.dest else { continue };
        let sa = formats[ins.srcs[0]].map(|f| f.scale()).unwrap_or(0);
        let sb = ins.srcs.get(1).and_then(|&s| formats[s]).map(|f| f.scale()).unwrap_or(0);
        let a = &env[ins.srcs[0]];
        let b = ins.srcs.get(1).map(|&s| &env[s]);
        if ins.op == OpKind::ArgMax {
            let mut best = 0;
            for (i, &v) in a.iter().enumerate() {
                if v > a[best] {
                    best = i;
                }
            }
            label = Some(best);
            env[dest] = vec![best as i64];
            continue;
        }
        let fd = formats[dest].expect("destination format");
        let (sd, bd) = (fd.scale(), fd.bits());
        let out: Vec<i64> = match ins.op {
            OpKind::MatMul => {
                let (ta, tb) = (model.tensor(ins.srcs[0]).shape, model.tensor(ins.srcs[1]).shape);
                let b = b.expect("binary op");
                let mut out = vec![0; ta.rows * tb.cols];
                for i in 0..ta.rows {
                    for j in 0..tb.cols {
                        let mut acc: i64 = 0;
                        for k in 0..ta.cols {
                            acc += a[i * ta.cols + k] * b[k * tb.cols + j];
                        }
                        out[i * tb.cols + j] = saturate(rescale(acc, sa + sb, sd), bd);
                    }
                }
                out
            }
            OpKind::Add | OpKind::Sub => {
                let common = sa.min(sb);
                let b = b.expect("binary op");
                a.iter()
                    .zip(b)
                    .map(|(&x, &y)| {
                        let (x, y) = (rescale(x, sa, common), rescale(y, sb, common));
                        let r = if ins.op == OpKind::Add { x + y } else { x - y };
                        saturate(rescale(r, common, sd), bd)
                    })
                    .collect()
            }
            OpKind::Hadamard => {
                let b = b.expect("binary op");
                a.iter().zip(b).map(|(&x, &y)| saturate(rescale(x * y, sa + sb, sd), bd)).collect()
            }
            OpKind::ScalarMul(c) => {
                let cf = scalar_format(c);
                let ci = cf.encode(c);
                a.iter().map(|&x| saturate(rescale(x * ci, sa + cf.scale(), sd), bd)).collect()
            }
            OpKind::Relu => a.iter().map(|&x| saturate(rescale(x.max(0), sa, sd), bd)).collect(),
            OpKind::Reshape(_) => a.iter().map(|&x| saturate(rescale(x, sa, sd), bd)).collect(),
            OpKind::Sigmoid => a.iter().map(|&x| from_real(intops::sigmoid(to_real(x, sa)), sd, bd)).collect(),
            OpKind::Tanh => a.iter().map(|&x| from_real(libm::tanh(to_real(x, sa)), sd, bd)).collect(),
            OpKind::Exp => a.iter().map(|&x| from_real(libm::exp(to_real(x, sa)), sd, bd)).collect(),
            OpKind::ArgMax | OpKind::Return => unreachable!(),
        };
        env[dest] = out;
    }

    let out_id = model.output();
    let out = if model.is_classifier() {
        SampleOutput { values: Vec::new(), label, raw: Some(vec![label.unwrap_or(0) as i64]), valid: true }
    } else {
        let f = formats[out_id].expect("output format");
        SampleOutput {
            values: env[out_id].iter().map(|&v| f.decode(v)).collect(),
            label: None,
            raw: Some(env[out_id].clone()),
            valid: true,
        }
    };
    (out, env)
}

/// 16-bit format for a scalar-multiply constant.
pub fn scalar_format(c: f64) -> FixedFormat {
    FixedFormat::for_maxabs(c.abs(), 16).expect("16-bit format")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    /// fraction of correct labels
    Classification,
    /// negated mean absolute error against the float reference
    Regression,
}

/// Quality of a run. Higher `score` is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub kind: MetricKind,
    pub score: f64,
    pub invalid: usize,
}

impl Accuracy {
    /// Orders by quality. Classification already counts invalid samples as
    /// wrong; regression ranks fewer invalid samples first.
    pub fn cmp_quality(&self, other: &Accuracy) -> Ordering {
        let by_score = self.score.partial_cmp(&other.score).unwrap_or(Ordering::Equal);
        match self.kind {
            MetricKind::Classification => by_score,
            MetricKind::Regression => other.invalid.cmp(&self.invalid).then(by_score),
        }
    }

    /// Mean absolute error for regression metrics.
    pub fn error(&self) -> Option<f64> {
        (self.kind == MetricKind::Regression).then_some(-self.score)
    }
}

/// Scores `res` against dataset labels when present, otherwise against the
/// float reference run.
pub fn accuracy(res: &RunResult, dataset: &Dataset, reference: &RunResult) -> Result<Accuracy, InterpError> {
    if res.outputs.len() != reference.outputs.len() {
        return Err(InterpError::LengthMismatch(res.outputs.len(), reference.outputs.len()));
    }
    let n = res.outputs.len();
    let invalid = res.invalid_count();
    let classifier = res.outputs.first().is_some_and(|o| o.label.is_some() || o.values.is_empty());
    if classifier {
        let truth: Vec<Option<usize>> = match &dataset.labels {
            Some(labels) => labels.iter().map(|&l| Some(l)).collect(),
            None => reference.outputs.iter().map(|o| o.label).collect(),
        };
        let correct =
            res.outputs.iter().zip(&truth).filter(|(o, t)| o.valid && o.label.is_some() && o.label == **t).count();
        let score = if n == 0 { 0.0 } else { correct as f64 / n as f64 };
        return Ok(Accuracy { kind: MetricKind::Classification, score, invalid });
    }
    let mae = mean_abs_error(res, reference);
    Ok(Accuracy { kind: MetricKind::Regression, score: -mae, invalid })
}

fn mean_abs_error(res: &RunResult, reference: &RunResult) -> f64 {
    let mut total = 0.0;
    let mut counted = 0usize;
    for (o, r) in res.outputs.iter().zip(&reference.outputs) {
        if !(o.valid && r.valid) || o.values.is_empty() {
            continue;
        }
        let per: f64 = o.values.iter().zip(&r.values).map(|(a, b)| (a - b).abs()).sum::<f64>() / o.values.len() as f64;
        total += per;
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Disagreement {
    /// samples whose label differs (invalid samples count)
    Labels(usize),
    MeanAbsError(f64),
}

pub fn disagreement(res: &RunResult, reference: &RunResult) -> Result<Disagreement, InterpError> {
    if res.outputs.len() != reference.outputs.len() {
        return Err(InterpError::LengthMismatch(res.outputs.len(), reference.outputs.len()));
    }
    let labelled = res.outputs.iter().chain(&reference.outputs).any(|o| o.label.is_some());
    if labelled {
        let count = res
            .outputs
            .iter()
            .zip(&reference.outputs)
            .filter(|(a, b)| !a.valid || !b.valid || a.label != b.label)
            .count();
        return Ok(Disagreement::Labels(count));
    }
    Ok(Disagreement::MeanAbsError(mean_abs_error(res, reference)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::ir::{parse, Model};

    fn posit(es: u32, bits: &[u32]) -> RepParams {
        RepParams::Posit { es: bits.iter().map(|&b| (b, es)).collect() }
    }

    fn values(m: &Model, params: &RepParams, rho: &BitwidthAssignment) -> (f64, f64) {
        let r = run(m, &Dataset::single_empty(), params, rho, RunOptions::logged()).unwrap();
        let map = r.value_map.unwrap();
        (map.get("t1").unwrap()[0], map.get("t2").unwrap()[0])
    }

    #[test]
    fn demo_values_per_bitwidth() {
        let m = demo::model();
        let (t1, t2) = values(&m, &posit(2, &[16]), &BitwidthAssignment::uniform(&m, 16));
        assert!((t1 + 6.69531).abs() < 5e-6, "{t1}");
        assert!((t2 + 6.54883).abs() < 5e-6, "{t2}");
        assert_eq!(values(&m, &posit(2, &[8]), &BitwidthAssignment::uniform(&m, 8)), (-7.0, -7.0));

        let (_, float) = values(&m, &RepParams::Float, &BitwidthAssignment::new());
        let direct = -2.139562 * 1.185109 + 1.885351 * -2.206466 + 0.146048;
        assert_eq!(float, direct);
        assert!((float + 6.549529).abs() < 1e-6);
    }

    #[test]
    fn disagreement_against_float() {
        let m = demo::model();
        let data = Dataset::single_empty();
        let reference = run(&m, &data, &RepParams::Float, &BitwidthAssignment::new(), RunOptions::default()).unwrap();
        assert_eq!(disagreement(&reference, &reference), Ok(Disagreement::MeanAbsError(0.0)));

        let low = run(&m, &data, &posit(2, &[8]), &BitwidthAssignment::uniform(&m, 8), RunOptions::default()).unwrap();
        let Disagreement::MeanAbsError(e) = disagreement(&low, &reference).unwrap() else { panic!() };
        assert!((e - 0.45047).abs() < 1e-4, "{e}");

        let mut rho = BitwidthAssignment::uniform(&m, 16);
        rho.set("t2", 8);
        let mixed = run(&m, &data, &posit(2, &[8, 16]), &rho, RunOptions::default()).unwrap();
        let acc = accuracy(&mixed, &data, &reference).unwrap();
        assert_eq!(acc.kind, MetricKind::Regression);
        assert!((acc.error().unwrap() - 0.04953).abs() < 1e-4);

        let short = RunResult { outputs: Vec::new(), value_map: None };
        assert!(disagreement(&short, &reference).is_err());
    }

    #[test]
    fn classifier_labels_and_invalid_samples() {
        let p =
            parse("param W : R[2][2] = w\ninput x : R[2][1]\nlet s = W * x\nlet c = argmax(s)\nreturn c\n").unwrap();
        let w = [("w".into(), alloc::vec![1.0, 0.0, 0.0, 1.0])].into_iter().collect();
        let m = Model::new(p, &w).unwrap();
        let data = Dataset::new(alloc::vec![alloc::vec![1.0, 2.0], alloc::vec![3.0, -1.0]], Some(alloc::vec![1, 1]));
        let reference = run(&m, &data, &RepParams::Float, &BitwidthAssignment::new(), RunOptions::default()).unwrap();
        assert_eq!(reference.outputs.iter().map(|o| o.label).collect::<Vec<_>>(), [Some(1), Some(0)]);
        let acc = accuracy(&reference, &data, &reference).unwrap();
        assert_eq!((acc.kind, acc.score), (MetricKind::Classification, 0.5));
        assert_eq!(disagreement(&reference, &reference), Ok(Disagreement::Labels(0)));

        // exp overflows binary float formats to NaN after quantizing.
        let p = parse("input x : R[1][1]\nlet y = exp(x)\nreturn y\n").unwrap();
        let m = Model::new(p, &BTreeMap::new()).unwrap();
        let data = Dataset::new(alloc::vec![alloc::vec![1000.0], alloc::vec![0.0]], None);
        let r =
            run(&m, &data, &RepParams::TruncFloat, &BitwidthAssignment::uniform(&m, 16), RunOptions::logged()).unwrap();
        assert_eq!(r.invalid_count(), 1);
        assert_eq!(r.value_map.unwrap().get("y").unwrap().len(), 2);
    }

    #[test]
    fn dataset_shape_checks() {
        let m = demo::model();
        let bad = Dataset::new(alloc::vec![alloc::vec![1.0]], None);
        let rho = BitwidthAssignment::new();
        assert_eq!(run(&m, &bad, &RepParams::Float, &rho, RunOptions::default()), Err(InterpError::UnexpectedInput(0)));
        let empty = Dataset::default();
        assert_eq!(run(&m, &empty, &RepParams::Float, &rho, RunOptions::default()), Err(InterpError::EmptyDataset));
        let r = run(&m, &Dataset::single_empty(), &posit(2, &[8]), &rho, RunOptions::default());
        assert!(matches!(r, Err(InterpError::Unassigned(_))));
    }

    #[test]
    fn integer_mode_tracks_fixed_point() {
        let p = parse(
            "param W : R[2][2] = w\nparam b : R[2][1] = b\ninput x : R[2][1]\n\
             let h = W * x\nlet z = h + b\nlet a = tanh(z)\nlet s = 0.5 * a\nlet r = relu(s)\nreturn r\n",
        )
        .unwrap();
        let w = [("w".into(), alloc::vec![0.5, -1.25, 0.75, 0.3]), ("b".into(), alloc::vec![0.1, -0.2])]
            .into_iter()
            .collect();
        let m = Model::new(p, &w).unwrap();
        let data = Dataset::new(alloc::vec![alloc::vec![0.3, -0.7], alloc::vec![-1.0, 0.25]], None);
        let reference = run(&m, &data, &RepParams::Float, &BitwidthAssignment::new(), RunOptions::logged()).unwrap();
        let profile = reference.value_map.clone().unwrap();
        let ranges = m
            .quantized_tensors()
            .map(|(_, t)| {
                let mut r = crate::numrep::ValueRange::EMPTY;
                profile.get(&t.name).unwrap().iter().for_each(|&v| r.include(v));
                (t.name.clone(), r)
            })
            .collect();
        let params = RepParams::Fixed { ranges };
        let rho = BitwidthAssignment::uniform(&m, 16);
        let int = run(&m, &data, &params, &rho, RunOptions::integer()).unwrap();
        let qc = run(&m, &data, &params, &rho, RunOptions::default()).unwrap();
        for (a, b) in int.outputs.iter().zip(&reference.outputs) {
            assert!(a.raw.is_some());
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-2, "{x} vs {y}");
            }
        }
        assert_eq!(run(&m, &data, &params, &rho, RunOptions::integer()).unwrap(), int);
        assert_ne!(qc.outputs[0].raw, int.outputs[0].raw);
        assert_eq!(run(&m, &data, &RepParams::TruncFloat, &rho, RunOptions::integer()).unwrap().outputs[0].raw, None);
        let rho8 = BitwidthAssignment::uniform(&m, 12);
        assert!(matches!(
            run(&m, &data, &params, &rho8, RunOptions::integer()),
            Err(InterpError::IntegerBitwidth { bits: 12, .. })
        ));
    }
}
