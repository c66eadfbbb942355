use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_shapes, Expr, Program, Shape, ShapeError};

/// Index into [`Model::tensors`]: params first, then the input, then body
/// bindings in source order.
pub type TensorId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OpKind {
    MatMul,
    Add,
    Sub,
    Hadamard,
    ScalarMul(f64),
    Sigmoid,
    Tanh,
    Relu,
    Exp,
    ArgMax,
    Reshape(Shape),
    Return,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::MatMul => "matmul",
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Hadamard => "hadamard",
            OpKind::ScalarMul(_) => "scalar-mul",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Tanh => "tanh",
            OpKind::Relu => "relu",
            OpKind::Exp => "exp",
            OpKind::ArgMax => "argmax",
            OpKind::Reshape(_) => "reshape",
            OpKind::Return => "return",
        }
    }
}

/// One linearized statement. The final instruction is always `Return`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub index: usize,
    pub op: OpKind,
    pub dest: Option<TensorId>,
    pub srcs: Vec<TensorId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorKind {
    /// Read-only weights, flash resident.
    Param,
    /// Model input, RAM resident.
    Input,
    /// Result of a body binding, RAM resident.
    Intermediate,
    /// Argmax result; an integer class index rather than a quantized tensor.
    Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Shape,
    pub kind: TensorKind,
}

impl TensorInfo {
    pub fn cardinality(&self) -> usize {
        self.shape.cardinality()
    }

    /// Tensors that carry a bitwidth in an assignment.
    pub fn is_quantized(&self) -> bool {
        self.kind != TensorKind::Label
    }

    /// Tensors that occupy the scratch buffer.
    pub fn in_ram(&self) -> bool {
        matches!(self.kind, TensorKind::Input | TensorKind::Intermediate)
    }
}

fn tensor_names(program: &Program) -> Vec<&str> {
    program
        .params
        .iter()
        .map(|p| p.name.as_str())
        .chain(program.input.iter().map(|i| i.name.as_str()))
        .chain(program.body.iter().map(|b| b.name.as_str()))
        .collect()
}

/// One instruction per binding in source order, then the return.
/// Operands must resolve (as they do for any parsed program).
pub fn linearize(program: &Program) -> Vec<Instruction> {
    let names = tensor_names(program);
    let id = |n: &str| names.iter().position(|m| *m == n).expect("unresolved name");
    let first_body = names.len() - program.body.len();
    let mut out: Vec<Instruction> = program
        .body
        .iter()
        .enumerate()
        .map(|(index, b)| Instruction {
            index,
            op: b.expr.kind(),
            dest: Some(first_body + index),
            srcs: b.expr.operands().into_iter().map(id).collect(),
        })
        .collect();
    out.push(Instruction { index: out.len(), op: OpKind::Return, dest: None, srcs: alloc::vec![id(&program.output)] });
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("no weights for param `{name}` (key `{key}`)")]
    MissingWeights { name: String, key: String },
    #[error("param `{name}` expects {expected} values, weights hold {found}")]
    WeightCount { name: String, expected: usize, found: usize },
}

/// A shape-checked, linearized program with its weights bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    program: Program,
    tensors: Vec<TensorInfo>,
    instrs: Vec<Instruction>,
    weights: BTreeMap<TensorId, Vec<f64>>,
    output: TensorId,
}

impl Model {
    /// `weights` maps file keys to flat row-major values.
    pub fn new(program: Program, weights: &BTreeMap<String, Vec<f64>>) -> Result<Self, ModelError> {
        let body_shapes = check_shapes(&program)?;
        let mut tensors = Vec::new();
        let mut bound = BTreeMap::new();
        for p in &program.params {
            let values = weights
                .get(&p.key)
                .ok_or_else(|| ModelError::MissingWeights { name: p.name.clone(), key: p.key.clone() })?;
            if values.len() != p.shape.cardinality() {
                return Err(ModelError::WeightCount {
                    name: p.name.clone(),
                    expected: p.shape.cardinality(),
                    found: values.len(),
                });
            }
            bound.insert(tensors.len(), values.clone());
            tensors.push(TensorInfo { name: p.name.clone(), shape: p.shape, kind: TensorKind::Param });
        }
        if let Some(input) = &program.input {
            tensors.push(TensorInfo { name: input.name.clone(), shape: input.shape, kind: TensorKind::Input });
        }
        for (b, shape) in program.body.iter().zip(body_shapes) {
            let kind = if matches!(b.expr, Expr::ArgMax(_)) { TensorKind::Label } else { TensorKind::Intermediate };
            tensors.push(TensorInfo { name: b.name.clone(), shape, kind });
        }
        let instrs = linearize(&program);
        let output = instrs.last().expect("return instruction").srcs[0];
        Ok(Self { program, tensors, instrs, weights: bound, output })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn tensors(&self) -> &[TensorInfo] {
        &self.tensors
    }

    pub fn tensor(&self, id: TensorId) -> &TensorInfo {
        &self.tensors[id]
    }

    pub fn id_of(&self, name: &str) -> Option<TensorId> {
        self.tensors.iter().position(|t| t.name == name)
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instrs
    }

    pub fn weights(&self, id: TensorId) -> Option<&[f64]> {
        self.weights.get(&id).map(|v| v.as_slice())
    }

    pub fn input(&self) -> Option<TensorId> {
        self.tensors.iter().position(|t| t.kind == TensorKind::Input)
    }

    pub fn output(&self) -> TensorId {
        self.output
    }

    /// True when the program returns an argmax label.
    pub fn is_classifier(&self) -> bool {
        self.tensors[self.output].kind == TensorKind::Label
    }

    /// Names of every tensor that takes a bitwidth, in tensor order.
    pub fn quantized_tensors(&self) -> impl Iterator<Item = (TensorId, &TensorInfo)> {
        self.tensors.iter().enumerate().filter(|(_, t)| t.is_quantized())
    }
}
