//! Tensor-program IR: the line-oriented DSL, shape checking, and
//! linearization into indexed instructions.
//!
//! ```text
//! param W1 : R[1][2] = W1
//! param X1 : R[2][1] = X1
//! param B1 : R[1][1] = B1
//! let t1 = W1 * X1
//! let t2 = t1 + B1
//! return t2
//! ```

mod model;
mod parse;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use model::{linearize, Instruction, Model, ModelError, OpKind, TensorId, TensorInfo, TensorKind};
pub use parse::{parse, ParseError, ParseErrorKind};

/// Row-major 2-D shape. Vectors are `n x 1` or `1 x n`, scalars `1 x 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn cardinality(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_vector(&self) -> bool {
        self.rows == 1 || self.cols == 1
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R[{}][{}]", self.rows, self.cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub shape: Shape,
    /// Key into the weights document.
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Input {
    pub name: String,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    MatMul(String, String),
    Add(String, String),
    Sub(String, String),
    /// Elementwise product.
    Hadamard(String, String),
    ScalarMul(f64, String),
    Sigmoid(String),
    Tanh(String),
    Relu(String),
    Exp(String),
    /// Index of the largest element of a vector; produces a class label.
    ArgMax(String),
    Reshape(String, Shape),
}

impl Expr {
    pub fn operands(&self) -> Vec<&str> {
        match self {
            Expr::MatMul(a, b) | Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Hadamard(a, b) => {
                alloc::vec![a.as_str(), b.as_str()]
            }
            Expr::ScalarMul(_, a)
            | Expr::Sigmoid(a)
            | Expr::Tanh(a)
            | Expr::Relu(a)
            | Expr::Exp(a)
            | Expr::ArgMax(a)
            | Expr::Reshape(a, _) => alloc::vec![a.as_str()],
        }
    }

    pub fn kind(&self) -> OpKind {
        match self {
            Expr::MatMul(..) => OpKind::MatMul,
            Expr::Add(..) => OpKind::Add,
            Expr::Sub(..) => OpKind::Sub,
            Expr::Hadamard(..) => OpKind::Hadamard,
            Expr::ScalarMul(c, _) => OpKind::ScalarMul(*c),
            Expr::Sigmoid(_) => OpKind::Sigmoid,
            Expr::Tanh(_) => OpKind::Tanh,
            Expr::Relu(_) => OpKind::Relu,
            Expr::Exp(_) => OpKind::Exp,
            Expr::ArgMax(_) => OpKind::ArgMax,
            Expr::Reshape(_, s) => OpKind::Reshape(*s),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::MatMul(a, b) => write!(f, "{a} * {b}"),
            Expr::Add(a, b) => write!(f, "{a} + {b}"),
            Expr::Sub(a, b) => write!(f, "{a} - {b}"),
            Expr::Hadamard(a, b) => write!(f, "{a} <*> {b}"),
            // Debug keeps a decimal point and round-trips exactly
            Expr::ScalarMul(c, a) => write!(f, "{c:?} * {a}"),
            Expr::Sigmoid(a) => write!(f, "sigmoid({a})"),
            Expr::Tanh(a) => write!(f, "tanh({a})"),
            Expr::Relu(a) => write!(f, "relu({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::ArgMax(a) => write!(f, "argmax({a})"),
            Expr::Reshape(a, s) => write!(f, "reshape({a}, {}, {})", s.rows, s.cols),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub name: String,
    pub expr: Expr,
    /// 1-based source line, 0 when built programmatically.
    pub line: usize,
}

/// A parsed program. Names are bound once and used after definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub params: Vec<Param>,
    pub input: Option<Input>,
    pub body: Vec<Binding>,
    pub output: String,
}

impl Program {
    /// Structural equality ignoring source positions.
    pub fn same_structure(&self, other: &Program) -> bool {
        self.params == other.params
            && self.input == other.input
            && self.output == other.output
            && self.body.len() == other.body.len()
            && self.body.iter().zip(&other.body).all(|(a, b)| a.name == b.name && a.expr == b.expr)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.params {
            writeln!(f, "param {} : {} = {}", p.name, p.shape, p.key)?;
        }
        if let Some(input) = &self.input {
            writeln!(f, "input {} : {}", input.name, input.shape)?;
        }
        for b in &self.body {
            writeln!(f, "let {} = {}", b.name, b.expr)?;
        }
        writeln!(f, "return {}", self.output)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapeError {
    #[error("line {line}: `{op}` operands `{lhs}` {lhs_shape} and `{rhs}` {rhs_shape} are incompatible")]
    Mismatch { line: usize, op: &'static str, lhs: String, lhs_shape: Shape, rhs: String, rhs_shape: Shape },
    #[error("line {line}: `{name}` {shape} is not a vector")]
    NotAVector { line: usize, name: String, shape: Shape },
    #[error("line {line}: cannot reshape `{name}` {from} into {to}")]
    Reshape { line: usize, name: String, from: Shape, to: Shape },
    #[error("line {line}: label `{name}` can only be returned")]
    LabelOperand { line: usize, name: String },
    #[error("`{0}` has an empty shape")]
    Empty(String),
}

/// Checks every operator application and returns the shape of each binding
/// in body order. Argmax results are `1 x 1` labels.
pub fn check_shapes(program: &Program) -> Result<Vec<Shape>, ShapeError> {
    use alloc::collections::BTreeMap;

    let mut shapes: BTreeMap<&str, Shape> = BTreeMap::new();
    let mut labels: Vec<&str> = Vec::new();
    for p in &program.params {
        if p.shape.cardinality() == 0 {
            return Err(ShapeError::Empty(p.name.clone()));
        }
        shapes.insert(&p.name, p.shape);
    }
    if let Some(input) = &program.input {
        if input.shape.cardinality() == 0 {
            return Err(ShapeError::Empty(input.name.clone()));
        }
        shapes.insert(&input.name, input.shape);
    }

    let mut out = Vec::with_capacity(program.body.len());
    for b in &program.body {
        let line = b.line;
        for operand in b.expr.operands() {
            if labels.contains(&operand) {
                return Err(ShapeError::LabelOperand { line, name: operand.into() });
            }
        }
        let shape_of = |n: &str| shapes[n];
        let mismatch = |op: &'static str, a: &String, bb: &String| ShapeError::Mismatch {
            line,
            op,
            lhs: a.clone(),
            lhs_shape: shape_of(a),
            rhs: bb.clone(),
            rhs_shape: shape_of(bb),
        };
        let shape = match &b.expr {
            Expr::MatMul(a, c) => {
                let (sa, sc) = (shape_of(a), shape_of(c));
                if sa.cols != sc.rows {
                    return Err(mismatch("matmul", a, c));
                }
                Shape::new(sa.rows, sc.cols)
            }
            Expr::Add(a, c) | Expr::Sub(a, c) | Expr::Hadamard(a, c) => {
                if shape_of(a) != shape_of(c) {
                    let op = match &b.expr {
                        Expr::Add(..) => "add",
                        Expr::Sub(..) => "sub",
                        _ => "hadamard",
                    };
                    return Err(mismatch(op, a, c));
                }
                shape_of(a)
            }
            Expr::ScalarMul(_, a) | Expr::Sigmoid(a) | Expr::Tanh(a) | Expr::Relu(a) | Expr::Exp(a) => shape_of(a),
            Expr::ArgMax(a) => {
                let s = shape_of(a);
                if !s.is_vector() {
                    return Err(ShapeError::NotAVector { line, name: a.clone(), shape: s });
                }
                labels.push(&b.name);
                Shape::new(1, 1)
            }
            Expr::Reshape(a, to) => {
                let from = shape_of(a);
                if from.cardinality() != to.cardinality() || to.cardinality() == 0 {
                    return Err(ShapeError::Reshape { line, name: a.clone(), from, to: *to });
                }
                *to
            }
        };
        shapes.insert(&b.name, shape);
        out.push(shape);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = "\
param W1 : R[1][2] = W1
param X1 : R[2][1] = X1
param B1 : R[1][1] = B1
let t1 = W1 * X1
let t2 = t1 + B1
return t2
";

    #[test]
    fn shapes_of_linear_classifier() {
        let p = parse(LINEAR).unwrap();
        assert_eq!(check_shapes(&p).unwrap(), [Shape::new(1, 1), Shape::new(1, 1)]);
    }

    #[test]
    fn elementwise_and_mismatch() {
        let ok = parse("input a : R[2][2]\nparam b : R[2][2] = b\nlet c = a + b\nreturn c\n").unwrap();
        assert!(check_shapes(&ok).is_ok());
        let bad = parse("param a : R[1][2] = a\nparam b : R[3][1] = b\nlet c = a * b\nreturn c\n").unwrap();
        match check_shapes(&bad) {
            Err(ShapeError::Mismatch { lhs, rhs, op: "matmul", .. }) => {
                assert_eq!((lhs.as_str(), rhs.as_str()), ("a", "b"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn argmax_needs_vector_and_is_terminal() {
        let p = parse("input x : R[2][2]\nlet y = argmax(x)\nreturn y\n").unwrap();
        assert!(matches!(check_shapes(&p), Err(ShapeError::NotAVector { .. })));
        let p = parse("input x : R[3][1]\nlet y = argmax(x)\nlet z = relu(y)\nreturn z\n").unwrap();
        assert!(matches!(check_shapes(&p), Err(ShapeError::LabelOperand { .. })));
    }

    #[test]
    fn reshape_keeps_cardinality() {
        let p = parse("input x : R[2][3]\nlet y = reshape(x, 3, 2)\nreturn y\n").unwrap();
        assert_eq!(check_shapes(&p).unwrap(), [Shape::new(3, 2)]);
        let p = parse("input x : R[2][3]\nlet y = reshape(x, 4, 2)\nreturn y\n").unwrap();
        assert!(matches!(check_shapes(&p), Err(ShapeError::Reshape { .. })));
    }
}
