//! Seeded random tensor programs with weights and datasets.
//!
//! Programs start from an input vector and chain matmuls, bias adds,
//! activations, scalar multiplies, elementwise ops against earlier tensors
//! and orientation reshapes. `exp` is only applied to outputs of `sigmoid`
//! or `tanh`, so values stay finite.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tinyquant_core::haunter::BitwidthAssignment;
use tinyquant_core::interp::{self, Dataset, RunOptions};
use tinyquant_core::ir::{Binding, Expr, Input, Model, Param, Program, Shape};
use tinyquant_core::numrep::RepParams;

/// Environment variable holding the generator seed.
pub const SEED_VAR: &str = "TINYQUANT_SEED";
pub const DEFAULT_SEED: u64 = 0x7131_0e57;

/// `TINYQUANT_SEED` when set, else [`DEFAULT_SEED`].
pub fn seed_from_env() -> Result<u64> {
    match std::env::var(SEED_VAR) {
        Ok(s) => s.trim().parse().with_context(|| format!("{SEED_VAR}={s:?} is not an unsigned integer")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// inclusive bounds on params + input + intermediates
    pub min_tensors: usize,
    pub max_tensors: usize,
    pub samples: usize,
    /// probability of ending in `argmax`
    pub classifier_rate: f64,
    /// probability that a label is replaced by a random class
    pub label_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { min_tensors: 5, max_tensors: 20, samples: 16, classifier_rate: 0.5, label_noise: 0.2 }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub program: Program,
    pub weights: BTreeMap<String, Vec<f64>>,
    pub dataset: Dataset,
    pub model: Model,
}

impl Synthetic {
    /// Quantized tensors: params, the input and non-label intermediates.
    pub fn tensor_count(&self) -> usize {
        self.model.quantized_tensors().count()
    }
}

struct Builder<'r, R: Rng> {
    rng: &'r mut R,
    program: Program,
    weights: BTreeMap<String, Vec<f64>>,
    shapes: Vec<(String, Shape)>,
    cur: String,
    shape: Shape,
    /// values of `cur` lie in [-1, 1]
    bounded: bool,
    count: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn fresh(&self, prefix: &str) -> String {
        format!("{prefix}{}", self.count)
    }

    fn param(&mut self, shape: Shape, spread: f64) -> String {
        let name = self.fresh("w");
        let values = (0..shape.cardinality()).map(|_| self.rng.gen_range(-spread..=spread)).collect();
        self.weights.insert(name.clone(), values);
        self.program.params.push(Param { name: name.clone(), shape, key: name.clone() });
        self.count += 1;
        name
    }

    fn bind(&mut self, expr: Expr, shape: Shape, bounded: bool) {
        let name = self.fresh("t");
        self.program.body.push(Binding { name: name.clone(), expr, line: 0 });
        self.shapes.push((name.clone(), shape));
        self.cur = name;
        self.shape = shape;
        self.bounded = bounded;
        self.count += 1;
    }

    fn step(&mut self, room: usize) {
        let column = self.shape.cols == 1;
        let len = self.shape.cardinality();
        let mut ops: Vec<u8> = vec![b's', b'r', b'm', b'o'];
        if room >= 2 {
            ops.extend(*b"MMB");
        }
        if self.bounded {
            ops.push(b'e');
        }
        if self.shapes.iter().any(|(n, s)| *s == self.shape && *n != self.cur) {
            ops.extend(*b"hd");
        }
        let cur = self.cur.clone();
        match *ops.choose(self.rng).expect("non-empty") {
            b'M' => {
                let m = self.rng.gen_range(2..=6);
                let spread = 1.5 / (len as f64).sqrt();
                if column {
                    let w = self.param(Shape::new(m, len), spread);
                    self.bind(Expr::MatMul(w, cur), Shape::new(m, 1), false);
                } else {
                    let w = self.param(Shape::new(len, m), spread);
                    self.bind(Expr::MatMul(cur, w), Shape::new(1, m), false);
                }
            }
            b'B' => {
                let b = self.param(self.shape, 0.5);
                let s = self.shape;
                self.bind(Expr::Add(cur, b), s, false);
            }
            b's' => {
                let s = self.shape;
                match self.rng.gen_range(0..3) {
                    0 => self.bind(Expr::Sigmoid(cur), s, true),
                    1 => self.bind(Expr::Tanh(cur), s, true),
                    _ => self.bind(Expr::Relu(cur), s, false),
                }
            }
            b'e' => {
                let s = self.shape;
                self.bind(Expr::Exp(cur), s, false);
            }
            b'm' => {
                let c = (self.rng.gen_range(0.25f64..2.0) * 64.0).round() / 64.0;
                let c = if self.rng.gen_bool(0.25) { -c } else { c };
                let s = self.shape;
                let bounded = self.bounded && c.abs() <= 1.0;
                self.bind(Expr::ScalarMul(c, cur), s, bounded);
            }
            b'h' | b'd' => {
                let peers: Vec<String> =
                    self.shapes.iter().filter(|(n, s)| *s == self.shape && *n != cur).map(|(n, _)| n.clone()).collect();
                let other = peers.choose(self.rng).expect("peer exists").clone();
                let s = self.shape;
                let hadamard = self.rng.gen_bool(0.5);
                let expr = if hadamard { Expr::Hadamard(cur, other) } else { Expr::Sub(cur, other) };
                self.bind(expr, s, false);
            }
            _ => {
                let s = Shape::new(self.shape.cols, self.shape.rows);
                let bounded = self.bounded;
                self.bind(Expr::Reshape(cur, s), s, bounded);
            }
        }
    }
}

/// Draws one program with weights and a dataset. Classifier labels are the
/// float model's predictions with noise.
pub fn generate<R: Rng>(rng: &mut R, cfg: &SynthConfig) -> Synthetic {
    let target = rng.gen_range(cfg.min_tensors..=cfg.max_tensors).max(2);
    let d = rng.gen_range(2..=6);
    let input = Shape::new(d, 1);
    let mut b = Builder {
        rng,
        program: Program {
            params: Vec::new(),
            input: Some(Input { name: "x".into(), shape: input }),
            body: Vec::new(),
            output: String::new(),
        },
        weights: BTreeMap::new(),
        shapes: vec![("x".into(), input)],
        cur: "x".into(),
        shape: input,
        bounded: false,
        count: 1,
    };
    while b.count < target {
        let room = target - b.count;
        b.step(room);
    }
    let classify = b.shape.is_vector() && b.shape.cardinality() >= 2 && b.rng.gen_bool(cfg.classifier_rate);
    if classify {
        let cur = b.cur.clone();
        b.program.body.push(Binding { name: "label".into(), expr: Expr::ArgMax(cur), line: 0 });
        b.program.output = "label".into();
    } else {
        b.program.output = b.cur.clone();
    }

    let inputs: Vec<Vec<f64>> =
        (0..cfg.samples).map(|_| (0..d).map(|_| b.rng.gen_range(-2.0..2.0)).collect()).collect();
    let Builder { rng, program, weights, shape, .. } = b;
    let model = Model::new(program.clone(), &weights).expect("generated program is well-formed");
    let mut dataset = Dataset::new(inputs, None);
    if classify {
        let reference =
            interp::run(&model, &dataset, &RepParams::Float, &BitwidthAssignment::new(), RunOptions::default())
                .expect("float run of generated program");
        let classes = shape.cardinality();
        let labels = reference
            .outputs
            .iter()
            .map(|o| {
                let l = o.label.unwrap_or(0);
                if rng.gen_bool(cfg.label_noise) {
                    rng.gen_range(0..classes)
                } else {
                    l
                }
            })
            .collect();
        dataset.labels = Some(labels);
    }
    Synthetic { program, weights, dataset, model }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tinyquant_core::ir::parse;

    #[test]
    fn tensor_counts_within_bounds_and_programs_round_trip() {
        let mut r = rng(7);
        let cfg = SynthConfig::default();
        for _ in 0..200 {
            let s = generate(&mut r, &cfg);
            assert!((cfg.min_tensors..=cfg.max_tensors).contains(&s.tensor_count()), "{}", s.program);
            let reparsed = parse(&s.program.to_string()).unwrap();
            assert!(reparsed.same_structure(&s.program));
            let res =
                interp::run(&s.model, &s.dataset, &RepParams::Float, &BitwidthAssignment::new(), RunOptions::default())
                    .unwrap();
            assert_eq!(res.invalid_count(), 0, "{}", s.program);
        }
    }

    #[test]
    fn same_seed_same_program() {
        let cfg = SynthConfig::default();
        let a = generate(&mut rng(3), &cfg);
        let b = generate(&mut rng(3), &cfg);
        assert_eq!(a.program, b.program);
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.dataset, b.dataset);
    }
}
