//! A two-weight linear model small enough to follow by hand.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ir::{parse, Model};

pub const PROGRAM: &str = "\
param W1 : R[1][2] = W1
param X1 : R[2][1] = X1
param B1 : R[1][1] = B1
let t1 = W1 * X1
let t2 = t1 + B1
return t2
";

pub fn weights() -> BTreeMap<String, Vec<f64>> {
    [
        ("W1".into(), alloc::vec![-2.139562, 1.885351]),
        ("X1".into(), alloc::vec![1.185109, -2.206466]),
        ("B1".into(), alloc::vec![0.146048]),
    ]
    .into_iter()
    .collect()
}

pub fn model() -> Model {
    Model::new(parse(PROGRAM).expect("demo program parses"), &weights()).expect("demo weights bind")
}
