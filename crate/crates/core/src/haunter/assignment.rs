use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::ir::Model;

/// Bitwidth per tensor name (`ρ`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitwidthAssignment {
    bits: BTreeMap<String, u32>,
}

impl BitwidthAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every quantized tensor of `model` at `bits`.
    pub fn uniform(model: &Model, bits: u32) -> Self {
        Self { bits: model.quantized_tensors().map(|(_, t)| (t.name.clone(), bits)).collect() }
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.bits.get(name).copied()
    }

    pub fn set(&mut self, name: &str, bits: u32) {
        self.bits.insert(name.into(), bits);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.bits.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Names assigned exactly `bits`.
    pub fn names_at(&self, bits: u32) -> impl Iterator<Item = &str> {
        self.bits.iter().filter(move |(_, b)| **b == bits).map(|(k, _)| k.as_str())
    }

    /// Storage in bytes of the tensors assigned `bits` (flash and RAM).
    pub fn bytes_at(&self, model: &Model, bits: u32) -> u64 {
        model
            .quantized_tensors()
            .filter(|(_, t)| self.get(&t.name) == Some(bits))
            .map(|(_, t)| tensor_bytes(bits, t.cardinality()))
            .sum()
    }
}

impl FromIterator<(String, u32)> for BitwidthAssignment {
    fn from_iter<I: IntoIterator<Item = (String, u32)>>(iter: I) -> Self {
        Self { bits: iter.into_iter().collect() }
    }
}

/// `ceil(bits * cardinality / 8)`.
pub fn tensor_bytes(bits: u32, cardinality: usize) -> u64 {
    (bits as u64 * cardinality as u64).div_ceil(8)
}
