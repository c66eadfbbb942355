use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::interp::ValueMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HeatMapError {
    #[error("value maps disagree on `{0}`")]
    Mismatch(String),
    #[error("no values recorded for `{0}`")]
    Empty(String),
}

/// Promotability per tensor, highest first in `order`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HeatMap {
    /// `(name, score)` in tensor order
    pub scores: Vec<(String, f64)>,
    /// names by descending score; equal scores keep tensor order
    pub order: Vec<String>,
}

impl HeatMap {
    pub fn score(&self, name: &str) -> Option<f64> {
        self.scores.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }
}

/// Zero-based nearest-rank 95th percentile of an ascending slice.
pub fn percentile_95(sorted: &[f64]) -> f64 {
    let idx = (0.95 * (sorted.len() - 1) as f64) as usize;
    sorted[idx]
}

/// Scores each tensor by its 95th-percentile low/high deviation divided by
/// its cardinality. `tensors` lists `(name, cardinality)` in tensor order.
/// Deviations that are not finite count as the largest finite double.
pub fn create_heat_map(low: &ValueMap, high: &ValueMap, tensors: &[(&str, usize)]) -> Result<HeatMap, HeatMapError> {
    let mut scores = Vec::with_capacity(tensors.len());
    for &(name, card) in tensors {
        let (l, h) = match (low.get(name), high.get(name)) {
            (Some(l), Some(h)) if l.len() == h.len() => (l, h),
            _ => return Err(HeatMapError::Mismatch(name.into())),
        };
        if l.is_empty() || card == 0 {
            return Err(HeatMapError::Empty(name.into()));
        }
        let mut dev: Vec<f64> = l
            .iter()
            .zip(h)
            .map(|(a, b)| {
                let d = (a - b).abs();
                if d.is_finite() {
                    d
                } else {
                    f64::MAX
                }
            })
            .collect();
        dev.sort_by(f64::total_cmp);
        scores.push((String::from(name), percentile_95(&dev) / card as f64));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].1.total_cmp(&scores[a].1));
    let order = idx.into_iter().map(|i| scores[i].0.clone()).collect();
    Ok(HeatMap { scores, order })
}
