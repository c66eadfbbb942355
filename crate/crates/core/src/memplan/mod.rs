//! Scratch-buffer planning.
//!
//! Every RAM tensor is a rectangle on a canvas whose x-axis is instruction
//! index and whose y-axis is byte offset. Two tensors conflict when their
//! live ranges intersect; conflicting tensors must occupy disjoint bytes.
//! The exact planner encodes the canvas as an exact-cover problem and
//! searches it with Dancing Links; first-fit is the baseline it is measured
//! against.

mod brute;
pub mod dlx;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::haunter::{tensor_bytes, BitwidthAssignment};
use crate::ir::{Model, TensorKind};
use dlx::{Choice, Dlx, Outcome};

pub use brute::brute_force_min;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiveRange {
    pub name: String,
    /// bytes, at least 1
    pub size: u64,
    /// first instruction (inclusive)
    pub start: usize,
    /// last instruction (inclusive), `start <= end`
    pub end: usize,
}

impl LiveRange {
    pub fn new(name: &str, size: u64, start: usize, end: usize) -> Self {
        Self { name: name.into(), size, start, end }
    }

    pub fn conflicts(&self, other: &LiveRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn is_live_at(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("no bitwidth assigned to `{0}`")]
    Unassigned(String),
    #[error("live range of `{0}` is malformed")]
    BadRange(String),
    #[error("duplicate tensor `{0}`")]
    Duplicate(String),
    #[error("coarsening constant must be at least 1")]
    ZeroCoarsening,
    #[error("`{0}` has no offset")]
    MissingOffset(String),
    #[error("`{name}` ends at {end} past peak {peak}")]
    PastPeak { name: String, end: u64, peak: u64 },
    #[error("`{0}` and `{1}` overlap while both live")]
    Overlap(String, String),
    #[error("{0} tensors exceed the brute-force limit of 8")]
    TooLarge(usize),
    #[error("no packing fits within {0} bytes")]
    OverCap(u64),
}

/// Live ranges of the RAM tensors of `model` under `rho`, in tensor order.
/// Tensors never read stay live only at their definition.
pub fn live_ranges(model: &Model, rho: &BitwidthAssignment) -> Result<Vec<LiveRange>, PlanError> {
    let instrs = model.instructions();
    let mut out = Vec::new();
    for (id, t) in model.tensors().iter().enumerate() {
        if !t.in_ram() {
            continue;
        }
        let bits = rho.get(&t.name).ok_or_else(|| PlanError::Unassigned(t.name.clone()))?;
        let start = match t.kind {
            TensorKind::Input => 0,
            _ => instrs.iter().position(|i| i.dest == Some(id)).expect("intermediate has a definition"),
        };
        let end = instrs.iter().rposition(|i| i.srcs.contains(&id)).map_or(start, |e| e.max(start));
        out.push(LiveRange::new(&t.name, tensor_bytes(bits, t.cardinality()).max(1), start, end));
    }
    Ok(out)
}

fn check_ranges(ranges: &[LiveRange]) -> Result<(), PlanError> {
    for (i, r) in ranges.iter().enumerate() {
        if r.size == 0 || r.start > r.end {
            return Err(PlanError::BadRange(r.name.clone()));
        }
        if ranges[..i].iter().any(|q| q.name == r.name) {
            return Err(PlanError::Duplicate(r.name.clone()));
        }
    }
    Ok(())
}

fn span(ranges: &[LiveRange]) -> usize {
    ranges.iter().map(|r| r.end + 1).max().unwrap_or(0)
}

/// Largest total size of tensors live at one instruction.
pub fn lower_bound(ranges: &[LiveRange]) -> u64 {
    (0..span(ranges)).map(|i| ranges.iter().filter(|r| r.is_live_at(i)).map(|r| r.size).sum()).max().unwrap_or(0)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryMap {
    pub peak_bytes: u64,
    pub offsets: BTreeMap<String, u64>,
    /// True when `peak_bytes` is proven minimal at the planner's granularity.
    #[serde(default)]
    pub optimal: bool,
}

impl MemoryMap {
    pub fn offset(&self, name: &str) -> Option<u64> {
        self.offsets.get(name).copied()
    }
}

/// Checks that `map` places every range within its peak without overlap.
pub fn validate(ranges: &[LiveRange], map: &MemoryMap) -> Result<(), PlanError> {
    let mut placed = Vec::with_capacity(ranges.len());
    for r in ranges {
        let o = map.offset(&r.name).ok_or_else(|| PlanError::MissingOffset(r.name.clone()))?;
        if o + r.size > map.peak_bytes {
            return Err(PlanError::PastPeak { name: r.name.clone(), end: o + r.size, peak: map.peak_bytes });
        }
        placed.push((r, o));
    }
    for (i, (a, oa)) in placed.iter().enumerate() {
        for (b, ob) in &placed[i + 1..] {
            if a.conflicts(b) && *oa < ob + b.size && *ob < oa + a.size {
                return Err(PlanError::Overlap(a.name.clone(), b.name.clone()));
            }
        }
    }
    Ok(())
}

/// Lowest offset at which `size` bytes avoid every `(offset, size)` in
/// `busy`.
fn lowest_gap(busy: &mut [(u64, u64)], size: u64) -> u64 {
    busy.sort_unstable();
    let mut candidate = 0;
    for &(o, s) in busy.iter() {
        if o >= candidate + size {
            break;
        }
        candidate = candidate.max(o + s);
    }
    candidate
}

/// Allocates in order of first live instruction (ties in list order), each
/// tensor at the lowest offset free over its whole live range.
pub fn solve_first_fit(ranges: &[LiveRange]) -> MemoryMap {
    let mut order: Vec<usize> = (0..ranges.len()).collect();
    order.sort_by_key(|&i| ranges[i].start);
    let mut placed: Vec<(usize, u64)> = Vec::with_capacity(ranges.len());
    let mut peak = 0;
    for i in order {
        let r = &ranges[i];
        let mut busy: Vec<(u64, u64)> =
            placed.iter().filter(|(j, _)| ranges[*j].conflicts(r)).map(|&(j, o)| (o, ranges[j].size)).collect();
        let o = lowest_gap(&mut busy, r.size);
        peak = peak.max(o + r.size);
        placed.push((i, o));
    }
    let offsets = placed.into_iter().map(|(i, o)| (ranges[i].name.clone(), o)).collect();
    MemoryMap { peak_bytes: peak, offsets, optimal: false }
}

/// Search limit for the exact planner.
pub trait Budget {
    /// Polled periodically during search; true aborts it.
    fn expired(&mut self) -> bool;
}

pub struct Unlimited;

impl Budget for Unlimited {
    fn expired(&mut self) -> bool {
        false
    }
}

/// Expires after a fixed number of search nodes.
pub struct NodeLimit {
    pub remaining: u64,
}

impl NodeLimit {
    pub fn new(nodes: u64) -> Self {
        Self { remaining: nodes }
    }
}

impl Budget for NodeLimit {
    fn expired(&mut self) -> bool {
        if self.remaining == 0 {
            return true;
        }
        self.remaining -= 1;
        false
    }
}

/// Search nodes between budget polls.
const POLL_INTERVAL: u64 = 1024;

/// Largest sparse matrix the exact planner builds, in nodes.
pub const MAX_MATRIX_NODES: usize = 40_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExactStats {
    /// canvas heights tried, in units of `k`
    pub heights_tried: usize,
    pub search_nodes: u64,
    /// search aborted or matrix over [`MAX_MATRIX_NODES`]
    pub fell_back: bool,
}

/// Minimum-peak placement at granularity `k` bytes.
///
/// Sizes are rounded up to multiples of `k`. Heights are tried upward from
/// the lower bound until a cover exists; the first-fit placement bounds the
/// search. When the budget expires the first-fit map is returned with
/// `optimal == false`.
pub fn solve_exact(ranges: &[LiveRange], k: u64, budget: &mut dyn Budget) -> Result<MemoryMap, PlanError> {
    solve_exact_with_stats(ranges, k, budget).map(|(m, _)| m)
}

pub fn solve_exact_with_stats(
    ranges: &[LiveRange],
    k: u64,
    budget: &mut dyn Budget,
) -> Result<(MemoryMap, ExactStats), PlanError> {
    if k == 0 {
        return Err(PlanError::ZeroCoarsening);
    }
    check_ranges(ranges)?;
    let mut stats = ExactStats::default();
    let units: Vec<LiveRange> = ranges.iter().map(|r| LiveRange { size: r.size.div_ceil(k), ..r.clone() }).collect();
    let lb = lower_bound(&units);
    let ff = solve_first_fit(&units);
    let scale = |m: MemoryMap, optimal: bool| MemoryMap {
        peak_bytes: m.peak_bytes * k,
        offsets: m.offsets.into_iter().map(|(n, o)| (n, o * k)).collect(),
        optimal,
    };
    let mut polls = 0u64;
    for height in lb..ff.peak_bytes {
        stats.heights_tried += 1;
        match cover_at(&units, height, budget, &mut polls) {
            Cover::Found(m) => {
                stats.search_nodes = polls;
                return Ok((scale(m, true), stats));
            }
            Cover::None => {}
            Cover::Aborted => {
                stats.search_nodes = polls;
                stats.fell_back = true;
                return Ok((scale(ff, false), stats));
            }
        }
    }
    stats.search_nodes = polls;
    Ok((scale(ff, true), stats))
}

enum Cover {
    Found(MemoryMap),
    None,
    Aborted,
}

/// Exact cover of the `height × span` canvas. Columns are one per tensor,
/// then one per cell `(y, instruction)`. A placement row covers its tensor
/// column and every cell of its rectangle; a filler row covers one cell.
fn cover_at(units: &[LiveRange], height: u64, budget: &mut dyn Budget, polls: &mut u64) -> Cover {
    let n = units.len();
    let width = span(units);
    let h = height as usize;
    let cell = |y: usize, i: usize| n + y * width + i;
    let nodes: usize = units
        .iter()
        .map(|r| {
            let s = r.size as usize;
            let rows = h.saturating_sub(s).saturating_add(1) * usize::from(s <= h);
            rows * (1 + s * (r.end - r.start + 1))
        })
        .sum::<usize>()
        + h * width;
    if nodes > MAX_MATRIX_NODES {
        return Cover::Aborted;
    }

    let mut d = Dlx::new(n + h * width);
    let mut placements: Vec<(usize, u64)> = Vec::new();
    let mut cols = Vec::new();
    for (t, r) in units.iter().enumerate() {
        let s = r.size as usize;
        if s > h {
            continue;
        }
        for o in 0..=h - s {
            cols.clear();
            cols.push(t);
            for y in o..o + s {
                for i in r.start..=r.end {
                    cols.push(cell(y, i));
                }
            }
            d.add_row(&cols, placements.len());
            placements.push((t, o as u64));
        }
    }
    let filler_base = placements.len();
    for c in n..n + h * width {
        d.add_row(&[c], filler_base + c - n);
    }

    // Larger rectangles first; ties to the lower tensor index.
    let mut priority: Vec<usize> = (0..n).collect();
    priority.sort_by_key(|&t| (core::cmp::Reverse(units[t].size * (units[t].end - units[t].start + 1) as u64), t));
    let mut choose = |d: &Dlx| {
        if priority.iter().any(|&t| d.is_active(t) && d.column_size(t) == 0) {
            return Choice::Dead;
        }
        match priority.iter().find(|&&t| d.is_active(t)) {
            Some(&t) => Choice::Column(t),
            // Remaining cells are covered by their filler rows.
            None => Choice::Done,
        }
    };
    let mut expired = false;
    let mut tick = || {
        *polls += 1;
        if *polls % POLL_INTERVAL == 1 && budget.expired() {
            expired = true;
            return false;
        }
        true
    };
    match d.search(&mut choose, &mut tick) {
        Outcome::Found(rows) => {
            let offsets = rows
                .into_iter()
                .filter(|&r| r < filler_base)
                .map(|r| {
                    let (t, o) = placements[r];
                    (units[t].name.clone(), o)
                })
                .collect();
            Cover::Found(MemoryMap { peak_bytes: height, offsets, optimal: true })
        }
        Outcome::Exhausted => Cover::None,
        Outcome::Aborted => {
            debug_assert!(expired);
            Cover::Aborted
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn fig4() -> Vec<LiveRange> {
        vec![
            LiveRange::new("A", 64, 0, 2),
            LiveRange::new("B", 64, 0, 4),
            LiveRange::new("C", 64, 0, 2),
            LiveRange::new("D", 64, 0, 4),
            LiveRange::new("E", 128, 3, 4),
        ]
    }

    fn worked() -> Vec<LiveRange> {
        vec![LiveRange::new("t1", 2, 0, 1), LiveRange::new("t2", 1, 1, 2)]
    }

    #[test]
    fn fragmentation_scenario() {
        let r = fig4();
        assert_eq!(lower_bound(&r), 256);
        let ff = solve_first_fit(&r);
        assert_eq!(ff.peak_bytes, 384);
        assert_eq!(ff.offset("E"), Some(256));
        validate(&r, &ff).unwrap();
        let ex = solve_exact(&r, 1, &mut Unlimited).unwrap();
        assert_eq!(ex.peak_bytes, 256);
        assert!(ex.optimal);
        validate(&r, &ex).unwrap();
        let ex64 = solve_exact(&r, 64, &mut Unlimited).unwrap();
        assert_eq!(ex64.peak_bytes, 256);
        validate(&r, &ex64).unwrap();
    }

    #[test]
    fn worked_example_ranges() {
        let r = worked();
        assert_eq!(lower_bound(&r), 3);
        assert_eq!(solve_first_fit(&r).peak_bytes, 3);
        let ex = solve_exact(&r, 1, &mut Unlimited).unwrap();
        assert_eq!(ex.peak_bytes, 3);
        validate(&r, &ex).unwrap();
    }

    #[test]
    fn trivial_instances() {
        assert_eq!(lower_bound(&[]), 0);
        let m = solve_exact(&[], 1, &mut Unlimited).unwrap();
        assert_eq!(m.peak_bytes, 0);
        let one = [LiveRange::new("x", 5, 2, 3)];
        let m = solve_exact(&one, 1, &mut Unlimited).unwrap();
        assert_eq!((m.peak_bytes, m.offset("x")), (5, Some(0)));
        let disjoint = [LiveRange::new("a", 4, 0, 0), LiveRange::new("b", 7, 1, 1), LiveRange::new("c", 2, 2, 3)];
        let ff = solve_first_fit(&disjoint);
        assert!(ff.offsets.values().all(|&o| o == 0));
        assert_eq!(ff.peak_bytes, 7);
    }

    #[test]
    fn overlapping_chain() {
        let r = [
            LiveRange::new("a", 1, 0, 1),
            LiveRange::new("b", 2, 1, 2),
            LiveRange::new("c", 1, 2, 3),
            LiveRange::new("d", 2, 3, 4),
            LiveRange::new("e", 1, 0, 4),
        ];
        let ex = solve_exact(&r, 1, &mut Unlimited).unwrap();
        validate(&r, &ex).unwrap();
        assert_eq!(ex.peak_bytes, brute_force_min(&r, 512).unwrap());
        assert_eq!(ex.peak_bytes, 4);
    }

    #[test]
    fn validation_rejects_overlap() {
        let r = fig4();
        let mut m = solve_first_fit(&r);
        m.offsets.insert("E".into(), 64);
        assert!(matches!(validate(&r, &m), Err(PlanError::Overlap(..))));
        m.offsets.remove("E");
        assert!(matches!(validate(&r, &m), Err(PlanError::MissingOffset(_))));
    }

    #[test]
    fn budget_falls_back_to_first_fit() {
        let r = fig4();
        let (m, stats) = solve_exact_with_stats(&r, 1, &mut NodeLimit::new(0)).unwrap();
        assert!(stats.fell_back);
        assert!(!m.optimal);
        assert_eq!(m.peak_bytes, 384);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(solve_exact(&fig4(), 0, &mut Unlimited), Err(PlanError::ZeroCoarsening));
        let bad = [LiveRange::new("x", 1, 3, 2)];
        assert!(matches!(solve_exact(&bad, 1, &mut Unlimited), Err(PlanError::BadRange(_))));
    }
}
