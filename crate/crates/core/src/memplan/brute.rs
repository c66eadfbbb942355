use alloc::vec::Vec;

use super::{lower_bound, lowest_gap, LiveRange, PlanError};

/// True minimum peak by exhaustive search.
///
/// Placing tensors in the order of their offsets in any optimal packing,
/// each at the lowest offset clear of the already placed conflicting
/// tensors, never puts a tensor above its optimal offset. The minimum over
/// all orders of that greedy placement is therefore the optimum; the search
/// enumerates orders depth-first and prunes on the best peak found.
pub fn brute_force_min(ranges: &[LiveRange], cap: u64) -> Result<u64, PlanError> {
    if ranges.len() > 8 {
        return Err(PlanError::TooLarge(ranges.len()));
    }
    let mut best = u64::MAX;
    let floor = lower_bound(ranges);
    let mut placed: Vec<(usize, u64)> = Vec::with_capacity(ranges.len());
    let mut used = alloc::vec![false; ranges.len()];
    dfs(ranges, &mut placed, &mut used, 0, &mut best, floor);
    if best > cap {
        return Err(PlanError::OverCap(cap));
    }
    Ok(best)
}

fn dfs(ranges: &[LiveRange], placed: &mut Vec<(usize, u64)>, used: &mut [bool], peak: u64, best: &mut u64, floor: u64) {
    if peak >= *best || *best == floor {
        return;
    }
    if placed.len() == ranges.len() {
        *best = peak;
        return;
    }
    for i in 0..ranges.len() {
        if used[i] {
            continue;
        }
        let r = &ranges[i];
        let mut busy: Vec<(u64, u64)> =
            placed.iter().filter(|(j, _)| ranges[*j].conflicts(r)).map(|&(j, o)| (o, ranges[j].size)).collect();
        let o = lowest_gap(&mut busy, r.size);
        used[i] = true;
        placed.push((i, o));
        dfs(ranges, placed, used, peak.max(o + r.size), best, floor);
        placed.pop();
        used[i] = false;
    }
}
