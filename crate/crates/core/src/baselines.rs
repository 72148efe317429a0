//! Strawman allocators: one matching plus greedy fill, and naive repeated matching.

use crate::error::Result;
use crate::matching::{build_weights, max_weight_matching, WeightMode};
use crate::model::{Allocation, Instance};
use crate::reprematch::greedy_fill;
use crate::smatch::dead_columns;

/// One matching on singleton values, then the greedy fill for every other item.
pub fn single_matching_fill(inst: &Instance) -> Result<Allocation> {
    let n = inst.num_agents();
    let items: Vec<usize> = inst.items().collect();
    let mut alloc = Allocation::empty(n);
    if items.is_empty() {
        return Ok(alloc);
    }
    let w = build_weights(inst, &items, WeightMode::Phase1Singleton)?;
    let m = max_weight_matching(&w);
    for &(i, j) in &m.pairs {
        alloc.assign(i, j);
    }
    let rest: Vec<usize> = items
        .into_iter()
        .filter(|j| !m.pairs.iter().any(|p| p.1 == *j))
        .collect();
    greedy_fill(inst, &mut alloc, &rest);
    Ok(alloc)
}

/// Matchings on `η ln(v(x) + v(j))` until every item is gone. Edges are
/// forbidden only when the log argument is zero; unmatchable items go to agent 0.
pub fn naive_repeated_matching(inst: &Instance) -> Result<Allocation> {
    let n = inst.num_agents();
    let mut alloc = Allocation::empty(n);
    let mut remaining: Vec<usize> = inst.items().collect();
    while !remaining.is_empty() {
        let bundles = alloc.bundles().to_vec();
        let w = build_weights(inst, &remaining, WeightMode::Cumulative { bundles: &bundles })?;
        let dead = dead_columns(&w);
        let m = max_weight_matching(&w);
        for &j in &dead {
            alloc.assign(0, j);
        }
        for &(i, j) in &m.pairs {
            alloc.assign(i, j);
        }
        remaining.retain(|j| !dead.contains(j) && !m.pairs.iter().any(|p| p.1 == *j));
    }
    Ok(alloc)
}
