//! Three-phase repeated matching with one release-and-rematch step, for
//! monotone (submodular) valuations.
//!
//! 1. Up to `⌈log₂ n⌉` matchings on singleton values.
//! 2. Matchings on bundle-union values until no edge is left.
//! 3. The first phase's items are released and rematched once on the union
//!    values over the second-phase bundles; the rest is filled greedily.

use crate::error::Result;
use crate::matching::{build_weights, max_weight_matching, Matching, WeightMode};
use crate::model::{Allocation, Instance};

/// Number of first-phase matchings for `n` agents: `⌈log₂ n⌉`.
pub fn phase_bound(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Per-phase record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLedger {
    pub phase1_bundles: Vec<Vec<usize>>,
    pub phase2_bundles: Vec<Vec<usize>>,
    pub phase3_matching: Matching,
    /// `(item, agent)` assignments made by the greedy fill, in fill order.
    pub leftovers: Vec<(usize, usize)>,
    pub allocation: Allocation,
}

/// Assigns `items` one at a time in ascending order. An agent whose bundle is
/// still worthless and who gains from the item wins outright (largest
/// `η ln v(x ∪ j)`); otherwise the largest `η (ln v(x ∪ j) − ln v(x))` wins.
/// Ties go to the lowest agent index; an item nobody gains from goes to agent 0.
pub fn greedy_fill(inst: &Instance, alloc: &mut Allocation, items: &[usize]) -> Vec<(usize, usize)> {
    let mut items = items.to_vec();
    items.sort_unstable();
    let mut out = Vec::with_capacity(items.len());
    for j in items {
        let mut starving: Option<(usize, f64)> = None;
        let mut gaining: Option<(usize, f64)> = None;
        for i in 0..inst.num_agents() {
            let eta = inst.weight(i);
            let base = inst.value(i, alloc.bundle(i));
            let with = inst.value_with(i, alloc.bundle(i), j);
            if base <= 0.0 {
                if with > 0.0 {
                    let key = eta * with.ln();
                    if starving.is_none_or(|(_, k)| key > k) {
                        starving = Some((i, key));
                    }
                }
            } else {
                let key = eta * (with.ln() - base.ln());
                if gaining.is_none_or(|(_, k)| key > k) {
                    gaining = Some((i, key));
                }
            }
        }
        let agent = starving.or(gaining).map_or(0, |(i, _)| i);
        alloc.assign(agent, j);
        out.push((j, agent));
    }
    out
}

fn assign_matching(alloc: &mut Allocation, m: &Matching, remaining: &mut Vec<usize>) {
    for &(i, j) in &m.pairs {
        alloc.assign(i, j);
    }
    remaining.retain(|j| !m.pairs.iter().any(|p| p.1 == *j));
}

/// Runs all three phases and returns the full ledger.
pub fn reprematch_trace(inst: &Instance) -> Result<PhaseLedger> {
    let n = inst.num_agents();
    let mut remaining: Vec<usize> = inst.items().collect();

    let mut phase1 = Allocation::empty(n);
    for _ in 0..phase_bound(n) {
        if remaining.is_empty() {
            break;
        }
        let w = build_weights(inst, &remaining, WeightMode::Phase1Singleton)?;
        let m = max_weight_matching(&w);
        if m.is_empty() {
            break;
        }
        assign_matching(&mut phase1, &m, &mut remaining);
    }

    let mut phase2 = Allocation::empty(n);
    while !remaining.is_empty() {
        let bundles = phase2.bundles().to_vec();
        let w = build_weights(inst, &remaining, WeightMode::Phase2Cumulative { bundles: &bundles })?;
        let m = max_weight_matching(&w);
        if m.is_empty() {
            break;
        }
        assign_matching(&mut phase2, &m, &mut remaining);
    }

    let mut released: Vec<usize> = phase1.bundles().iter().flatten().copied().collect();
    released.sort_unstable();
    let bundles = phase2.bundles().to_vec();
    let phase3_matching = if released.is_empty() {
        Matching::default()
    } else {
        let w = build_weights(inst, &released, WeightMode::Phase3Rematch { bundles: &bundles })?;
        max_weight_matching(&w)
    };
    let mut alloc = phase2.clone();
    assign_matching(&mut alloc, &phase3_matching, &mut released);
    remaining.extend(released);
    let leftovers = greedy_fill(inst, &mut alloc, &remaining);

    Ok(PhaseLedger {
        phase1_bundles: phase1.into_bundles(),
        phase2_bundles: phase2.into_bundles(),
        phase3_matching,
        leftovers,
        allocation: alloc,
    })
}

pub fn reprematch(inst: &Instance) -> Result<Allocation> {
    Ok(reprematch_trace(inst)?.allocation)
}
