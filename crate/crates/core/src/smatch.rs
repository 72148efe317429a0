//! Repeated matching with keep-aside first-round weights.
//!
//! Round 0 matches on `η ln(v(j) + u/n)`; every later round matches the
//! remaining items on the agent's current bundle value plus the item. An item
//! that no agent gains from is handed to agent 0 as soon as it is noticed.

use crate::error::{NswError, Result};
use crate::matching::{build_weights, max_weight_matching, Matching, WeightMatrix, WeightMode};
use crate::model::{keepaside_value, Allocation, Instance};
use crate::valuations::Valuation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmatchVariant {
    /// Additive or restricted additive; later rounds use `v(x) + v(j)`.
    Additive,
    /// Budget-additive or SPLC; later rounds use `v(x ∪ {j})`.
    Marginal,
    /// Restricted additive only.
    Restricted,
}

impl SmatchVariant {
    pub fn name(self) -> &'static str {
        match self {
            SmatchVariant::Additive => "smatch",
            SmatchVariant::Marginal => "smatch-marginal",
            SmatchVariant::Restricted => "smatch-restricted",
        }
    }
}

/// One matching round.
#[derive(Debug, Clone, PartialEq)]
pub struct SmatchRound {
    pub matching: Matching,
    /// Items nobody gained from this round, given to agent 0.
    pub leftovers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmatchTrace {
    pub keep_aside: Vec<f64>,
    pub rounds: Vec<SmatchRound>,
    pub allocation: Allocation,
}

fn check_variant(inst: &Instance, variant: SmatchVariant) -> Result<()> {
    let bad = |i: usize, v: &Valuation, need: &str| {
        NswError::Incompatible(format!(
            "{} requires {need} valuations (agent {i} is {})",
            variant.name(),
            v.family_name()
        ))
    };
    for (i, v) in inst.valuations().iter().enumerate() {
        let ok = match variant {
            SmatchVariant::Additive => matches!(
                v,
                Valuation::Additive { .. } | Valuation::RestrictedAdditive { .. }
            ),
            SmatchVariant::Marginal => {
                v.is_additive_like() || matches!(v, Valuation::Splc { .. })
            }
            SmatchVariant::Restricted => matches!(v, Valuation::RestrictedAdditive { .. }),
        };
        if !ok {
            let need = match variant {
                SmatchVariant::Additive => "additive-like",
                SmatchVariant::Marginal => "budget-additive or SPLC",
                SmatchVariant::Restricted => "restricted additive",
            };
            return Err(bad(i, v, need));
        }
    }
    Ok(())
}

/// Columns whose every edge is forbidden.
pub(crate) fn dead_columns(w: &WeightMatrix) -> Vec<usize> {
    (0..w.cols())
        .filter(|&c| (0..w.rows()).all(|r| !w.get(r, c).is_finite()))
        .map(|c| w.items()[c])
        .collect()
}

/// Runs the algorithm and records every round.
pub fn smatch_trace(inst: &Instance, variant: SmatchVariant) -> Result<SmatchTrace> {
    check_variant(inst, variant)?;
    let n = inst.num_agents();
    let keep_aside = (0..n)
        .map(|i| keepaside_value(inst, i))
        .collect::<Result<Vec<_>>>()?;
    let mut alloc = Allocation::empty(n);
    let mut remaining: Vec<usize> = inst.items().collect();
    let mut rounds = Vec::new();
    while !remaining.is_empty() {
        let bundles = alloc.bundles().to_vec();
        let mode = if rounds.is_empty() {
            WeightMode::SmatchFirst {
                keep_aside: &keep_aside,
            }
        } else if variant == SmatchVariant::Marginal {
            WeightMode::SmatchLaterMarginal { bundles: &bundles }
        } else {
            WeightMode::SmatchLater { bundles: &bundles }
        };
        let w = build_weights(inst, &remaining, mode)?;
        let leftovers = dead_columns(&w);
        let matching = max_weight_matching(&w);
        for &j in &leftovers {
            alloc.assign(0, j);
        }
        for &(i, j) in &matching.pairs {
            alloc.assign(i, j);
        }
        remaining.retain(|j| !leftovers.contains(j) && !matching.pairs.iter().any(|p| p.1 == *j));
        rounds.push(SmatchRound {
            matching,
            leftovers,
        });
    }
    Ok(SmatchTrace {
        keep_aside,
        rounds,
        allocation: alloc,
    })
}

/// Complete allocation produced by the chosen variant.
pub fn smatch(inst: &Instance, variant: SmatchVariant) -> Result<Allocation> {
    Ok(smatch_trace(inst, variant)?.allocation)
}
