//! Instance and allocation model, NSW evaluation and per-agent item ranking.
//!
//! NSW is always evaluated in log space: `Σ η_i ln v_i(x_i) / Σ η_i`, and only
//! exponentiated for reporting.

use serde::{Deserialize, Serialize};

use crate::error::{NswError, Result};
use crate::valuations::Valuation;

/// Agents with positive entitlements, a set of items `0..num_items`, and one
/// valuation per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    weights: Vec<f64>,
    valuations: Vec<Valuation>,
    num_items: usize,
}

impl Instance {
    /// Builds and validates an instance.
    pub fn new(weights: Vec<f64>, valuations: Vec<Valuation>, num_items: usize) -> Result<Self> {
        let inst = Instance {
            weights,
            valuations,
            num_items,
        };
        validate_instance(&inst)?;
        Ok(inst)
    }

    /// All agents with weight 1.
    pub fn symmetric(valuations: Vec<Valuation>, num_items: usize) -> Result<Self> {
        let weights = vec![1.0; valuations.len()];
        Self::new(weights, valuations, num_items)
    }

    pub fn num_agents(&self) -> usize {
        self.weights.len()
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, agent: usize) -> f64 {
        self.weights[agent]
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn valuation(&self, agent: usize) -> &Valuation {
        &self.valuations[agent]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn items(&self) -> impl Iterator<Item = usize> {
        0..self.num_items
    }

    /// `v_agent(items)`; items are assumed in range.
    pub fn value(&self, agent: usize, items: &[usize]) -> f64 {
        self.valuations[agent].value_unchecked(items)
    }

    /// `v_agent(items ∪ {item})` without allocating when the bundle is small.
    pub fn value_with(&self, agent: usize, items: &[usize], item: usize) -> f64 {
        let mut buf = Vec::with_capacity(items.len() + 1);
        buf.extend_from_slice(items);
        buf.push(item);
        self.valuations[agent].value_unchecked(&buf)
    }

    pub fn singleton(&self, agent: usize, item: usize) -> f64 {
        self.valuations[agent].value_unchecked(&[item])
    }

    /// Per-agent bundle values of an allocation.
    pub fn bundle_values(&self, alloc: &Allocation) -> Vec<f64> {
        alloc
            .bundles()
            .iter()
            .enumerate()
            .map(|(i, b)| self.value(i, b))
            .collect()
    }

    /// True when every agent is symmetric (all weights equal).
    pub fn is_symmetric(&self) -> bool {
        self.weights.windows(2).all(|w| w[0] == w[1])
    }
}

/// Checks every instance invariant and each valuation's internal consistency.
pub fn validate_instance(inst: &Instance) -> Result<()> {
    if inst.weights.is_empty() {
        return Err(NswError::InvalidInstance("instance needs at least one agent".into()));
    }
    if inst.weights.len() != inst.valuations.len() {
        return Err(NswError::InvalidInstance(format!(
            "{} weights but {} valuations",
            inst.weights.len(),
            inst.valuations.len()
        )));
    }
    for (i, &w) in inst.weights.iter().enumerate() {
        if !(w.is_finite() && w > 0.0) {
            return Err(NswError::InvalidInstance(format!(
                "agent {i}: nonpositive weight {w}"
            )));
        }
    }
    for (i, v) in inst.valuations.iter().enumerate() {
        v.validate(inst.num_items)
            .map_err(|msg| NswError::InvalidInstance(format!("agent {i}: {msg}")))?;
    }
    crate::valuations::validate_shared_structure(&inst.valuations)
        .map_err(NswError::InvalidInstance)?;
    Ok(())
}

/// A (possibly partial) assignment of items to agents. Bundles are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation {
    bundles: Vec<Vec<usize>>,
}

impl Allocation {
    /// `n` empty bundles.
    pub fn empty(n: usize) -> Self {
        Allocation {
            bundles: vec![Vec::new(); n],
        }
    }

    /// Builds from explicit bundles; checks pairwise disjointness.
    pub fn from_bundles(mut bundles: Vec<Vec<usize>>) -> Result<Self> {
        for b in &mut bundles {
            b.sort_unstable();
        }
        let alloc = Allocation { bundles };
        if let Some(item) = alloc.first_overlap() {
            return Err(NswError::InvalidAllocation(format!(
                "item {item} appears in more than one bundle"
            )));
        }
        Ok(alloc)
    }

    /// Builds from an owner vector: `owner[j]` is the agent holding item `j`.
    pub fn from_owners(n: usize, owners: &[usize]) -> Self {
        let mut bundles = vec![Vec::new(); n];
        for (item, &agent) in owners.iter().enumerate() {
            bundles[agent].push(item);
        }
        Allocation { bundles }
    }

    pub fn num_agents(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundles(&self) -> &[Vec<usize>] {
        &self.bundles
    }

    pub fn bundle(&self, agent: usize) -> &[usize] {
        &self.bundles[agent]
    }

    pub fn into_bundles(self) -> Vec<Vec<usize>> {
        self.bundles
    }

    /// Adds `item` to `agent`'s bundle. The caller guarantees the item is unassigned.
    pub fn assign(&mut self, agent: usize, item: usize) {
        let b = &mut self.bundles[agent];
        let pos = b.partition_point(|&x| x < item);
        debug_assert!(b.get(pos) != Some(&item));
        b.insert(pos, item);
    }

    /// Removes `item` from `agent`'s bundle, returning whether it was there.
    pub fn release(&mut self, agent: usize, item: usize) -> bool {
        let b = &mut self.bundles[agent];
        match b.binary_search(&item) {
            Ok(pos) => {
                b.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn num_assigned(&self) -> usize {
        self.bundles.iter().map(Vec::len).sum()
    }

    /// Owner of each item in `0..num_items`, `None` for unassigned items.
    pub fn owners(&self, num_items: usize) -> Vec<Option<usize>> {
        let mut owners = vec![None; num_items];
        for (agent, b) in self.bundles.iter().enumerate() {
            for &j in b {
                if j < num_items {
                    owners[j] = Some(agent);
                }
            }
        }
        owners
    }

    fn first_overlap(&self) -> Option<usize> {
        let mut all: Vec<usize> = self.bundles.iter().flatten().copied().collect();
        all.sort_unstable();
        all.windows(2).find(|w| w[0] == w[1]).map(|w| w[0])
    }

    pub fn is_disjoint(&self) -> bool {
        self.first_overlap().is_none()
    }

    /// Disjoint and covering exactly `0..num_items`.
    pub fn is_complete(&self, num_items: usize) -> bool {
        let mut seen = vec![false; num_items];
        for &j in self.bundles.iter().flatten() {
            if j >= num_items || seen[j] {
                return false;
            }
            seen[j] = true;
        }
        seen.into_iter().all(|s| s)
    }

    /// Errors unless this allocation is a complete partition of the instance's items.
    pub fn check_complete(&self, inst: &Instance) -> Result<()> {
        if self.bundles.len() != inst.num_agents() {
            return Err(NswError::InvalidAllocation(format!(
                "allocation has {} bundles, instance has {} agents",
                self.bundles.len(),
                inst.num_agents()
            )));
        }
        if let Some(item) = self.first_overlap() {
            return Err(NswError::InvalidAllocation(format!(
                "item {item} appears in more than one bundle"
            )));
        }
        if let Some(&j) = self
            .bundles
            .iter()
            .flatten()
            .find(|&&j| j >= inst.num_items())
        {
            return Err(NswError::ItemOutOfRange {
                item: j,
                num_items: inst.num_items(),
            });
        }
        if self.num_assigned() != inst.num_items() {
            return Err(NswError::InvalidAllocation(format!(
                "partial allocation: {} of {} items assigned",
                self.num_assigned(),
                inst.num_items()
            )));
        }
        Ok(())
    }
}

/// NSW of a complete allocation, with its natural-log counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NswValue {
    pub nsw: f64,
    /// `-inf` exactly when some agent's bundle is worth zero.
    pub log_nsw: f64,
}

/// Weighted geometric mean of bundle values, computed in log space.
pub fn nsw(inst: &Instance, alloc: &Allocation) -> Result<NswValue> {
    alloc.check_complete(inst)?;
    Ok(nsw_of_values(inst.weights(), &inst.bundle_values(alloc)))
}

/// NSW of an explicit value vector.
pub fn nsw_of_values(weights: &[f64], values: &[f64]) -> NswValue {
    debug_assert_eq!(weights.len(), values.len());
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (&w, &v) in weights.iter().zip(values) {
        if v <= 0.0 {
            return NswValue {
                nsw: 0.0,
                log_nsw: f64::NEG_INFINITY,
            };
        }
        acc += w * v.ln();
    }
    let log_nsw = acc / total;
    NswValue {
        nsw: log_nsw.exp(),
        log_nsw,
    }
}

/// Items of a set ordered by one agent's singleton value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedItems {
    pub agent: usize,
    pub order: Vec<usize>,
}

/// Sorts `items` by `v_agent({j})` descending; ties by ascending item index.
pub fn rank_items(inst: &Instance, agent: usize, items: &[usize]) -> RankedItems {
    let mut keyed: Vec<(f64, usize)> = items
        .iter()
        .map(|&j| (inst.singleton(agent, j), j))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    RankedItems {
        agent,
        order: keyed.into_iter().map(|(_, j)| j).collect(),
    }
}

/// Keep-aside value `u_i`: the agent's total value for the items ranked
/// `2n+1 ..= m` in its own ranking. Zero when `m ≤ 2n`.
///
/// Budget-additive agents cap the sum at `c_i`; SPLC agents rank every copy
/// value as a separate virtual item.
pub fn keepaside_value(inst: &Instance, agent: usize) -> Result<f64> {
    let skip = 2 * inst.num_agents();
    let mut values = inst
        .valuation(agent)
        .virtual_item_values()
        .ok_or_else(|| {
            NswError::Incompatible(format!(
                "agent {agent}: keep-aside value needs an additive-like valuation, got {}",
                inst.valuation(agent).family_name()
            ))
        })?;
    values.sort_by(|a, b| b.total_cmp(a));
    let tail: f64 = values.iter().skip(skip).sum();
    Ok(match inst.valuation(agent) {
        Valuation::BudgetAdditive { cap, .. } => tail.min(*cap),
        _ => tail,
    })
}
