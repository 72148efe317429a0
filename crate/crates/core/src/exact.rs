//! Exhaustive oracles: optimal NSW, feasibility of value targets, Pareto optimality.
//!
//! Allocations are enumerated as owner vectors read as base-`n` numbers with
//! item 0 as the most significant digit, so index order is lexicographic
//! order on `(owner(0), owner(1), …)`. Every "first" result refers to this order.

use rayon::prelude::*;

use crate::error::{NswError, Result};
use crate::model::{nsw_of_values, Allocation, Instance};
use crate::valuations::Valuation;

/// Default cap on the number of enumerated allocations.
pub const DEFAULT_LIMIT: u128 = 10_000_000;

/// Largest item count for which per-agent subset values are tabulated.
const TABLE_MAX_ITEMS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best: Allocation,
    pub opt_nsw: f64,
    pub opt_log_nsw: f64,
    pub explored: u128,
}

/// `n^m`, or `None` on overflow.
pub fn allocation_count(n: usize, m: usize) -> Option<u128> {
    (n as u128).checked_pow(m as u32)
}

fn check_limit(inst: &Instance, limit: u128) -> Result<u128> {
    let count = allocation_count(inst.num_agents(), inst.num_items()).unwrap_or(u128::MAX);
    if count > limit {
        return Err(NswError::LimitExceeded {
            required: count,
            limit,
        });
    }
    Ok(count)
}

/// Per-agent value of every item subset, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct ValueTable {
    values: Vec<Vec<f64>>,
}

impl ValueTable {
    /// Tabulates `v_i(S)` for all `S`; `None` when there are too many items.
    pub fn build(inst: &Instance) -> Option<Self> {
        let m = inst.num_items();
        if m > TABLE_MAX_ITEMS {
            return None;
        }
        let values = (0..inst.num_agents())
            .map(|i| {
                (0..1usize << m)
                    .into_par_iter()
                    .map(|mask| {
                        let set: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
                        inst.value(i, &set)
                    })
                    .collect()
            })
            .collect();
        Some(ValueTable { values })
    }

    pub fn value(&self, agent: usize, mask: usize) -> f64 {
        self.values[agent][mask]
    }
}

/// Walks allocation indices `start..end`, handing each owner vector and value vector to `visit`.
/// Stops early when `visit` returns `true`.
fn walk<F>(inst: &Instance, table: Option<&ValueTable>, start: u128, end: u128, mut visit: F)
where
    F: FnMut(u128, &[usize], &[f64]) -> bool,
{
    let n = inst.num_agents();
    let m = inst.num_items();
    let mut owners = vec![0usize; m];
    let mut rest = start;
    for j in (0..m).rev() {
        owners[j] = (rest % n as u128) as usize;
        rest /= n as u128;
    }
    let mut values = vec![0.0; n];
    let mut masks = vec![0usize; n];
    let mut bundles: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut idx = start;
    while idx < end {
        match table {
            Some(t) => {
                masks.iter_mut().for_each(|x| *x = 0);
                for (j, &o) in owners.iter().enumerate() {
                    masks[o] |= 1 << j;
                }
                for i in 0..n {
                    values[i] = t.value(i, masks[i]);
                }
            }
            None => {
                bundles.iter_mut().for_each(Vec::clear);
                for (j, &o) in owners.iter().enumerate() {
                    bundles[o].push(j);
                }
                for i in 0..n {
                    values[i] = inst.value(i, &bundles[i]);
                }
            }
        }
        if visit(idx, &owners, &values) {
            return;
        }
        idx += 1;
        for j in (0..m).rev() {
            owners[j] += 1;
            if owners[j] < n {
                break;
            }
            owners[j] = 0;
        }
    }
}

/// Table worth building only when subsets are no more numerous than allocations.
fn auto_table(inst: &Instance) -> Option<ValueTable> {
    if inst.num_agents() < 2 {
        None
    } else {
        ValueTable::build(inst)
    }
}

fn chunks(count: u128) -> Vec<(u128, u128)> {
    let pieces = (rayon::current_num_threads() as u128 * 8).max(1);
    let size = count.div_ceil(pieces).max(1024);
    let mut out = Vec::new();
    let mut s = 0;
    while s < count {
        out.push((s, (s + size).min(count)));
        s += size;
    }
    out
}

/// Total order on value vectors: fewer zero-value agents first, then larger
/// weighted log-sum over the positive agents.
#[derive(Debug, Clone, Copy)]
struct Key {
    zeros: usize,
    log: f64,
}

impl Key {
    fn of(weights: &[f64], values: &[f64]) -> Key {
        let mut zeros = 0;
        let mut log = 0.0;
        for (&w, &v) in weights.iter().zip(values) {
            if v > 0.0 {
                log += w * v.ln();
            } else {
                zeros += 1;
            }
        }
        Key { zeros, log }
    }

    fn better(self, o: Key) -> bool {
        self.zeros < o.zeros || (self.zeros == o.zeros && self.log > o.log)
    }
}

fn from_owner_index(n: usize, m: usize, mut idx: u128) -> Allocation {
    let mut owners = vec![0usize; m];
    for j in (0..m).rev() {
        owners[j] = (idx % n as u128) as usize;
        idx /= n as u128;
    }
    Allocation::from_owners(n, &owners)
}

fn opt_result(inst: &Instance, best: Allocation, explored: u128) -> OptResult {
    let v = nsw_of_values(inst.weights(), &inst.bundle_values(&best));
    OptResult {
        best,
        opt_nsw: v.nsw,
        opt_log_nsw: v.log_nsw,
        explored,
    }
}

/// Maximum-NSW allocation by exhaustive enumeration; the earliest optimum wins ties.
pub fn exact_opt(inst: &Instance, limit: u128) -> Result<OptResult> {
    let count = check_limit(inst, limit)?;
    let table = auto_table(inst);
    let weights = inst.weights();
    let best = chunks(count)
        .into_par_iter()
        .map(|(s, e)| {
            let mut best: Option<(Key, u128)> = None;
            walk(inst, table.as_ref(), s, e, |idx, _, values| {
                let k = Key::of(weights, values);
                if best.is_none_or(|(b, _)| k.better(b)) {
                    best = Some((k, idx));
                }
                false
            });
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(x), Some(y)) => {
                    if y.0.better(x.0) || (!x.0.better(y.0) && y.1 < x.1) {
                        Some(y)
                    } else {
                        Some(x)
                    }
                }
            },
        )
        .map(|(_, idx)| idx)
        .unwrap_or(0);
    let alloc = from_owner_index(inst.num_agents(), inst.num_items(), best);
    Ok(opt_result(inst, alloc, count))
}

/// First allocation in enumeration order satisfying `accept` on its value vector.
pub fn first_matching<F>(inst: &Instance, table: Option<&ValueTable>, limit: u128, accept: F) -> Result<Option<Allocation>>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let count = check_limit(inst, limit)?;
    let found = chunks(count)
        .into_par_iter()
        .filter_map(|(s, e)| {
            let mut hit = None;
            walk(inst, table, s, e, |idx, _, values| {
                if accept(values) {
                    hit = Some(idx);
                    true
                } else {
                    false
                }
            });
            hit
        })
        .min();
    Ok(found.map(|idx| from_owner_index(inst.num_agents(), inst.num_items(), idx)))
}

/// Relative slack applied to every `≥` comparison on values.
fn meets(value: f64, target: f64) -> bool {
    value >= target - 1e-12 * target.abs().max(1.0)
}

/// First complete allocation with `v_i(x_i) ≥ γ·V_i` for all agents, if any.
pub fn feasible(inst: &Instance, targets: &[f64], gamma: f64, limit: u128) -> Result<Option<Allocation>> {
    if targets.len() != inst.num_agents() {
        return Err(NswError::InvalidParameter(format!(
            "{} targets for {} agents",
            targets.len(),
            inst.num_agents()
        )));
    }
    let table = auto_table(inst);
    first_matching(inst, table.as_ref(), limit, |values| {
        values.iter().zip(targets).all(|(&v, &t)| meets(v, gamma * t))
    })
}

/// `Ok(None)` when Pareto optimal, otherwise the first allocation that weakly
/// improves every agent and strictly improves one.
pub fn is_pareto_optimal(inst: &Instance, alloc: &Allocation, limit: u128) -> Result<Option<Allocation>> {
    alloc.check_complete(inst)?;
    let base = inst.bundle_values(alloc);
    let table = auto_table(inst);
    let tol = |x: f64| 1e-12 * x.abs().max(1.0);
    first_matching(inst, table.as_ref(), limit, |values| {
        let weak = values.iter().zip(&base).all(|(&v, &b)| v >= b - tol(b));
        let strict = values.iter().zip(&base).any(|(&v, &b)| v > b + tol(b));
        weak && strict
    })
}

/// Optimal NSW for additive instances by grouping identical items.
///
/// Items with the same value for every agent are interchangeable, so only the
/// number of each group's items per agent matters. `limit` caps the number of
/// count combinations. The returned allocation gives each agent its share of
/// a group's items in ascending item order.
pub fn exact_opt_grouped(inst: &Instance, limit: u128) -> Result<OptResult> {
    let n = inst.num_agents();
    let cols: Vec<Vec<f64>> = inst
        .items()
        .map(|j| {
            inst.valuations()
                .iter()
                .map(|v| match v {
                    Valuation::Additive { values } => Ok(values[j]),
                    Valuation::RestrictedAdditive {
                        item_values,
                        interest,
                    } => Ok(if interest[j] { item_values[j] } else { 0.0 }),
                    other => Err(NswError::Incompatible(format!(
                        "grouped enumeration needs additive valuations, got {}",
                        other.family_name()
                    ))),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (j, col) in cols.into_iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == col) {
            Some(g) => g.1.push(j),
            None => groups.push((col, vec![j])),
        }
    }
    // Count vectors splitting `size` items among `n` agents, lexicographic.
    fn splits(size: usize, n: usize) -> Vec<Vec<usize>> {
        if n == 1 {
            return vec![vec![size]];
        }
        let mut out = Vec::new();
        for first in (0..=size).rev() {
            for mut rest in splits(size - first, n - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }
    let options: Vec<Vec<Vec<usize>>> = groups.iter().map(|g| splits(g.1.len(), n)).collect();
    let mut count: u128 = 1;
    for o in &options {
        count = count.saturating_mul(o.len() as u128);
    }
    if count > limit {
        return Err(NswError::LimitExceeded {
            required: count,
            limit,
        });
    }
    let weights = inst.weights();
    let decode = |mut idx: u128| -> Vec<usize> {
        let mut pick = vec![0; options.len()];
        for g in (0..options.len()).rev() {
            let len = options[g].len() as u128;
            pick[g] = (idx % len) as usize;
            idx /= len;
        }
        pick
    };
    let best = (0..count)
        .into_par_iter()
        .map(|idx| {
            let pick = decode(idx);
            let mut values = vec![0.0; n];
            for (g, &p) in pick.iter().enumerate() {
                for (i, &c) in options[g][p].iter().enumerate() {
                    values[i] += c as f64 * groups[g].0[i];
                }
            }
            (Key::of(weights, &values), idx)
        })
        .reduce_with(|x, y| {
            if y.0.better(x.0) || (!x.0.better(y.0) && y.1 < x.1) {
                y
            } else {
                x
            }
        });
    let mut alloc = Allocation::empty(n);
    if let Some((_, idx)) = best {
        for (g, &p) in decode(idx).iter().enumerate() {
            let mut items = groups[g].1.iter();
            for (i, &c) in options[g][p].iter().enumerate() {
                for _ in 0..c {
                    alloc.assign(i, *items.next().expect("split sums to group size"));
                }
            }
        }
    }
    Ok(opt_result(inst, alloc, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::nsw;

    fn additive(rows: &[&[f64]]) -> Instance {
        Instance::symmetric(
            rows.iter().map(|r| Valuation::additive(r.to_vec())).collect(),
            rows[0].len(),
        )
        .unwrap()
    }

    #[test]
    fn single_agent_takes_all() {
        let inst = additive(&[&[1.0, 2.0, 3.0]]);
        let r = exact_opt(&inst, DEFAULT_LIMIT).unwrap();
        assert_eq!(r.best.bundle(0), &[0, 1, 2]);
        assert!((r.opt_nsw - 6.0).abs() < 1e-12);
        assert_eq!(r.explored, 1);
    }

    #[test]
    fn two_by_two_split() {
        let inst = additive(&[&[3.0, 1.0], &[1.0, 3.0]]);
        let r = exact_opt(&inst, DEFAULT_LIMIT).unwrap();
        assert!((r.opt_nsw - 3.0).abs() < 1e-12);
        assert_eq!(r.best.bundles(), &[vec![0], vec![1]]);
        assert_eq!(r.explored, 4);
    }

    #[test]
    fn limit_is_enforced() {
        let inst = additive(&[&[1.0; 10], &[1.0; 10]]);
        assert!(matches!(
            exact_opt(&inst, 1000),
            Err(NswError::LimitExceeded { required: 1024, limit: 1000 })
        ));
    }

    #[test]
    fn zero_agents_counted_before_log() {
        // Every allocation leaves someone at zero; the best keeps one agent positive with most value.
        let inst = additive(&[&[1.0, 0.0], &[2.0, 0.0]]);
        let r = exact_opt(&inst, DEFAULT_LIMIT).unwrap();
        assert_eq!(r.opt_nsw, 0.0);
        assert!(inst.value(1, r.best.bundle(1)) == 2.0);
    }

    #[test]
    fn feasibility_queries() {
        let inst = additive(&[&[3.0, 1.0, 2.0], &[1.0, 3.0, 2.0]]);
        let first = feasible(&inst, &[0.0, 0.0], 1.0, DEFAULT_LIMIT).unwrap().unwrap();
        assert_eq!(first.bundles(), &[vec![0, 1, 2], vec![]]);
        let opt = exact_opt(&inst, DEFAULT_LIMIT).unwrap();
        let targets = inst.bundle_values(&opt.best);
        assert!(feasible(&inst, &targets, 1.0, DEFAULT_LIMIT).unwrap().is_some());
        let raised: Vec<f64> = targets.iter().map(|t| t * 1.01).collect();
        assert!(feasible(&inst, &raised, 1.0, DEFAULT_LIMIT).unwrap().is_none());
    }

    #[test]
    fn pareto_witness_dominates() {
        let e = 0.01;
        let inst = additive(&[&[2.0 + e, 2.0, e, e], &[1.0, 1.0, 1.0, 1.0]]);
        let smatch_out = Allocation::from_bundles(vec![vec![0, 2], vec![1, 3]]).unwrap();
        let w = is_pareto_optimal(&inst, &smatch_out, DEFAULT_LIMIT)
            .unwrap()
            .expect("dominated");
        assert_eq!(w.bundles(), &[vec![0, 1], vec![2, 3]]);
        let before = inst.bundle_values(&smatch_out);
        let after = inst.bundle_values(&w);
        assert!(after.iter().zip(&before).all(|(a, b)| a >= b));
        assert!(after.iter().zip(&before).any(|(a, b)| a > b));
        let single = additive(&[&[1.0, 1.0]]);
        let all = Allocation::from_bundles(vec![vec![0, 1]]).unwrap();
        assert!(is_pareto_optimal(&single, &all, DEFAULT_LIMIT).unwrap().is_none());
    }

    #[test]
    fn grouped_matches_plain_enumeration() {
        let inst = Instance::new(
            vec![2.0, 1.0, 1.0],
            vec![
                Valuation::additive(vec![3.0, 3.0, 1.0, 1.0, 0.0, 2.0]),
                Valuation::additive(vec![2.0, 2.0, 1.0, 1.0, 4.0, 0.0]),
                Valuation::additive(vec![1.0, 1.0, 2.0, 2.0, 1.0, 1.0]),
            ],
            6,
        )
        .unwrap();
        let plain = exact_opt(&inst, DEFAULT_LIMIT).unwrap();
        let grouped = exact_opt_grouped(&inst, DEFAULT_LIMIT).unwrap();
        assert!((plain.opt_log_nsw - grouped.opt_log_nsw).abs() < 1e-12);
        let g = nsw(&inst, &grouped.best).unwrap();
        assert!((g.nsw - grouped.opt_nsw).abs() < 1e-12);
    }
}
