//! Envy-freeness up to one item (EF1), its strong form, and Pareto optimality.
//!
//! Both envy predicates compare raw bundle values; entitlements play no role.

use serde::Serialize;

use crate::error::Result;
use crate::exact::is_pareto_optimal;
use crate::model::{Allocation, Instance};

fn eps(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

/// Agent `envier` still envies `envied` after every allowed single-item removal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvyWitness {
    pub envier: usize,
    pub envied: usize,
    pub reason: String,
}

fn without(bundle: &[usize], item: usize) -> Vec<usize> {
    bundle.iter().copied().filter(|&g| g != item).collect()
}

/// EF1: for every `i ≠ k`, `v_i(x_i) ≥ v_i(x_k)` or some `g ∈ x_k` has
/// `v_i(x_i) ≥ v_i(x_k \ {g})`. Returns the violating pairs.
pub fn ef1_violations(inst: &Instance, alloc: &Allocation) -> Result<Vec<EnvyWitness>> {
    alloc.check_complete(inst)?;
    let n = inst.num_agents();
    let mut out = Vec::new();
    for i in 0..n {
        let own = inst.value(i, alloc.bundle(i));
        for k in (0..n).filter(|&k| k != i) {
            let other = alloc.bundle(k);
            if own + eps(own) >= inst.value(i, other) {
                continue;
            }
            let fixed = other
                .iter()
                .any(|&g| own + eps(own) >= inst.value(i, &without(other, g)));
            if !fixed {
                out.push(EnvyWitness {
                    envier: i,
                    envied: k,
                    reason: format!(
                        "agent {i} values its bundle at {own} and still envies agent {k} after any single removal"
                    ),
                });
            }
        }
    }
    Ok(out)
}

pub fn is_ef1(inst: &Instance, alloc: &Allocation) -> Result<bool> {
    Ok(ef1_violations(inst, alloc)?.is_empty())
}

/// Strong EF1: every bundle `x_k` is empty or has one item `g` with
/// `v_i(x_i) ≥ v_i(x_k \ {g})` for every agent `i`. Witnesses name a bundle
/// (as `envied`) and the envier blocking the first candidate item.
pub fn strong_ef1_violations(inst: &Instance, alloc: &Allocation) -> Result<Vec<EnvyWitness>> {
    alloc.check_complete(inst)?;
    let n = inst.num_agents();
    let own: Vec<f64> = (0..n).map(|i| inst.value(i, alloc.bundle(i))).collect();
    let mut out = Vec::new();
    for k in 0..n {
        let bundle = alloc.bundle(k);
        if bundle.is_empty() {
            continue;
        }
        let blocker = |g: usize| {
            let rest = without(bundle, g);
            (0..n).find(|&i| i != k && own[i] + eps(own[i]) < inst.value(i, &rest))
        };
        let blockers: Vec<Option<usize>> = bundle.iter().map(|&g| blocker(g)).collect();
        if blockers.iter().all(Option::is_some) {
            let envier = blockers[0].expect("all blocked");
            out.push(EnvyWitness {
                envier,
                envied: k,
                reason: format!("no single item of agent {k}'s bundle removes every agent's envy"),
            });
        }
    }
    Ok(out)
}

pub fn is_strong_ef1(inst: &Instance, alloc: &Allocation) -> Result<bool> {
    Ok(strong_ef1_violations(inst, alloc)?.is_empty())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub ef1: bool,
    pub strong_ef1: bool,
    /// Present only when the exhaustive Pareto check ran.
    pub po: Option<bool>,
    pub witnesses: Vec<EnvyWitness>,
}

/// EF1 and strong EF1, plus Pareto optimality when `po_limit` is given.
pub fn fairness_report(inst: &Instance, alloc: &Allocation, po_limit: Option<u128>) -> Result<FairnessReport> {
    let mut witnesses = ef1_violations(inst, alloc)?;
    let ef1 = witnesses.is_empty();
    let strong = strong_ef1_violations(inst, alloc)?;
    let strong_ef1 = strong.is_empty();
    witnesses.extend(strong);
    let po = match po_limit {
        Some(limit) => Some(is_pareto_optimal(inst, alloc, limit)?.is_none()),
        None => None,
    };
    Ok(FairnessReport {
        ef1,
        strong_ef1,
        po,
        witnesses,
    })
}
