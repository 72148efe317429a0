//! Independent brute-force oracles shared by the integration tests. None of
//! these call the library's solvers, matching engine or exhaustive module.

#![allow(dead_code)]

use nsw_core::{Allocation, Instance, Valuation, WeightMatrix};

/// Weighted geometric mean of a value vector; zero if any value is zero.
pub fn geo_mean(weights: &[f64], values: &[f64]) -> f64 {
    if values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    let total: f64 = weights.iter().sum();
    let log: f64 = weights.iter().zip(values).map(|(w, v)| w * v.ln()).sum();
    (log / total).exp()
}

fn bundles_of(n: usize, owners: &[usize]) -> Vec<Vec<usize>> {
    let mut b = vec![Vec::new(); n];
    for (j, &o) in owners.iter().enumerate() {
        b[o].push(j);
    }
    b
}

/// Visits every owner vector in `n^m` by recursion.
pub fn for_each_allocation(n: usize, m: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(j: usize, n: usize, owners: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if j == owners.len() {
            f(owners);
            return;
        }
        for a in 0..n {
            owners[j] = a;
            rec(j + 1, n, owners, f);
        }
    }
    let mut owners = vec![0; m];
    rec(0, n, &mut owners, f);
}

pub fn values_of(inst: &Instance, owners: &[usize]) -> Vec<f64> {
    bundles_of(inst.num_agents(), owners)
        .iter()
        .enumerate()
        .map(|(i, b)| inst.value(i, b))
        .collect()
}

/// Optimal NSW by plain recursion over all allocations.
pub fn brute_opt(inst: &Instance) -> f64 {
    let mut best = 0.0f64;
    for_each_allocation(inst.num_agents(), inst.num_items(), &mut |o| {
        best = best.max(geo_mean(inst.weights(), &values_of(inst, o)));
    });
    best
}

pub fn nsw_of(inst: &Instance, alloc: &Allocation) -> f64 {
    assert!(alloc.is_complete(inst.num_items()), "allocation must be complete");
    geo_mean(inst.weights(), &inst.bundle_values(alloc))
}

/// True when no allocation weakly improves everyone and strictly improves someone.
pub fn brute_pareto(inst: &Instance, alloc: &Allocation) -> bool {
    let base = inst.bundle_values(alloc);
    let mut dominated = false;
    for_each_allocation(inst.num_agents(), inst.num_items(), &mut |o| {
        if dominated {
            return;
        }
        let v = values_of(inst, o);
        let weak = v.iter().zip(&base).all(|(a, b)| *a >= b - 1e-9);
        let strict = v.iter().zip(&base).any(|(a, b)| *a > b + 1e-9);
        dominated = weak && strict;
    });
    !dominated
}

/// EF1 straight from the definition.
pub fn brute_ef1(inst: &Instance, alloc: &Allocation) -> bool {
    let n = inst.num_agents();
    (0..n).all(|i| {
        let own = inst.value(i, alloc.bundle(i));
        (0..n).filter(|&k| k != i).all(|k| {
            let other = alloc.bundle(k);
            own + 1e-9 >= inst.value(i, other)
                || other.iter().any(|&g| {
                    let rest: Vec<usize> = other.iter().copied().filter(|&x| x != g).collect();
                    own + 1e-9 >= inst.value(i, &rest)
                })
        })
    })
}

/// Strong EF1 straight from the definition (one removable item per bundle).
pub fn brute_strong_ef1(inst: &Instance, alloc: &Allocation) -> bool {
    let n = inst.num_agents();
    (0..n).all(|k| {
        let bundle = alloc.bundle(k);
        bundle.is_empty()
            || bundle.iter().any(|&g| {
                let rest: Vec<usize> = bundle.iter().copied().filter(|&x| x != g).collect();
                (0..n).all(|i| inst.value(i, alloc.bundle(i)) + 1e-9 >= inst.value(i, &rest))
            })
    })
}

/// Best (cardinality, weight) over all matchings that avoid non-finite edges.
pub fn brute_matching(w: &WeightMatrix) -> (usize, f64) {
    fn rec(r: usize, w: &WeightMatrix, used: &mut Vec<bool>, card: usize, sum: f64, best: &mut (usize, f64)) {
        if r == w.rows() {
            if card > best.0 || (card == best.0 && sum > best.1) {
                *best = (card, sum);
            }
            return;
        }
        rec(r + 1, w, used, card, sum, best);
        for c in 0..w.cols() {
            let x = w.get(r, c);
            if !used[c] && x.is_finite() {
                used[c] = true;
                rec(r + 1, w, used, card + 1, sum + x, best);
                used[c] = false;
            }
        }
    }
    let mut best = (0, f64::NEG_INFINITY);
    rec(0, w, &mut vec![false; w.cols()], 0, 0.0, &mut best);
    if best.0 == 0 {
        best.1 = 0.0;
    }
    best
}

/// Exact multilinear extension by summing over all `2^m` subsets.
pub fn exact_multilinear(val: &Valuation, row: &[f64]) -> f64 {
    let m = row.len();
    let mut total = 0.0;
    for mask in 0..1usize << m {
        let mut p = 1.0;
        let mut set = Vec::new();
        for (j, &y) in row.iter().enumerate() {
            if mask >> j & 1 == 1 {
                p *= y;
                set.push(j);
            } else {
                p *= 1.0 - y;
            }
        }
        if p > 0.0 {
            total += p * val.value(&set).unwrap();
        }
    }
    total
}
