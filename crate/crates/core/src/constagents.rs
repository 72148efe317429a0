//! Grid search over agent value targets for a constant number of agents.
//!
//! Valuations are rescaled so every agent values the full item set at `Max`,
//! a power of `1+δ`. The search guesses an NSW value `OPT` on that grid and
//! asks a feasibility oracle whether some grid target vector with weighted
//! geometric mean at least `OPT` can be met up to a factor `1 − 1/e`.
//! Rescaling is never materialized: targets are divided by each agent's
//! scale factor before reaching the oracle.
//!
//! The module also carries the fractional machinery behind the rounded
//! oracle: multilinear-extension sampling, convex decomposition over the
//! allocation matroid and randomized swap rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NswError, Result};
use crate::exact::{first_matching, ValueTable, DEFAULT_LIMIT};
use crate::matching::{build_weights, max_weight_matching, WeightMode};
use crate::model::{Allocation, Instance};
use crate::reprematch::greedy_fill;
use crate::valuations::Valuation;

/// Slack of the feasibility test.
pub const ONE_MINUS_INV_E: f64 = 1.0 - 1.0 / std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// Exhaustive enumeration over all allocations.
    Exact,
    /// Fractional assignment, decomposition and swap rounding; heuristic.
    Rounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchConfig {
    pub delta: f64,
    /// `None` picks `δ` times the smallest grid power at or above the smallest
    /// positive rescaled singleton value.
    pub beta: Option<f64>,
    pub oracle: OracleKind,
    pub sample_count: usize,
    pub seed: u64,
    pub limit: u128,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        GridSearchConfig {
            delta: 0.05,
            beta: None,
            oracle: OracleKind::Exact,
            sample_count: 1000,
            seed: 0,
            limit: DEFAULT_LIMIT,
        }
    }
}

impl GridSearchConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(NswError::InvalidParameter(format!("delta must be positive, got {}", self.delta)));
        }
        if let Some(b) = self.beta {
            if !(b.is_finite() && b > 0.0) {
                return Err(NswError::InvalidParameter(format!("beta must be positive, got {b}")));
            }
        }
        if self.sample_count == 0 {
            return Err(NswError::InvalidParameter("sample count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Powers of `1+δ` addressed by integer exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub delta: f64,
}

impl Grid {
    pub fn value(self, k: i64) -> f64 {
        (1.0 + self.delta).powi(k as i32)
    }

    /// Smallest exponent whose power is at least `x`.
    pub fn ceil_exp(self, x: f64) -> i64 {
        let mut k = (x.ln() / (1.0 + self.delta).ln()).ceil() as i64;
        while self.value(k - 1) >= x {
            k -= 1;
        }
        while self.value(k) < x {
            k += 1;
        }
        k
    }
}

/// Diagnostics of one search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchOutcome {
    pub allocation: Allocation,
    /// Last feasible guess, in rescaled units.
    pub opt_guess: f64,
    pub max: f64,
    pub beta: f64,
    pub iterations: usize,
    pub oracle_calls: usize,
}

/// Minimal exponent vectors with `Σ η_i k_i ≥ Σ η_i · k_opt` and `k_i ≤ k_max`,
/// in lexicographic order.
pub fn target_vectors(weights: &[f64], k_opt: i64, k_max: i64) -> Vec<Vec<i64>> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let need = total * k_opt as f64;
    if n == 1 {
        return if k_opt <= k_max { vec![vec![k_opt]] } else { vec![] };
    }
    let low: Vec<i64> = (0..n)
        .map(|i| ((need - (total - weights[i]) * k_max as f64) / weights[i] - 1e-9).ceil() as i64)
        .collect();
    struct Walk<'a> {
        low: Vec<i64>,
        weights: &'a [f64],
        need: f64,
        k_max: i64,
        prefix: Vec<i64>,
        out: Vec<Vec<i64>>,
    }
    impl Walk<'_> {
        fn rec(&mut self, depth: usize, acc: f64) {
            let n = self.weights.len();
            if depth == n - 1 {
                let last = ((self.need - acc) / self.weights[n - 1] - 1e-9).ceil() as i64;
                let last = last.max(self.low[n - 1]);
                let sum = acc + self.weights[n - 1] * last as f64;
                // Rounding `last` up can leave slack that an earlier coordinate could give back.
                let minimal = (0..n - 1).all(|i| sum - self.weights[i] < self.need - 1e-9);
                if last <= self.k_max && minimal {
                    let mut v = self.prefix.clone();
                    v.push(last);
                    self.out.push(v);
                }
                return;
            }
            for k in self.low[depth]..=self.k_max {
                self.prefix[depth] = k;
                self.rec(depth + 1, acc + self.weights[depth] * k as f64);
            }
        }
    }
    let mut walk = Walk {
        low,
        weights,
        need,
        k_max,
        prefix: vec![0i64; n - 1],
        out: Vec::new(),
    };
    walk.rec(0, 0.0);
    walk.out
}

/// Whether some allocation gives every agent positive value. For subadditive
/// valuations this holds exactly when agents can be matched to distinct items
/// of positive singleton value.
fn all_positive_possible(inst: &Instance) -> Result<bool> {
    let items: Vec<usize> = inst.items().collect();
    if items.is_empty() {
        return Ok(false);
    }
    let w = build_weights(inst, &items, WeightMode::Phase1Singleton)?;
    Ok(max_weight_matching(&w).len() == inst.num_agents())
}

/// Runs the search and returns the final witness allocation with diagnostics.
pub fn const_agents_search(inst: &Instance, cfg: &GridSearchConfig) -> Result<GridSearchOutcome> {
    cfg.validate()?;
    let n = inst.num_agents();
    let m = inst.num_items();
    let grid = Grid { delta: cfg.delta };
    let all: Vec<usize> = inst.items().collect();
    let totals: Vec<f64> = (0..n).map(|i| inst.value(i, &all)).collect();

    if n == 1 {
        let alloc = Allocation::from_owners(1, &vec![0; m]);
        return Ok(GridSearchOutcome {
            allocation: alloc,
            opt_guess: totals[0],
            max: totals[0],
            beta: 0.0,
            iterations: 0,
            oracle_calls: 0,
        });
    }
    if totals.iter().any(|&t| t <= 0.0) || !all_positive_possible(inst)? {
        // NSW is zero everywhere: the first allocation in enumeration order.
        return Ok(GridSearchOutcome {
            allocation: Allocation::from_owners(n, &vec![0; m]),
            opt_guess: 0.0,
            max: 0.0,
            beta: 0.0,
            iterations: 0,
            oracle_calls: 0,
        });
    }

    let k_top = grid.ceil_exp(totals.iter().cloned().fold(0.0, f64::max));
    let max_value = grid.value(k_top);
    let scale: Vec<f64> = totals.iter().map(|&t| max_value / t).collect();
    let beta = match cfg.beta {
        Some(b) => b,
        None => {
            let min_pos = (0..n)
                .flat_map(|i| all.iter().map(move |&j| (i, j)))
                .map(|(i, j)| inst.singleton(i, j) * scale[i])
                .filter(|&v| v > 0.0)
                .fold(f64::INFINITY, f64::min);
            cfg.delta * grid.value(grid.ceil_exp(min_pos))
        }
    };
    let cap = 64 * ((max_value / beta).ln() / (1.0 + cfg.delta).ln()).ceil().max(1.0) as usize;

    let table = match cfg.oracle {
        OracleKind::Exact => {
            crate::exact::allocation_count(n, m)
                .filter(|&c| c <= cfg.limit)
                .ok_or(NswError::LimitExceeded {
                    required: crate::exact::allocation_count(n, m).unwrap_or(u128::MAX),
                    limit: cfg.limit,
                })?;
            ValueTable::build(inst)
        }
        OracleKind::Rounded => None,
    };

    let mut oracle_calls = 0usize;
    let mut test = |k_opt: i64, salt: u64| -> Result<Option<Allocation>> {
        for ks in target_vectors(inst.weights(), k_opt, k_top) {
            oracle_calls += 1;
            let need: Vec<f64> = ks
                .iter()
                .zip(&scale)
                .map(|(&k, &s)| ONE_MINUS_INV_E * grid.value(k) / s)
                .collect();
            let hit = match cfg.oracle {
                OracleKind::Exact => first_matching(inst, table.as_ref(), cfg.limit, |values| {
                    values
                        .iter()
                        .zip(&need)
                        .all(|(&v, &t)| v >= t - 1e-12 * t.max(1.0))
                })?,
                OracleKind::Rounded => rounded_oracle(
                    inst,
                    &need,
                    cfg.sample_count,
                    cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ oracle_calls as u64,
                ),
            };
            if hit.is_some() {
                return Ok(hit);
            }
        }
        Ok(None)
    };

    let mut k_opt = k_top;
    let mut k_hi = k_top;
    let mut best: Option<(Allocation, f64)> = None;
    let mut iterations = 0usize;
    while k_opt <= k_hi {
        iterations += 1;
        if iterations > cap {
            return Err(NswError::NonConvergence(cap));
        }
        let opt = grid.value(k_opt);
        match test(k_opt, iterations as u64)? {
            Some(x) => {
                best = Some((x, opt));
                let hi = grid.value(k_hi);
                k_opt = grid.ceil_exp(opt + (hi + beta - opt) / 2.0);
            }
            None => {
                // Everything at or above this guess is infeasible.
                k_hi = k_opt - 1;
                k_opt = grid.ceil_exp(opt / 2.0).min(k_hi);
            }
        }
    }
    let (allocation, opt_guess) = best.ok_or(NswError::NonConvergence(iterations))?;
    let mut allocation = allocation;
    let missing: Vec<usize> = allocation
        .owners(m)
        .iter()
        .enumerate()
        .filter(|(_, o)| o.is_none())
        .map(|(j, _)| j)
        .collect();
    greedy_fill(inst, &mut allocation, &missing);
    Ok(GridSearchOutcome {
        allocation,
        opt_guess,
        max: max_value,
        beta,
        iterations,
        oracle_calls,
    })
}

pub fn const_agents_solve(inst: &Instance, cfg: &GridSearchConfig) -> Result<Allocation> {
    Ok(const_agents_search(inst, cfg)?.allocation)
}

/// Looks for an integral allocation with `v_i ≥ need_i` by rounding a
/// fractional assignment tuned with multiplicative weights.
fn rounded_oracle(inst: &Instance, need: &[f64], samples: usize, seed: u64) -> Option<Allocation> {
    const ROUNDS: usize = 24;
    const ATTEMPTS: u64 = 16;
    let n = inst.num_agents();
    let m = inst.num_items();
    let mut lambda = vec![1.0f64; n];
    let mut y = FractionalAssignment::zeros(n, m);
    for round in 0..ROUNDS {
        for j in 0..m {
            let scores: Vec<f64> = (0..n)
                .map(|i| lambda[i] * inst.singleton(i, j) / need[i])
                .collect();
            let total: f64 = scores.iter().sum();
            for (row, score) in y.y.iter_mut().zip(&scores) {
                row[j] = if total > 0.0 { score / total } else { 0.0 };
            }
        }
        let ratios: Vec<f64> = (0..n)
            .map(|i| {
                multilinear_estimate(inst.valuation(i), &y.y[i], samples, seed.wrapping_add(round as u64))
                    / need[i]
            })
            .collect();
        if ratios.iter().all(|&r| r >= 1.0) {
            break;
        }
        for i in 0..n {
            lambda[i] *= (1.0 - ratios[i].min(2.0)).exp();
        }
    }
    let dec = decompose(&y).ok()?;
    for attempt in 0..ATTEMPTS {
        let mut alloc = swap_round(&dec, seed.wrapping_mul(31).wrapping_add(attempt));
        let missing: Vec<usize> = (0..m).filter(|&j| alloc.owners(m)[j].is_none()).collect();
        greedy_fill(inst, &mut alloc, &missing);
        if (0..n).all(|i| inst.value(i, alloc.bundle(i)) >= need[i] * (1.0 - 1e-12)) {
            return Some(alloc);
        }
    }
    None
}

/// Agents × items matrix in the allocation-matroid polytope: each item's
/// column sums to at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalAssignment {
    pub y: Vec<Vec<f64>>,
}

impl FractionalAssignment {
    pub fn zeros(n: usize, m: usize) -> Self {
        FractionalAssignment {
            y: vec![vec![0.0; m]; n],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.y.len()
    }

    pub fn num_items(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }

    /// Indicator matrix of a (possibly partial) allocation.
    pub fn indicator(alloc: &Allocation, m: usize) -> Self {
        let mut f = FractionalAssignment::zeros(alloc.num_agents(), m);
        for (i, b) in alloc.bundles().iter().enumerate() {
            for &j in b {
                f.y[i][j] = 1.0;
            }
        }
        f
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.num_items();
        for (i, row) in self.y.iter().enumerate() {
            if row.len() != m {
                return Err(NswError::InvalidParameter(format!("row {i} has {} entries, expected {m}", row.len())));
            }
            if let Some(j) = row.iter().position(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) {
                return Err(NswError::InvalidParameter(format!("entry ({i}, {j}) = {} outside [0, 1]", row[j])));
            }
        }
        for j in 0..m {
            let s: f64 = self.y.iter().map(|r| r[j]).sum();
            if s > 1.0 + 1e-9 {
                return Err(NswError::InvalidParameter(format!("item {j} is assigned {s} > 1 in total")));
            }
        }
        Ok(())
    }
}

/// `E[v(Z)]` where item `j` joins `Z` independently with probability `row[j]`,
/// estimated from `samples` draws.
pub fn multilinear_estimate(val: &Valuation, row: &[f64], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = Vec::with_capacity(row.len());
    let mut total = 0.0;
    for _ in 0..samples.max(1) {
        set.clear();
        for (j, &p) in row.iter().enumerate() {
            if p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p) {
                set.push(j);
            }
        }
        total += val.value_unchecked(&set);
    }
    total / samples.max(1) as f64
}

/// Convex combination of (possibly partial) allocations.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDecomposition {
    pub num_agents: usize,
    pub num_items: usize,
    pub terms: Vec<(f64, Allocation)>,
}

impl ConvexDecomposition {
    /// `Σ β_k · indicator(term_k)`.
    pub fn reconstruct(&self) -> FractionalAssignment {
        let mut f = FractionalAssignment::zeros(self.num_agents, self.num_items);
        for (beta, alloc) in &self.terms {
            for (i, b) in alloc.bundles().iter().enumerate() {
                for &j in b {
                    f.y[i][j] += beta;
                }
            }
        }
        f
    }
}

const MASS_EPS: f64 = 1e-12;

/// Peels `y` into at most `n·m + 1` allocations. Each step gives every item to
/// the option (an agent, or nobody) with the largest remaining mass, ties to the
/// lowest agent, and takes the smallest of those masses as the coefficient.
pub fn decompose(y: &FractionalAssignment) -> Result<ConvexDecomposition> {
    y.validate()?;
    let n = y.num_agents();
    let m = y.num_items();
    // residual[j][o]: o < n is an agent, o == n is "nobody".
    let mut residual: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut r: Vec<f64> = (0..n).map(|i| y.y[i][j].max(0.0)).collect();
            let s: f64 = r.iter().sum();
            r.push((1.0 - s).max(0.0));
            r
        })
        .collect();
    for r in residual.iter_mut() {
        for x in r.iter_mut() {
            if *x < MASS_EPS {
                *x = 0.0;
            }
        }
    }
    let mut terms = Vec::new();
    let mut remaining = 1.0f64;
    while remaining > MASS_EPS && terms.len() <= n * m + 1 {
        let mut choice = vec![n; m];
        let mut coef = remaining;
        for j in 0..m {
            let r = &residual[j];
            let mut best = 0;
            for o in 1..=n {
                if r[o] > r[best] {
                    best = o;
                }
            }
            choice[j] = best;
            coef = coef.min(r[best]);
        }
        if coef <= MASS_EPS {
            break;
        }
        let mut bundles = vec![Vec::new(); n];
        for j in 0..m {
            let o = choice[j];
            residual[j][o] -= coef;
            if residual[j][o] < MASS_EPS {
                residual[j][o] = 0.0;
            }
            if o < n {
                bundles[o].push(j);
            }
        }
        remaining -= coef;
        terms.push((coef, Allocation::from_bundles(bundles)?));
    }
    if terms.is_empty() {
        terms.push((1.0, Allocation::empty(n)));
    }
    Ok(ConvexDecomposition {
        num_agents: n,
        num_items: m,
        terms,
    })
}

/// Merges the terms left to right into one allocation. Where two terms
/// disagree on an item, the merged set keeps the first term's choice with
/// probability `β_0/(β_0+β_1)` and the second's otherwise, which preserves
/// every `(agent, item)` marginal in expectation.
pub fn swap_round(dec: &ConvexDecomposition, seed: u64) -> Allocation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = dec.num_items;
    let owners = |a: &Allocation| a.owners(m);
    let mut iter = dec.terms.iter();
    let Some((b0, first)) = iter.next() else {
        return Allocation::empty(dec.num_agents);
    };
    let mut beta0 = *b0;
    let mut s0 = owners(first);
    for (beta1, term) in iter {
        let mut s1 = owners(term);
        for j in 0..m {
            if s0[j] != s1[j] {
                if rng.gen::<f64>() * (beta0 + beta1) < beta0 {
                    s1[j] = s0[j];
                } else {
                    s0[j] = s1[j];
                }
            }
        }
        debug_assert_eq!(s0, s1);
        beta0 += beta1;
    }
    let mut bundles = vec![Vec::new(); dec.num_agents];
    for (j, o) in s0.iter().enumerate() {
        if let Some(i) = o {
            bundles[*i].push(j);
        }
    }
    Allocation::from_bundles(bundles).expect("owner vector is disjoint")
}
