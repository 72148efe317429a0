//! Instance generators and the JSON instance file format.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{NswError, Result};
use crate::model::Instance;
use crate::valuations::Valuation;

pub const SCHEMA_VERSION: u32 = 1;

/// Generator family with its parameters. `None` fields take documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Two agents, `m + 1` items; default `eps = 0.5·M/m`.
    Example1 { m: usize, big: f64, eps: Option<f64> },
    /// Two agents with half-owned item sets; `m` even.
    SubadditiveGap { m: usize, big: f64 },
    /// Two XOS agents over `2k` items; default `eps = 1e-3·M`.
    XosGap { k: usize, big: f64, eps: Option<f64> },
    /// `n` agents, `sets` groups of `n²` items, agent 0 weighted `weight`.
    /// Defaults: `eps = 1e-3·M`, `eps_bar = eps/2`.
    AsymTight {
        n: usize,
        sets: usize,
        weight: f64,
        big: f64,
        eps: Option<f64>,
        eps_bar: Option<f64>,
    },
    /// Two agents, four items where the matching output is Pareto dominated.
    PoGap { eps: f64 },
    RandomAdditive { n: usize, m: usize, lo: f64, hi: f64 },
    /// Shared item values in `[1, 10]`; each agent wants each item with probability `interest`.
    RandomRestricted { n: usize, m: usize, interest: f64 },
    /// Values in `[0, 10]`, cap between 30% and 90% of the agent's total.
    RandomBa { n: usize, m: usize },
    /// `kinds` item kinds with `1..=max_copies` copies each.
    RandomSplc { n: usize, kinds: usize, max_copies: usize },
    /// Per-agent universe of `universe` weighted elements; items cover `1..=sets_per_item` of them.
    RandomCoverage {
        n: usize,
        m: usize,
        universe: usize,
        sets_per_item: usize,
    },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Example1 { .. } => "example1",
            FamilySpec::SubadditiveGap { .. } => "subadditive_gap",
            FamilySpec::XosGap { .. } => "xos_gap",
            FamilySpec::AsymTight { .. } => "asym_tight",
            FamilySpec::PoGap { .. } => "po_gap",
            FamilySpec::RandomAdditive { .. } => "random_additive",
            FamilySpec::RandomRestricted { .. } => "random_restricted",
            FamilySpec::RandomBa { .. } => "random_ba",
            FamilySpec::RandomSplc { .. } => "random_splc",
            FamilySpec::RandomCoverage { .. } => "random_coverage",
        }
    }
}

/// Provenance stored alongside an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub family: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn bad(msg: impl Into<String>) -> NswError {
    NswError::InvalidParameter(msg.into())
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{what} must be positive, got {x}")))
    }
}

fn at_least(x: usize, min: usize, what: &str) -> Result<()> {
    if x >= min {
        Ok(())
    } else {
        Err(bad(format!("{what} must be at least {min}, got {x}")))
    }
}

/// Builds an instance of the given family. Deterministic in `seed`; the
/// constructed families ignore it.
pub fn generate(spec: &FamilySpec, seed: u64) -> Result<(Instance, Metadata)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = match *spec {
        FamilySpec::Example1 { m, big, eps } => {
            at_least(m, 1, "m")?;
            positive(big, "M")?;
            let eps = eps.unwrap_or(0.5 * big / m as f64);
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(bad(format!("eps must be non-negative, got {eps}")));
            }
            example1(m, big, eps)?
        }
        FamilySpec::SubadditiveGap { m, big } => {
            if m == 0 || m % 2 != 0 {
                return Err(bad(format!("m must be even, got {m}")));
            }
            positive(big, "M")?;
            subadditive_gap(m, big)?
        }
        FamilySpec::XosGap { k, big, eps } => {
            at_least(k, 4, "k")?;
            positive(big, "M")?;
            let eps = eps.unwrap_or(1e-3 * big);
            positive(eps, "eps")?;
            xos_gap(k, big, eps)?
        }
        FamilySpec::AsymTight {
            n,
            sets,
            weight,
            big,
            eps,
            eps_bar,
        } => {
            at_least(n, 2, "n")?;
            at_least(sets, 1, "sets")?;
            positive(weight, "W")?;
            positive(big, "M")?;
            let eps = eps.unwrap_or(1e-3 * big);
            let eps_bar = eps_bar.unwrap_or(eps / 2.0);
            positive(eps_bar, "eps_bar")?;
            if eps <= eps_bar {
                return Err(bad(format!("eps ({eps}) must exceed eps_bar ({eps_bar})")));
            }
            asym_tight(n, sets, weight, big, eps, eps_bar)?
        }
        FamilySpec::PoGap { eps } => {
            positive(eps, "eps")?;
            po_gap(eps)?
        }
        FamilySpec::RandomAdditive { n, m, lo, hi } => {
            at_least(n, 1, "n")?;
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return Err(bad(format!("value range [{lo}, {hi}] is invalid")));
            }
            let vals = (0..n)
                .map(|_| Valuation::additive((0..m).map(|_| uniform(&mut rng, lo, hi)).collect()))
                .collect();
            Instance::symmetric(vals, m)?
        }
        FamilySpec::RandomRestricted { n, m, interest } => {
            at_least(n, 1, "n")?;
            if !(0.0..=1.0).contains(&interest) {
                return Err(bad(format!("interest must lie in [0, 1], got {interest}")));
            }
            let item_values: Vec<f64> = (0..m).map(|_| uniform(&mut rng, 1.0, 10.0)).collect();
            let vals = (0..n)
                .map(|_| {
                    let wants = (0..m).map(|_| rng.gen::<f64>() < interest).collect();
                    Valuation::restricted(item_values.clone(), wants)
                })
                .collect();
            Instance::symmetric(vals, m)?
        }
        FamilySpec::RandomBa { n, m } => {
            at_least(n, 1, "n")?;
            let vals = (0..n)
                .map(|_| {
                    let values: Vec<f64> = (0..m).map(|_| uniform(&mut rng, 0.0, 10.0)).collect();
                    let total: f64 = values.iter().sum();
                    let cap = total * uniform(&mut rng, 0.3, 0.9);
                    Valuation::budget_additive(values, cap)
                })
                .collect();
            Instance::symmetric(vals, m)?
        }
        FamilySpec::RandomSplc { n, kinds, max_copies } => {
            at_least(n, 1, "n")?;
            at_least(max_copies, 1, "max_copies")?;
            let counts: Vec<usize> = (0..kinds).map(|_| rng.gen_range(1..=max_copies)).collect();
            let m = counts.iter().sum();
            let vals = (0..n)
                .map(|_| {
                    let copies = counts
                        .iter()
                        .map(|&c| {
                            let mut v: Vec<f64> = (0..c).map(|_| uniform(&mut rng, 0.0, 10.0)).collect();
                            v.sort_by(|a, b| b.total_cmp(a));
                            v
                        })
                        .collect();
                    Valuation::splc(copies)
                })
                .collect();
            Instance::symmetric(vals, m)?
        }
        FamilySpec::RandomCoverage {
            n,
            m,
            universe,
            sets_per_item,
        } => {
            at_least(n, 1, "n")?;
            at_least(universe, 1, "universe")?;
            at_least(sets_per_item, 1, "sets_per_item")?;
            let per = sets_per_item.min(universe);
            let vals = (0..n)
                .map(|_| {
                    let weights = (0..universe).map(|_| uniform(&mut rng, 0.5, 2.0)).collect();
                    let covers = (0..m)
                        .map(|_| {
                            let k = rng.gen_range(1..=per);
                            let mut c = sample(&mut rng, universe, k).into_vec();
                            c.sort_unstable();
                            c
                        })
                        .collect();
                    Valuation::coverage(weights, covers)
                })
                .collect::<Result<Vec<_>>>()?;
            Instance::symmetric(vals, m)?
        }
    };
    let params = serde_json::to_value(spec).map_err(|e| NswError::Schema(e.to_string()))?;
    let meta = Metadata {
        family: spec.name().to_string(),
        params,
        seed: Some(seed),
    };
    Ok((inst, meta))
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Agent 0 values item 0 at `M+ε` and items `1..=m` at 1; agent 1 values item 0
/// at `M` and item 1 at 1. Putting agent 1's unit item first makes the
/// ascending tie-break reach the optimum.
pub fn example1(m: usize, big: f64, eps: f64) -> Result<Instance> {
    let mut a = vec![1.0; m + 1];
    a[0] = big + eps;
    let mut b = vec![0.0; m + 1];
    b[0] = big;
    b[1] = 1.0;
    Instance::symmetric(vec![Valuation::additive(a), Valuation::additive(b)], m + 1)
}

/// Agent 0 owns the odd items, agent 1 the even ones; a nonempty set is worth
/// `max{M, (#owned items)·M}`.
pub fn subadditive_gap(m: usize, big: f64) -> Result<Instance> {
    let own0: Vec<bool> = (0..m).map(|j| j % 2 == 1).collect();
    let own1: Vec<bool> = own0.iter().map(|x| !x).collect();
    Instance::symmetric(
        vec![
            Valuation::subadditive_halves(big, own0),
            Valuation::subadditive_halves(big, own1),
        ],
        m,
    )
}

/// Each agent has one clause worth `M` per item on its own half, and a second
/// clause worth `M+ε` on three items of the other half and `ε` on the rest of it.
pub fn xos_gap(k: usize, big: f64, eps: f64) -> Result<Instance> {
    let m = 2 * k;
    let half = |lo: usize, v: f64| -> Vec<f64> {
        (0..m).map(|j| if (lo..lo + k).contains(&j) { v } else { 0.0 }).collect()
    };
    let lure = |lo: usize| -> Vec<f64> {
        (0..m)
            .map(|j| {
                if !(lo..lo + k).contains(&j) {
                    0.0
                } else if j < lo + 3 {
                    big + eps
                } else {
                    eps
                }
            })
            .collect()
    };
    Instance::symmetric(
        vec![
            Valuation::xos(vec![half(0, big), lure(k)]),
            Valuation::xos(vec![half(k, big), lure(0)]),
        ],
        m,
    )
}

/// Item `s·n² + j` is position `j` of set `s`. Agent 0 (weight `W`) values
/// positions `0..n` at `M`; agent `k ≥ 1` values positions `0..n` at `M+ε` and
/// its own block `k·n..(k+1)·n` at `M+ε̄`.
pub fn asym_tight(n: usize, sets: usize, weight: f64, big: f64, eps: f64, eps_bar: f64) -> Result<Instance> {
    let block = n * n;
    let m = sets * block;
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let values = (0..m)
            .map(|item| {
                let j = item % block;
                if j < n {
                    if k == 0 {
                        big
                    } else {
                        big + eps
                    }
                } else if k > 0 && j / n == k {
                    big + eps_bar
                } else {
                    0.0
                }
            })
            .collect();
        vals.push(Valuation::additive(values));
    }
    let mut weights = vec![1.0; n];
    weights[0] = weight;
    Instance::new(weights, vals, m)
}

/// Values `(2+ε, 2, ε, ε)` and `(1, 1, 1, 1)`.
pub fn po_gap(eps: f64) -> Result<Instance> {
    Instance::symmetric(
        vec![
            Valuation::additive(vec![2.0 + eps, 2.0, eps, eps]),
            Valuation::additive(vec![1.0; 4]),
        ],
        4,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum ValuationDoc {
    Additive {
        values: Vec<f64>,
    },
    Restricted {
        item_values: Vec<f64>,
        interest: Vec<bool>,
    },
    BudgetAdditive {
        values: Vec<f64>,
        cap: f64,
    },
    Splc {
        copies: Vec<Vec<f64>>,
    },
    Coverage {
        universe: Vec<f64>,
        covers: Vec<Vec<usize>>,
    },
    Xos {
        clauses: Vec<Vec<f64>>,
    },
    SubadditiveHalves {
        big: f64,
        own: Vec<bool>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    schema_version: u32,
    n: usize,
    m: usize,
    weights: Vec<f64>,
    valuations: Vec<ValuationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<Metadata>,
}

fn to_doc(v: &Valuation) -> ValuationDoc {
    match v {
        Valuation::Additive { values } => ValuationDoc::Additive {
            values: values.clone(),
        },
        Valuation::RestrictedAdditive {
            item_values,
            interest,
        } => ValuationDoc::Restricted {
            item_values: item_values.clone(),
            interest: interest.clone(),
        },
        Valuation::BudgetAdditive { values, cap } => ValuationDoc::BudgetAdditive {
            values: values.clone(),
            cap: *cap,
        },
        Valuation::Splc { copy_values, .. } => ValuationDoc::Splc {
            copies: copy_values.clone(),
        },
        Valuation::Coverage { universe, covers } => ValuationDoc::Coverage {
            universe: universe.clone(),
            covers: covers.clone(),
        },
        Valuation::Xos { clauses } => ValuationDoc::Xos {
            clauses: clauses.clone(),
        },
        Valuation::SubadditiveHalves { big, own } => ValuationDoc::SubadditiveHalves {
            big: *big,
            own: own.clone(),
        },
    }
}

fn from_doc(d: ValuationDoc) -> Valuation {
    match d {
        ValuationDoc::Additive { values } => Valuation::additive(values),
        ValuationDoc::Restricted {
            item_values,
            interest,
        } => Valuation::restricted(item_values, interest),
        ValuationDoc::BudgetAdditive { values, cap } => Valuation::budget_additive(values, cap),
        ValuationDoc::Splc { copies } => Valuation::splc(copies),
        ValuationDoc::Coverage { universe, covers } => Valuation::Coverage { universe, covers },
        ValuationDoc::Xos { clauses } => Valuation::xos(clauses),
        ValuationDoc::SubadditiveHalves { big, own } => Valuation::subadditive_halves(big, own),
    }
}

/// Serializes an instance (and optional metadata) as pretty JSON.
pub fn to_json(inst: &Instance, meta: Option<&Metadata>) -> String {
    let doc = InstanceDoc {
        schema_version: SCHEMA_VERSION,
        n: inst.num_agents(),
        m: inst.num_items(),
        weights: inst.weights().to_vec(),
        valuations: inst.valuations().iter().map(to_doc).collect(),
        metadata: meta.cloned(),
    };
    serde_json::to_string_pretty(&doc).expect("instance documents always serialize")
}

/// Parses and validates an instance document.
pub fn from_json(text: &str) -> Result<(Instance, Option<Metadata>)> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| NswError::Schema(e.to_string()))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(NswError::Schema(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    if doc.weights.len() != doc.n {
        return Err(NswError::Schema(format!("field weights: {} entries for n = {}", doc.weights.len(), doc.n)));
    }
    if doc.valuations.len() != doc.n {
        return Err(NswError::Schema(format!(
            "field valuations: {} entries for n = {}",
            doc.valuations.len(),
            doc.n
        )));
    }
    let vals = doc.valuations.into_iter().map(from_doc).collect();
    let inst = Instance::new(doc.weights, vals, doc.m).map_err(|e| NswError::Schema(e.to_string()))?;
    Ok((inst, doc.metadata))
}

pub fn save(inst: &Instance, meta: Option<&Metadata>, path: &Path) -> Result<()> {
    fs::write(path, to_json(inst, meta) + "\n")?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(Instance, Option<Metadata>)> {
    let text = fs::read_to_string(path)?;
    from_json(&text).map_err(|e| match e {
        NswError::Schema(msg) => NswError::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}
