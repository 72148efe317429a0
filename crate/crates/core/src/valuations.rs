//! Valuation families behind a single value-oracle interface.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NswError, Result};

/// A monotone set function over items `0..m`.
///
/// SPLC valuations are stored with every copy of an item kind expanded into
/// its own virtual item; `item_kind[j]` names the kind of virtual item `j`.
/// Virtual items of one kind are interchangeable, and a set holding `c` of
/// them is worth the sum of the kind's top `c` copy values.
#[derive(Debug, Clone, PartialEq)]
pub enum Valuation {
    Additive {
        values: Vec<f64>,
    },
    RestrictedAdditive {
        item_values: Vec<f64>,
        interest: Vec<bool>,
    },
    BudgetAdditive {
        values: Vec<f64>,
        cap: f64,
    },
    Splc {
        copy_values: Vec<Vec<f64>>,
        item_kind: Vec<usize>,
    },
    Coverage {
        universe: Vec<f64>,
        covers: Vec<Vec<usize>>,
    },
    Xos {
        clauses: Vec<Vec<f64>>,
    },
    /// `v(S) = max{M, |S ∩ own|·M}` for nonempty `S`, and `v(∅) = 0`.
    SubadditiveHalves {
        big: f64,
        own: Vec<bool>,
    },
}

impl Valuation {
    pub fn additive(values: Vec<f64>) -> Self {
        Valuation::Additive { values }
    }

    pub fn restricted(item_values: Vec<f64>, interest: Vec<bool>) -> Self {
        Valuation::RestrictedAdditive {
            item_values,
            interest,
        }
    }

    pub fn budget_additive(values: Vec<f64>, cap: f64) -> Self {
        Valuation::BudgetAdditive { values, cap }
    }

    /// SPLC valuation from per-kind copy lists; kinds are laid out contiguously,
    /// so kind 0 occupies virtual items `0..copies[0].len()` and so on.
    pub fn splc(copies: Vec<Vec<f64>>) -> Self {
        let item_kind = copies
            .iter()
            .enumerate()
            .flat_map(|(k, c)| std::iter::repeat_n(k, c.len()))
            .collect();
        Valuation::Splc {
            copy_values: copies,
            item_kind,
        }
    }

    pub fn coverage(universe: Vec<f64>, covers: Vec<Vec<usize>>) -> Result<Self> {
        let v = Valuation::Coverage { universe, covers };
        let m = v.num_items();
        v.validate(m).map_err(NswError::InvalidInstance)?;
        Ok(v)
    }

    pub fn xos(clauses: Vec<Vec<f64>>) -> Self {
        Valuation::Xos { clauses }
    }

    pub fn subadditive_halves(big: f64, own: Vec<bool>) -> Self {
        Valuation::SubadditiveHalves { big, own }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Valuation::Additive { .. } => "additive",
            Valuation::RestrictedAdditive { .. } => "restricted",
            Valuation::BudgetAdditive { .. } => "budget_additive",
            Valuation::Splc { .. } => "splc",
            Valuation::Coverage { .. } => "coverage",
            Valuation::Xos { .. } => "xos",
            Valuation::SubadditiveHalves { .. } => "subadditive_halves",
        }
    }

    /// Number of (virtual) items this valuation is defined over.
    pub fn num_items(&self) -> usize {
        match self {
            Valuation::Additive { values } | Valuation::BudgetAdditive { values, .. } => {
                values.len()
            }
            Valuation::RestrictedAdditive { item_values, .. } => item_values.len(),
            Valuation::Splc { item_kind, .. } => item_kind.len(),
            Valuation::Coverage { covers, .. } => covers.len(),
            Valuation::Xos { clauses } => clauses.first().map_or(0, Vec::len),
            Valuation::SubadditiveHalves { own, .. } => own.len(),
        }
    }

    /// Additive, restricted additive and budget-additive.
    pub fn is_additive_like(&self) -> bool {
        matches!(
            self,
            Valuation::Additive { .. }
                | Valuation::RestrictedAdditive { .. }
                | Valuation::BudgetAdditive { .. }
        )
    }

    pub fn is_submodular_family(&self) -> bool {
        !matches!(
            self,
            Valuation::Xos { .. } | Valuation::SubadditiveHalves { .. }
        )
    }

    /// Checks parameters against an instance with `m` items.
    pub fn validate(&self, m: usize) -> std::result::Result<(), String> {
        fn nonneg(xs: &[f64], what: &str) -> std::result::Result<(), String> {
            match xs.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                Some(j) => Err(format!("{what} {j} is not a finite non-negative number")),
                None => Ok(()),
            }
        }
        fn len(got: usize, m: usize, what: &str) -> std::result::Result<(), String> {
            if got == m {
                Ok(())
            } else {
                Err(format!("{what} has length {got}, expected {m}"))
            }
        }
        match self {
            Valuation::Additive { values } => {
                len(values.len(), m, "value vector")?;
                nonneg(values, "value")
            }
            Valuation::RestrictedAdditive {
                item_values,
                interest,
            } => {
                len(item_values.len(), m, "item value vector")?;
                len(interest.len(), m, "interest vector")?;
                nonneg(item_values, "item value")
            }
            Valuation::BudgetAdditive { values, cap } => {
                len(values.len(), m, "value vector")?;
                nonneg(values, "value")?;
                nonneg(&[*cap], "cap")
            }
            Valuation::Splc {
                copy_values,
                item_kind,
            } => {
                len(item_kind.len(), m, "copy layout")?;
                let mut counts = vec![0usize; copy_values.len()];
                for &k in item_kind {
                    if k >= copy_values.len() {
                        return Err(format!("copy kind {k} out of range"));
                    }
                    counts[k] += 1;
                }
                for (k, copies) in copy_values.iter().enumerate() {
                    if copies.is_empty() {
                        return Err(format!("item kind {k} has no copies"));
                    }
                    if copies.len() != counts[k] {
                        return Err(format!(
                            "item kind {k} lists {} copy values for {} copies",
                            copies.len(),
                            counts[k]
                        ));
                    }
                    nonneg(copies, "copy value")?;
                    if copies.windows(2).any(|w| w[1] > w[0]) {
                        return Err(format!("item kind {k}: non-concave copy values"));
                    }
                }
                Ok(())
            }
            Valuation::Coverage { universe, covers } => {
                len(covers.len(), m, "cover list")?;
                nonneg(universe, "element weight")?;
                for (j, c) in covers.iter().enumerate() {
                    if let Some(&e) = c.iter().find(|&&e| e >= universe.len()) {
                        return Err(format!("item {j} covers unknown element {e}"));
                    }
                }
                Ok(())
            }
            Valuation::Xos { clauses } => {
                if clauses.is_empty() {
                    return Err("XOS valuation needs at least one clause".into());
                }
                for c in clauses {
                    len(c.len(), m, "clause")?;
                    nonneg(c, "clause value")?;
                }
                Ok(())
            }
            Valuation::SubadditiveHalves { big, own } => {
                len(own.len(), m, "ownership vector")?;
                nonneg(&[*big], "M")
            }
        }
    }

    /// `v(S)`. Errors on out-of-range items.
    pub fn value(&self, set: &[usize]) -> Result<f64> {
        let m = self.num_items();
        if let Some(&j) = set.iter().find(|&&j| j >= m) {
            return Err(NswError::ItemOutOfRange {
                item: j,
                num_items: m,
            });
        }
        Ok(self.value_unchecked(set))
    }

    /// `v(S)` for a set already known to be in range and duplicate-free.
    pub fn value_unchecked(&self, set: &[usize]) -> f64 {
        match self {
            Valuation::Additive { values } => set.iter().map(|&j| values[j]).sum(),
            Valuation::RestrictedAdditive {
                item_values,
                interest,
            } => set
                .iter()
                .filter(|&&j| interest[j])
                .map(|&j| item_values[j])
                .sum(),
            Valuation::BudgetAdditive { values, cap } => {
                let s: f64 = set.iter().map(|&j| values[j]).sum();
                s.min(*cap)
            }
            Valuation::Splc {
                copy_values,
                item_kind,
            } => {
                let mut counts = vec![0usize; copy_values.len()];
                for &j in set {
                    counts[item_kind[j]] += 1;
                }
                splc_counts_value(copy_values, &counts)
            }
            Valuation::Coverage { universe, covers } => {
                let mut hit = vec![false; universe.len()];
                let mut total = 0.0;
                for &j in set {
                    for &e in &covers[j] {
                        if !hit[e] {
                            hit[e] = true;
                            total += universe[e];
                        }
                    }
                }
                total
            }
            Valuation::Xos { clauses } => clauses
                .iter()
                .map(|c| set.iter().map(|&j| c[j]).sum::<f64>())
                .fold(0.0, f64::max),
            Valuation::SubadditiveHalves { big, own } => {
                if set.is_empty() {
                    0.0
                } else {
                    let k = set.iter().filter(|&&j| own[j]).count() as f64;
                    big.max(k * big)
                }
            }
        }
    }

    /// `v(S ∪ {j}) − v(S)`. Errors when `j ∈ S` or any item is out of range.
    pub fn marginal(&self, item: usize, set: &[usize]) -> Result<f64> {
        if set.contains(&item) {
            return Err(NswError::ItemInSet { item });
        }
        let base = self.value(set)?;
        let mut with = set.to_vec();
        with.push(item);
        Ok(self.value(&with)? - base)
    }

    /// Values of the individual (virtual) items for additive-like and SPLC
    /// valuations, `None` for the other families. SPLC lists every copy value.
    pub fn virtual_item_values(&self) -> Option<Vec<f64>> {
        match self {
            Valuation::Additive { values } | Valuation::BudgetAdditive { values, .. } => {
                Some(values.clone())
            }
            Valuation::RestrictedAdditive {
                item_values,
                interest,
            } => Some(
                item_values
                    .iter()
                    .zip(interest)
                    .map(|(&v, &i)| if i { v } else { 0.0 })
                    .collect(),
            ),
            Valuation::Splc { copy_values, .. } => {
                Some(copy_values.iter().flatten().copied().collect())
            }
            _ => None,
        }
    }

    /// SPLC value of a copy-count vector; `None` for other families.
    pub fn value_from_counts(&self, counts: &[usize]) -> Option<f64> {
        match self {
            Valuation::Splc { copy_values, .. } => Some(splc_counts_value(copy_values, counts)),
            _ => None,
        }
    }
}

fn splc_counts_value(copy_values: &[Vec<f64>], counts: &[usize]) -> f64 {
    copy_values
        .iter()
        .zip(counts)
        .map(|(c, &k)| c.iter().take(k).sum::<f64>())
        .sum()
}

/// Folds a bundle of SPLC virtual items into `(kind, count)` pairs, kinds ascending.
pub fn fold_copies(item_kind: &[usize], bundle: &[usize]) -> Vec<(usize, usize)> {
    let mut kinds: Vec<usize> = bundle.iter().map(|&j| item_kind[j]).collect();
    kinds.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for k in kinds {
        match out.last_mut() {
            Some((last, c)) if *last == k => *c += 1,
            _ => out.push((k, 1)),
        }
    }
    out
}

/// Cross-agent consistency: restricted agents share item values, SPLC agents
/// share one copy layout and are not mixed with other families.
pub fn validate_shared_structure(vals: &[Valuation]) -> std::result::Result<(), String> {
    let mut shared_values: Option<&Vec<f64>> = None;
    let mut layout: Option<&Vec<usize>> = None;
    let splc = vals
        .iter()
        .filter(|v| matches!(v, Valuation::Splc { .. }))
        .count();
    if splc > 0 && splc < vals.len() {
        return Err("SPLC agents cannot be mixed with other valuation families".into());
    }
    for (i, v) in vals.iter().enumerate() {
        match v {
            Valuation::RestrictedAdditive { item_values, .. } => match shared_values {
                None => shared_values = Some(item_values),
                Some(prev) if prev != item_values => {
                    return Err(format!(
                        "agent {i}: restricted agents must share one item value vector"
                    ))
                }
                _ => {}
            },
            Valuation::Splc { item_kind, .. } => match layout {
                None => layout = Some(item_kind),
                Some(prev) if prev != item_kind => {
                    return Err(format!("agent {i}: SPLC copy layout differs from agent 0"))
                }
                _ => {}
            },
            _ => {}
        }
    }
    Ok(())
}

/// A violation of `v(h | S1 ∪ S2) ≤ v(h | S1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmodularWitness {
    pub item: usize,
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
    pub marginal_union: f64,
    pub marginal_s1: f64,
}

/// Outcome of a sampled submodularity check.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmodularCheck {
    pub trials_run: usize,
    pub witness: Option<SubmodularWitness>,
}

impl SubmodularCheck {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Samples `(h, S1, S2)` with `h ∉ S1 ∪ S2` and looks for a diminishing-returns violation.
pub fn check_submodular(val: &Valuation, trials: usize, seed: u64) -> SubmodularCheck {
    let m = val.num_items();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items: Vec<usize> = (0..m).collect();
    for t in 0..trials {
        if m == 0 {
            return SubmodularCheck {
                trials_run: t,
                witness: None,
            };
        }
        items.shuffle(&mut rng);
        let h = items[0];
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        for &j in &items[1..] {
            match rng.gen_range(0..4) {
                0 => s1.push(j),
                1 => s2.push(j),
                2 => {
                    s1.push(j);
                    s2.push(j);
                }
                _ => {}
            }
        }
        let mut union = s1.clone();
        union.extend(s2.iter().filter(|j| !s1.contains(j)));
        let mu = val.marginal(h, &union).expect("h is outside the union");
        let m1 = val.marginal(h, &s1).expect("h is outside S1");
        let scale = 1.0 + mu.abs().max(m1.abs());
        if mu > m1 + 1e-9 * scale {
            s1.sort_unstable();
            s2.sort_unstable();
            return SubmodularCheck {
                trials_run: t + 1,
                witness: Some(SubmodularWitness {
                    item: h,
                    s1,
                    s2,
                    marginal_union: mu,
                    marginal_s1: m1,
                }),
            };
        }
    }
    SubmodularCheck {
        trials_run: trials,
        witness: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_sum() {
        let v = Valuation::additive(vec![2.0, 3.0, 5.0]);
        assert_eq!(v.value(&[0, 2]).unwrap(), 7.0);
        assert_eq!(v.value(&[]).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_item_errors() {
        let v = Valuation::additive(vec![2.0, 3.0]);
        assert!(matches!(
            v.value(&[2]),
            Err(NswError::ItemOutOfRange { item: 2, .. })
        ));
    }

    #[test]
    fn budget_additive_caps() {
        let v = Valuation::budget_additive(vec![4.0, 4.0], 5.0);
        assert_eq!(v.value(&[0, 1]).unwrap(), 5.0);
        assert_eq!(v.marginal(1, &[0]).unwrap(), 1.0);
    }

    #[test]
    fn subadditive_halves_counts_own_items() {
        // agent owning items 0..4: three own items and one foreign item.
        let own = (0..8).map(|j| j < 4).collect();
        let v = Valuation::subadditive_halves(10.0, own);
        assert_eq!(v.value(&[0, 1, 2, 5]).unwrap(), 30.0);
        assert_eq!(v.value(&[5]).unwrap(), 10.0);
        assert_eq!(v.value(&[]).unwrap(), 0.0);
    }

    #[test]
    fn coverage_union_weight() {
        let v = Valuation::coverage(vec![1.0, 1.0, 1.0], vec![vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(v.value(&[0, 1]).unwrap(), 3.0);
        let w = Valuation::coverage(vec![1.0, 1.0], vec![vec![0, 1], vec![1]]).unwrap();
        assert_eq!(w.marginal(1, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn marginal_rejects_member() {
        let v = Valuation::additive(vec![1.0, 2.0]);
        assert!(matches!(v.marginal(0, &[0]), Err(NswError::ItemInSet { item: 0 })));
        assert_eq!(v.marginal(1, &[0]).unwrap(), 2.0);
    }

    #[test]
    fn splc_takes_top_copies() {
        let v = Valuation::splc(vec![vec![5.0, 3.0, 1.0], vec![4.0]]);
        assert_eq!(v.num_items(), 4);
        // two copies of kind 0 (any two virtual items) plus kind 1
        assert_eq!(v.value(&[1, 2, 3]).unwrap(), 12.0);
        assert_eq!(v.value(&[2]).unwrap(), 5.0);
        assert_eq!(v.value_from_counts(&[3, 0]), Some(9.0));
        assert_eq!(fold_copies(&[0, 0, 0, 1], &[0, 2, 3]), vec![(0, 2), (1, 1)]);
    }

    #[test]
    fn splc_rejects_increasing_copies() {
        let v = Valuation::splc(vec![vec![1.0, 2.0]]);
        let err = v.validate(2).unwrap_err();
        assert!(err.contains("non-concave copy values"), "{err}");
    }

    #[test]
    fn xos_takes_best_clause() {
        let v = Valuation::xos(vec![vec![1.0, 0.0, 3.0], vec![2.0, 2.0, 0.0]]);
        assert_eq!(v.value(&[0, 1]).unwrap(), 4.0);
        assert_eq!(v.value(&[0, 2]).unwrap(), 4.0);
        assert_eq!(v.value(&[2]).unwrap(), 3.0);
    }

    #[test]
    fn restricted_masks_uninterested_items() {
        let v = Valuation::restricted(vec![3.0, 4.0], vec![true, false]);
        assert_eq!(v.value(&[0, 1]).unwrap(), 3.0);
        assert_eq!(v.virtual_item_values(), Some(vec![3.0, 0.0]));
    }

    #[test]
    fn shared_structure_checks() {
        let a = Valuation::restricted(vec![1.0, 2.0], vec![true, true]);
        let b = Valuation::restricted(vec![1.0, 3.0], vec![true, true]);
        assert!(validate_shared_structure(&[a.clone(), a.clone()]).is_ok());
        assert!(validate_shared_structure(&[a, b]).is_err());
        let s = Valuation::splc(vec![vec![1.0]]);
        let t = Valuation::additive(vec![1.0]);
        assert!(validate_shared_structure(&[s, t]).is_err());
    }

    #[test]
    fn submodular_check_outcomes() {
        assert!(check_submodular(&Valuation::additive(vec![1.0, 2.0, 3.0, 4.0]), 500, 1).passed());
        let own = (0..8).map(|j| j % 2 == 0).collect();
        let halves = Valuation::subadditive_halves(10.0, own);
        let res = check_submodular(&halves, 10_000, 7);
        let w = res.witness.expect("halves violate diminishing returns");
        assert!(w.marginal_union > w.marginal_s1);
        let cov = Valuation::coverage(
            vec![1.0, 2.0, 0.5, 1.5],
            vec![vec![0, 1], vec![1, 2], vec![3], vec![0, 3], vec![2]],
        )
        .unwrap();
        assert!(check_submodular(&cov, 10_000, 3).passed());
    }
}
