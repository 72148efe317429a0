//! Maximum-weight bipartite matching between agents and items, and the edge
//! weights each algorithm feeds it.
//!
//! A matching maximizes the number of finite-weight edges first and the total
//! weight second. The solver runs the Hungarian method on a square matrix
//! padded with dummy rows and columns, using a two-level cost so that the
//! cardinality term can never be traded against weight. Among optimal
//! matchings the lexicographically smallest `(agent, item)` sequence is
//! returned.

use std::cmp::Ordering;
use std::ops::{Add, Sub};

use crate::error::{NswError, Result};
use crate::model::Instance;

/// Weight of a forbidden edge.
pub const SENTINEL: f64 = f64::NEG_INFINITY;

/// Agents × (a subset of) items, row-major. Non-finite entries are forbidden.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    items: Vec<usize>,
    entries: Vec<f64>,
}

impl WeightMatrix {
    /// All edges forbidden.
    pub fn new(rows: usize, items: Vec<usize>) -> Self {
        let entries = vec![SENTINEL; rows * items.len()];
        WeightMatrix {
            rows,
            items,
            entries,
        }
    }

    /// From explicit rows; column `c` stands for item `items[c]`.
    pub fn from_rows(items: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = items.len();
        if let Some(r) = rows.iter().position(|r| r.len() != cols) {
            return Err(NswError::InvalidParameter(format!(
                "row {r} has {} entries, expected {cols}",
                rows[r].len()
            )));
        }
        Ok(WeightMatrix {
            rows: rows.len(),
            items,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.items.len()
    }

    /// Column → item map.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.items.len() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, w: f64) {
        let cols = self.items.len();
        self.entries[row * cols + col] = w;
    }

    fn finite(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_finite()
    }
}

/// `(agent, item)` pairs sorted by agent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn item_of(&self, agent: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == agent).map(|p| p.1)
    }

    /// Sum of the matched edge weights in `w`.
    pub fn weight(&self, w: &WeightMatrix) -> f64 {
        self.pairs
            .iter()
            .map(|&(a, item)| {
                let c = w.items.iter().position(|&x| x == item).expect("item in matrix");
                w.get(a, c)
            })
            .sum()
    }
}

/// Two-level assignment cost: `card` counts (negated) real matched edges.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Lex {
    card: i64,
    w: f64,
}

impl Lex {
    const ZERO: Lex = Lex { card: 0, w: 0.0 };
    const INF: Lex = Lex {
        card: i64::MAX / 4,
        w: 0.0,
    };
    const FORBIDDEN: Lex = Lex {
        card: 1 << 40,
        w: 0.0,
    };

    fn less(self, o: Lex) -> bool {
        match self.card.cmp(&o.card) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.w < o.w,
        }
    }
}

impl Add for Lex {
    type Output = Lex;
    fn add(self, o: Lex) -> Lex {
        Lex {
            card: self.card + o.card,
            w: self.w + o.w,
        }
    }
}

impl Sub for Lex {
    type Output = Lex;
    fn sub(self, o: Lex) -> Lex {
        Lex {
            card: self.card - o.card,
            w: self.w - o.w,
        }
    }
}

struct Padded<'a> {
    w: &'a WeightMatrix,
}

impl Padded<'_> {
    fn cost(&self, i: usize, j: usize) -> Lex {
        if i < self.w.rows && j < self.w.cols() {
            let x = self.w.get(i, j);
            if x.is_finite() {
                Lex { card: -1, w: -x }
            } else {
                Lex::FORBIDDEN
            }
        } else {
            Lex::ZERO
        }
    }
}

/// Maximum-cardinality, then maximum-weight matching; forbidden edges are never used.
pub fn max_weight_matching(w: &WeightMatrix) -> Matching {
    let r = w.rows;
    let c = w.cols();
    if r == 0 || c == 0 {
        return Matching::default();
    }
    let n = r + c;
    let pad = Padded { w };

    // Hungarian method, 1-based potentials; p[j] is the row holding column j.
    let mut u = vec![Lex::ZERO; n + 1];
    let mut v = vec![Lex::ZERO; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![Lex::INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = Lex::INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = pad.cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur.less(minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j].less(delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    // Row → column assignment, 0-based.
    let mut col_of = vec![0usize; n];
    let mut row_of = vec![0usize; n];
    for j in 1..=n {
        col_of[p[j] - 1] = j - 1;
        row_of[j - 1] = p[j] - 1;
    }

    // Edges with zero reduced cost carry every optimal assignment.
    let scale = 1.0
        + w
            .entries
            .iter()
            .filter(|x| x.is_finite())
            .fold(0.0f64, |a, x| a.max(x.abs()));
    let tol = 1e-9 * scale;
    let tight = |i: usize, j: usize| -> bool {
        let rc = pad.cost(i, j) - u[i + 1] - v[j + 1];
        rc.card == 0 && rc.w.abs() <= tol
    };
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in adj.iter_mut().enumerate() {
        for j in 0..n {
            if j == col_of[i] || (tight(i, j) && pad.cost(i, j) != Lex::FORBIDDEN) {
                row.push(j);
            }
        }
    }

    // Fix agents in order, each to the smallest feasible item (then to "unmatched").
    let mut fixed = vec![false; n];
    for a in 0..r {
        let mut order: Vec<usize> = adj[a]
            .iter()
            .copied()
            .filter(|&j| j < c && w.finite(a, j))
            .collect();
        order.sort_by_key(|&j| (w.items[j], j));
        order.extend(adj[a].iter().copied().filter(|&j| j >= c));
        for target in order {
            if target == col_of[a] || force(a, target, &adj, &fixed, &mut col_of, &mut row_of) {
                break;
            }
        }
        fixed[a] = true;
    }

    let mut pairs: Vec<(usize, usize)> = (0..r)
        .filter(|&a| col_of[a] < c && w.finite(a, col_of[a]))
        .map(|a| (a, w.items[col_of[a]]))
        .collect();
    pairs.sort_unstable();
    Matching { pairs }
}

/// Moves row `a` onto column `target` while keeping the assignment perfect on
/// the tight graph and leaving fixed rows alone. Reverts on failure.
fn force(
    a: usize,
    target: usize,
    adj: &[Vec<usize>],
    fixed: &[bool],
    col_of: &mut [usize],
    row_of: &mut [usize],
) -> bool {
    let snapshot = (col_of.to_vec(), row_of.to_vec());
    let freed = col_of[a];
    let b = row_of[target];
    if fixed[b] {
        return false;
    }
    col_of[a] = target;
    row_of[target] = a;
    // Row b lost its column; find an alternating path ending at the freed column.
    let n = col_of.len();
    let mut seen = vec![false; n];
    seen[target] = true;
    let mut blocked = fixed.to_vec();
    blocked[a] = true;
    if augment(b, freed, adj, &blocked, &mut seen, col_of, row_of) {
        true
    } else {
        col_of.copy_from_slice(&snapshot.0);
        row_of.copy_from_slice(&snapshot.1);
        false
    }
}

fn augment(
    row: usize,
    free: usize,
    adj: &[Vec<usize>],
    blocked: &[bool],
    seen: &mut [bool],
    col_of: &mut [usize],
    row_of: &mut [usize],
) -> bool {
    for &j in &adj[row] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if j == free {
            col_of[row] = j;
            row_of[j] = row;
            return true;
        }
        let owner = row_of[j];
        if blocked[owner] {
            continue;
        }
        if augment(owner, free, adj, blocked, seen, col_of, row_of) {
            col_of[row] = j;
            row_of[j] = row;
            return true;
        }
    }
    false
}

/// Edge-weight formula for one matching round.
#[derive(Debug, Clone, Copy)]
pub enum WeightMode<'a> {
    /// `η ln(v(j) + u/n)`.
    SmatchFirst { keep_aside: &'a [f64] },
    /// `η ln(v(x) + v(j))`.
    SmatchLater { bundles: &'a [Vec<usize>] },
    /// `η ln v(x ∪ {j})`.
    SmatchLaterMarginal { bundles: &'a [Vec<usize>] },
    /// `η ln v(j)`.
    Phase1Singleton,
    /// `η ln v(x ∪ {j})` over the current bundles.
    Phase2Cumulative { bundles: &'a [Vec<usize>] },
    /// `η ln v(x ∪ {j})` over the bundles left after the second phase.
    Phase3Rematch { bundles: &'a [Vec<usize>] },
    /// `η ln(v(x) + v(j))` with no zero-gain exclusion.
    Cumulative { bundles: &'a [Vec<usize>] },
}

impl WeightMode<'_> {
    fn state_len(&self) -> Option<usize> {
        match self {
            WeightMode::SmatchFirst { keep_aside } => Some(keep_aside.len()),
            WeightMode::SmatchLater { bundles }
            | WeightMode::SmatchLaterMarginal { bundles }
            | WeightMode::Phase2Cumulative { bundles }
            | WeightMode::Phase3Rematch { bundles }
            | WeightMode::Cumulative { bundles } => Some(bundles.len()),
            WeightMode::Phase1Singleton => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            WeightMode::SmatchFirst { .. } => "smatch-first",
            WeightMode::SmatchLater { .. } => "smatch-later",
            WeightMode::SmatchLaterMarginal { .. } => "smatch-later-marginal",
            WeightMode::Phase1Singleton => "phase1-singleton",
            WeightMode::Phase2Cumulative { .. } => "phase2-cumulative",
            WeightMode::Phase3Rematch { .. } => "phase3-rematch",
            WeightMode::Cumulative { .. } => "cumulative",
        }
    }
}

fn log_weight(eta: f64, arg: f64) -> f64 {
    if arg > 0.0 {
        eta * arg.ln()
    } else {
        SENTINEL
    }
}

/// Weights for agents × `unallocated`. A zero log argument is forbidden; the
/// SMatch modes also forbid edges whose item adds nothing to the agent's bundle.
pub fn build_weights(inst: &Instance, unallocated: &[usize], mode: WeightMode) -> Result<WeightMatrix> {
    let n = inst.num_agents();
    if let Some(len) = mode.state_len() {
        if len != n {
            return Err(NswError::InvalidParameter(format!(
                "{} weights need state for {n} agents, got {len}",
                mode.name()
            )));
        }
    }
    if let Some(&j) = unallocated.iter().find(|&&j| j >= inst.num_items()) {
        return Err(NswError::ItemOutOfRange {
            item: j,
            num_items: inst.num_items(),
        });
    }
    let mut w = WeightMatrix::new(n, unallocated.to_vec());
    for i in 0..n {
        let eta = inst.weight(i);
        let bundle: &[usize] = match mode {
            WeightMode::SmatchLater { bundles }
            | WeightMode::SmatchLaterMarginal { bundles }
            | WeightMode::Phase2Cumulative { bundles }
            | WeightMode::Phase3Rematch { bundles }
            | WeightMode::Cumulative { bundles } => &bundles[i],
            _ => &[],
        };
        let base = inst.value(i, bundle);
        for (c, &j) in unallocated.iter().enumerate() {
            let entry = match mode {
                WeightMode::SmatchFirst { keep_aside } => {
                    let vj = inst.singleton(i, j);
                    if vj > 0.0 {
                        log_weight(eta, vj + keep_aside[i] / n as f64)
                    } else {
                        SENTINEL
                    }
                }
                WeightMode::SmatchLater { .. } => {
                    let with = inst.value_with(i, bundle, j);
                    if with > base {
                        log_weight(eta, base + inst.singleton(i, j))
                    } else {
                        SENTINEL
                    }
                }
                WeightMode::SmatchLaterMarginal { .. } => {
                    let with = inst.value_with(i, bundle, j);
                    if with > base {
                        log_weight(eta, with)
                    } else {
                        SENTINEL
                    }
                }
                WeightMode::Phase1Singleton => log_weight(eta, inst.singleton(i, j)),
                WeightMode::Phase2Cumulative { .. } | WeightMode::Phase3Rematch { .. } => {
                    log_weight(eta, inst.value_with(i, bundle, j))
                }
                WeightMode::Cumulative { .. } => log_weight(eta, base + inst.singleton(i, j)),
            };
            w.set(i, c, entry);
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuations::Valuation;

    fn mat(rows: Vec<Vec<f64>>) -> WeightMatrix {
        let cols = rows[0].len();
        WeightMatrix::from_rows((0..cols).collect(), rows).unwrap()
    }

    #[test]
    fn single_edge() {
        let m = max_weight_matching(&mat(vec![vec![5f64.ln()]]));
        assert_eq!(m.pairs, vec![(0, 0)]);
    }

    #[test]
    fn picks_heavier_perfect_matching() {
        let w = mat(vec![
            vec![4f64.ln(), 1f64.ln()],
            vec![3f64.ln(), 2f64.ln()],
        ]);
        assert_eq!(max_weight_matching(&w).pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn forbidden_row_stays_unmatched() {
        let w = mat(vec![vec![1.0, 3.0, 2.0], vec![SENTINEL; 3]]);
        assert_eq!(max_weight_matching(&w).pairs, vec![(0, 1)]);
    }

    #[test]
    fn cardinality_beats_weight() {
        // Matching both agents costs weight (negative edge) but is preferred.
        let w = mat(vec![vec![10.0, 9.0], vec![-50.0, SENTINEL]]);
        assert_eq!(max_weight_matching(&w).pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn ties_go_to_smallest_items() {
        let w = mat(vec![vec![1.0; 4], vec![1.0; 4]]);
        assert_eq!(max_weight_matching(&w).pairs, vec![(0, 0), (1, 1)]);
        let z = mat(vec![vec![0.0, 0.0, 0.0]]);
        assert_eq!(max_weight_matching(&z).pairs, vec![(0, 0)]);
    }

    #[test]
    fn column_map_is_respected() {
        let w = WeightMatrix::from_rows(vec![7, 3], vec![vec![1.0, 1.0]]).unwrap();
        assert_eq!(max_weight_matching(&w).pairs, vec![(0, 3)]);
    }

    #[test]
    fn all_forbidden_gives_empty() {
        let w = mat(vec![vec![SENTINEL, SENTINEL]]);
        assert!(max_weight_matching(&w).is_empty());
    }

    #[test]
    fn phase1_singleton_weights() {
        let e = std::f64::consts::E;
        let inst = Instance::new(
            vec![2.0],
            vec![Valuation::additive(vec![e, e * e])],
            2,
        )
        .unwrap();
        let w = build_weights(&inst, &[0, 1], WeightMode::Phase1Singleton).unwrap();
        assert!((w.get(0, 0) - 2.0).abs() < 1e-12);
        assert!((w.get(0, 1) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_argument_is_sentinel() {
        let inst = Instance::symmetric(vec![Valuation::additive(vec![0.0, 1.0])], 2).unwrap();
        let w = build_weights(&inst, &[0, 1], WeightMode::SmatchFirst { keep_aside: &[0.0] })
            .unwrap();
        assert_eq!(w.get(0, 0), SENTINEL);
        assert_eq!(w.get(0, 1), 0.0);
    }

    #[test]
    fn cumulative_uses_union_value() {
        // Bundle covers {a,b,c}; candidate covers {a}: union value stays 3.
        let cov = Valuation::coverage(
            vec![1.0, 1.0, 1.0],
            vec![vec![0, 1, 2], vec![0]],
        )
        .unwrap();
        let inst = Instance::symmetric(vec![cov], 2).unwrap();
        let bundles = vec![vec![0]];
        let w = build_weights(&inst, &[1], WeightMode::Phase2Cumulative { bundles: &bundles })
            .unwrap();
        assert!((w.get(0, 0) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn state_length_mismatch_errors() {
        let inst = Instance::symmetric(vec![Valuation::additive(vec![1.0])], 1).unwrap();
        let bundles: Vec<Vec<usize>> = vec![vec![], vec![]];
        assert!(build_weights(&inst, &[0], WeightMode::SmatchLater { bundles: &bundles }).is_err());
    }
}
