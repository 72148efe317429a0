//! Worked examples with hand-computed answers.

mod common;

use common::{brute_opt, nsw_of};
use nsw_core::baselines::{naive_repeated_matching, single_matching_fill};
use nsw_core::constagents::{
    const_agents_solve, decompose, multilinear_estimate, swap_round, FractionalAssignment, GridSearchConfig,
};
use nsw_core::exact::{exact_opt, feasible, is_pareto_optimal, DEFAULT_LIMIT};
use nsw_core::fairness::{is_ef1, is_strong_ef1};
use nsw_core::instances::{example1, generate, po_gap, FamilySpec};
use nsw_core::reprematch::{phase_bound, reprematch, reprematch_trace};
use nsw_core::smatch::{smatch, smatch_trace, SmatchVariant};
use nsw_core::{
    build_weights, check_submodular, keepaside_value, max_weight_matching, nsw, nsw_of_values, rank_items, Allocation,
    Instance, Valuation, WeightMatrix, WeightMode, SENTINEL,
};

const E: f64 = std::f64::consts::E;

fn additive(rows: &[&[f64]]) -> Instance {
    let m = rows[0].len();
    Instance::symmetric(rows.iter().map(|r| Valuation::additive(r.to_vec())).collect(), m).unwrap()
}

fn alloc(b: &[&[usize]]) -> Allocation {
    Allocation::from_bundles(b.iter().map(|x| x.to_vec()).collect()).unwrap()
}

#[test]
fn weighted_nsw_by_hand() {
    let v = nsw_of_values(&[1.0, 3.0], &[8.0, 2.0]);
    assert!((v.nsw - 64f64.powf(0.25)).abs() < 1e-12);
    let single = additive(&[&[3.0, 4.0]]);
    assert!((nsw(&single, &alloc(&[&[0, 1]])).unwrap().nsw - 7.0).abs() < 1e-12);
    // Item 0 to B and everything else to A gives sqrt(M·m).
    let ex = example1(20, 20.0, 0.0).unwrap();
    let best = alloc(&[&(1..=20).collect::<Vec<_>>()[..], &[0]]);
    assert!((nsw(&ex, &best).unwrap().nsw - 20.0).abs() < 1e-9);
    assert_eq!(nsw(&ex, &alloc(&[&(0..=20).collect::<Vec<_>>()[..], &[]])).unwrap().nsw, 0.0);
    assert!((exact_opt(&ex, DEFAULT_LIMIT).unwrap().opt_nsw - 20.0).abs() < 1e-9);
}

#[test]
fn invalid_instances_name_the_problem() {
    let err = Instance::new(vec![0.0, 1.0], vec![Valuation::additive(vec![1.0]); 2], 1).unwrap_err();
    assert!(err.to_string().contains("nonpositive weight"));
    let err = Instance::symmetric(vec![Valuation::splc(vec![vec![1.0, 2.0]])], 2).unwrap_err();
    assert!(err.to_string().contains("non-concave copy values"));
}

#[test]
fn ranking_and_keep_aside() {
    let inst = additive(&[&[5.0, 9.0, 9.0, 1.0]]);
    assert_eq!(rank_items(&inst, 0, &[0, 1, 2, 3]).order, vec![1, 2, 0, 3]);
    assert!(rank_items(&inst, 0, &[]).order.is_empty());
    let ex = example1(20, 20.0, 0.5).unwrap();
    let all: Vec<usize> = ex.items().collect();
    let order = rank_items(&ex, 0, &all).order;
    assert_eq!(order, all);
    assert_eq!(keepaside_value(&ex, 0).unwrap(), 17.0);
    let ones = additive(&[&[1.0; 10], &[1.0; 10]]);
    assert_eq!(keepaside_value(&ones, 0).unwrap(), 6.0);
    let small = additive(&[&[1.0; 3], &[1.0; 3]]);
    assert_eq!(keepaside_value(&small, 1).unwrap(), 0.0);
}

#[test]
fn valuation_families_by_hand() {
    assert_eq!(Valuation::additive(vec![2.0, 3.0, 5.0]).value(&[0, 2]).unwrap(), 7.0);
    let ba = Valuation::budget_additive(vec![4.0, 4.0], 5.0);
    assert_eq!(ba.value(&[0, 1]).unwrap(), 5.0);
    assert_eq!(ba.marginal(1, &[0]).unwrap(), 1.0);
    let own: Vec<bool> = (0..8).map(|j| j < 4).collect();
    let halves = Valuation::subadditive_halves(10.0, own);
    assert_eq!(halves.value(&[0, 1, 2, 5]).unwrap(), 30.0);
    let cov = Valuation::coverage(vec![1.0; 3], vec![vec![0, 1], vec![1, 2]]).unwrap();
    assert_eq!(cov.value(&[0, 1]).unwrap(), 3.0);
    let cov2 = Valuation::coverage(vec![1.0; 2], vec![vec![0, 1], vec![1]]).unwrap();
    assert_eq!(cov2.marginal(1, &[0]).unwrap(), 0.0);
    let add = Valuation::additive(vec![2.0, 7.0]);
    assert_eq!(add.marginal(1, &[0]).unwrap(), add.marginal(1, &[]).unwrap());
}

#[test]
fn submodularity_sampling() {
    assert!(check_submodular(&Valuation::additive(vec![1.0, 2.0, 3.0]), 1000, 0).passed());
    let own: Vec<bool> = (0..8).map(|j| j % 2 == 1).collect();
    let halves = check_submodular(&Valuation::subadditive_halves(10.0, own), 10_000, 0);
    let w = halves.witness.expect("halves are not submodular");
    assert!(w.marginal_union > w.marginal_s1);
    let cov = Valuation::coverage(vec![1.0, 2.0, 0.5, 1.5], vec![vec![0, 1], vec![1, 2], vec![3], vec![0, 3]]).unwrap();
    let r = check_submodular(&cov, 10_000, 1);
    assert!(r.passed());
    assert_eq!(r.trials_run, 10_000);
}

#[test]
fn matching_by_hand() {
    let one = WeightMatrix::from_rows(vec![0], vec![vec![5f64.ln()]]).unwrap();
    assert_eq!(max_weight_matching(&one).pairs, vec![(0, 0)]);
    let two = WeightMatrix::from_rows(
        vec![0, 1],
        vec![vec![4f64.ln(), 0.0], vec![3f64.ln(), 2f64.ln()]],
    )
    .unwrap();
    assert_eq!(max_weight_matching(&two).pairs, vec![(0, 0), (1, 1)]);
    let blocked = WeightMatrix::from_rows(vec![0, 1, 2], vec![vec![1.0, 3.0, 2.0], vec![SENTINEL; 3]]).unwrap();
    assert_eq!(max_weight_matching(&blocked).pairs, vec![(0, 1)]);
}

#[test]
fn weight_modes_by_hand() {
    let inst = Instance::new(vec![2.0], vec![Valuation::additive(vec![E, E * E])], 2).unwrap();
    let w = build_weights(&inst, &[0, 1], WeightMode::Phase1Singleton).unwrap();
    assert!((w.get(0, 0) - 2.0).abs() < 1e-12 && (w.get(0, 1) - 4.0).abs() < 1e-12);
    let zero = additive(&[&[0.0, 1.0]]);
    let w = build_weights(&zero, &[0, 1], WeightMode::SmatchFirst { keep_aside: &[0.0] }).unwrap();
    assert_eq!(w.get(0, 0), SENTINEL);
    // Bundle {0} is worth 3; adding item 1 keeps the union at weight 3.
    let cov = Valuation::coverage(vec![1.0; 3], vec![vec![0, 1, 2], vec![2]]).unwrap();
    let inst = Instance::symmetric(vec![cov], 2).unwrap();
    let bundles = vec![vec![0]];
    let w = build_weights(&inst, &[1], WeightMode::Phase2Cumulative { bundles: &bundles }).unwrap();
    assert!((w.get(0, 0) - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn smatch_on_example1() {
    let ex = example1(20, 20.0, 0.5).unwrap();
    let trace = smatch_trace(&ex, SmatchVariant::Additive).unwrap();
    let first = &trace.rounds[0].matching;
    assert_eq!(first.item_of(1), Some(0));
    assert!(first.item_of(0).unwrap() >= 1);
    let out = trace.allocation;
    assert_eq!(out.bundle(1), &[0]);
    assert!((nsw_of(&ex, &out) - exact_nsw(&ex)).abs() < 1e-9);
}

fn exact_nsw(inst: &Instance) -> f64 {
    exact_opt(inst, DEFAULT_LIMIT).unwrap().opt_nsw
}

#[test]
fn smatch_small_cases() {
    let empty = additive(&[&[], &[]]);
    assert!(smatch_trace(&empty, SmatchVariant::Additive).unwrap().rounds.is_empty());
    let single = additive(&[&[1.0, 2.0, 3.0]]);
    let t = smatch_trace(&single, SmatchVariant::Additive).unwrap();
    assert_eq!(t.rounds.len(), 3);
    assert!(t.rounds.iter().all(|r| r.matching.len() == 1));
    assert_eq!(t.allocation.bundle(0), &[0, 1, 2]);
    for seed in 0..20 {
        let inst = generate(&FamilySpec::RandomAdditive { n: 3, m: 3, lo: 0.0, hi: 10.0 }, seed).unwrap().0;
        let a = nsw_of(&inst, &smatch(&inst, SmatchVariant::Additive).unwrap());
        assert!((a - brute_opt(&inst)).abs() <= 1e-9 * a.max(1.0), "seed {seed}");
        let r = nsw_of(&inst, &reprematch(&inst).unwrap());
        assert!((r - brute_opt(&inst)).abs() <= 1e-9 * r.max(1.0), "seed {seed}");
    }
}

#[test]
fn phase_counts() {
    assert_eq!(phase_bound(1), 0);
    assert_eq!(phase_bound(2), 1);
    assert_eq!(phase_bound(5), 3);
}

#[test]
fn reprematch_examples() {
    let single = additive(&[&[1.0, 2.0]]);
    assert_eq!(reprematch(&single).unwrap().bundle(0), &[0, 1]);
    let ex = example1(20, 20.0, 0.5).unwrap();
    let ledger = reprematch_trace(&ex).unwrap();
    assert_eq!(ledger.phase3_matching.item_of(1), Some(0));
    let got = nsw_of(&ex, &ledger.allocation);
    assert!(got * 12.0 >= exact_nsw(&ex));
}

#[test]
fn baselines_on_example1() {
    let ex = example1(20, 20.0, 0.5).unwrap();
    let naive = nsw_of(&ex, &naive_repeated_matching(&ex).unwrap());
    assert!(naive <= (20.0f64 + 0.5 + 20.0 - 1.0).sqrt());
    let single = single_matching_fill(&ex).unwrap();
    assert!(single.bundle(0).contains(&0));
    assert_eq!(single.bundle(1), &[1]);
    assert!((nsw_of(&ex, &single) - 39.5f64.sqrt()).abs() < 1e-9);
    let one = additive(&[&[1.0, 1.0]]);
    assert_eq!(single_matching_fill(&one).unwrap().bundle(0), &[0, 1]);
    assert_eq!(naive_repeated_matching(&one).unwrap().bundle(0), &[0, 1]);
}

#[test]
fn single_matching_versus_smatch_is_reported() {
    let trials = 200;
    let wins = (0..trials)
        .filter(|&seed| {
            let inst = generate(&FamilySpec::RandomAdditive { n: 2, m: 4, lo: 0.0, hi: 10.0 }, seed).unwrap().0;
            nsw_of(&inst, &single_matching_fill(&inst).unwrap())
                <= nsw_of(&inst, &smatch(&inst, SmatchVariant::Additive).unwrap()) + 1e-9
        })
        .count();
    println!("single matching at or below smatch on {wins}/{trials} random 2x4 instances");
}

#[test]
fn exact_and_feasibility() {
    let split = additive(&[&[3.0, 1.0], &[1.0, 3.0]]);
    let opt = exact_opt(&split, DEFAULT_LIMIT).unwrap();
    assert!((opt.opt_nsw - 3.0).abs() < 1e-12);
    let single = additive(&[&[1.0, 2.0]]);
    assert_eq!(exact_opt(&single, DEFAULT_LIMIT).unwrap().best.bundle(0), &[0, 1]);
    let first = feasible(&split, &[0.0, 0.0], 1.0, DEFAULT_LIMIT).unwrap().unwrap();
    assert_eq!(first.owners(2), vec![Some(0), Some(0)]);
    let inst = generate(&FamilySpec::RandomAdditive { n: 3, m: 5, lo: 0.0, hi: 10.0 }, 11).unwrap().0;
    let best = exact_opt(&inst, DEFAULT_LIMIT).unwrap();
    let targets = inst.bundle_values(&best.best);
    assert!(feasible(&inst, &targets, 1.0, DEFAULT_LIMIT).unwrap().is_some());
    let raised: Vec<f64> = targets.iter().map(|t| t * 1.01).collect();
    let witness = feasible(&inst, &raised, 1.0, DEFAULT_LIMIT).unwrap();
    assert!(witness.is_none());
}

#[test]
fn pareto_examples() {
    let gap = po_gap(0.01).unwrap();
    let out = smatch(&gap, SmatchVariant::Additive).unwrap();
    assert_eq!(out.bundles(), &[vec![0, 2], vec![1, 3]]);
    let witness = is_pareto_optimal(&gap, &out, DEFAULT_LIMIT).unwrap().expect("dominated");
    assert_eq!(witness.bundles(), &[vec![0, 1], vec![2, 3]]);
    let single = additive(&[&[1.0, 2.0]]);
    assert!(is_pareto_optimal(&single, &alloc(&[&[0, 1]]), DEFAULT_LIMIT).unwrap().is_none());
    for seed in 0..30 {
        let inst = generate(&FamilySpec::RandomRestricted { n: 3, m: 5, interest: 0.5 }, seed).unwrap().0;
        let out = smatch(&inst, SmatchVariant::Restricted).unwrap();
        assert!(is_pareto_optimal(&inst, &out, DEFAULT_LIMIT).unwrap().is_none(), "seed {seed}");
    }
}

#[test]
fn envy_examples() {
    let same = additive(&[&[10.0, 1.0, 1.0], &[10.0, 1.0, 1.0]]);
    let fine = alloc(&[&[0], &[1, 2]]);
    assert!(is_ef1(&same, &fine).unwrap() && is_strong_ef1(&same, &fine).unwrap());
    let twin = additive(&[&[10.0, 10.0], &[10.0, 10.0]]);
    let hoard = alloc(&[&[0, 1], &[]]);
    assert!(!is_ef1(&twin, &hoard).unwrap());
    assert!(!is_strong_ef1(&twin, &hoard).unwrap());
    let one = additive(&[&[1.0]]);
    assert!(is_ef1(&one, &alloc(&[&[0]])).unwrap() && is_strong_ef1(&one, &alloc(&[&[0]])).unwrap());
}

#[test]
fn const_agents_examples() {
    let single = additive(&[&[1.0, 2.0]]);
    assert_eq!(const_agents_solve(&single, &GridSearchConfig::default()).unwrap().bundle(0), &[0, 1]);
    let ones = additive(&[&[1.0, 1.0], &[1.0, 1.0]]);
    let cfg = GridSearchConfig {
        delta: 0.1,
        ..GridSearchConfig::default()
    };
    assert!((nsw_of(&ones, &const_agents_solve(&ones, &cfg).unwrap()) - 1.0).abs() < 1e-12);
    let cov = generate(
        &FamilySpec::RandomCoverage {
            n: 2,
            m: 5,
            universe: 6,
            sets_per_item: 3,
        },
        3,
    )
    .unwrap()
    .0;
    let got = nsw_of(&cov, &const_agents_solve(&cov, &GridSearchConfig::default()).unwrap());
    assert!(got >= (1.0 - 1.0 / E) * 0.95 * brute_opt(&cov));
}

#[test]
fn multilinear_examples() {
    let cov = Valuation::coverage(vec![1.0, 2.0], vec![vec![0], vec![1], vec![0, 1]]).unwrap();
    assert_eq!(multilinear_estimate(&cov, &[1.0, 1.0, 1.0], 3, 0), 3.0);
    assert_eq!(multilinear_estimate(&cov, &[0.0; 3], 10, 0), 0.0);
    let add = Valuation::additive(vec![2.0, 4.0]);
    let samples = 100_000;
    let est = multilinear_estimate(&add, &[0.5, 0.25], samples, 5);
    // Var = 4·0.25 + 16·0.1875 = 4.
    let sd = (4.0 / samples as f64).sqrt();
    assert!((est - 2.0).abs() <= 3.0 * sd, "{est}");
}

#[test]
fn decomposition_examples() {
    let integral = FractionalAssignment::indicator(&alloc(&[&[0], &[1]]), 2);
    let d = decompose(&integral).unwrap();
    assert_eq!(d.terms.len(), 1);
    assert_eq!(d.terms[0].0, 1.0);
    let d = decompose(&FractionalAssignment::zeros(2, 3)).unwrap();
    assert_eq!(d.terms.len(), 1);
    assert_eq!(d.terms[0].1.num_assigned(), 0);
    let mut y = FractionalAssignment::zeros(2, 1);
    y.y[0][0] = 0.3;
    y.y[1][0] = 0.7;
    let d = decompose(&y).unwrap();
    let terms: Vec<(f64, Vec<Vec<usize>>)> = d.terms.iter().map(|(b, a)| (*b, a.bundles().to_vec())).collect();
    assert_eq!(terms.len(), 2);
    assert!((terms[0].0 - 0.7).abs() < 1e-12 && terms[0].1 == vec![vec![], vec![0]]);
    assert!((terms[1].0 - 0.3).abs() < 1e-12 && terms[1].1 == vec![vec![0], vec![]]);

    let trials = 10_000u64;
    let hits = (0..trials).filter(|&s| swap_round(&d, s).bundle(0) == [0]).count() as f64;
    let sd = (0.3 * 0.7 / trials as f64).sqrt();
    assert!((hits / trials as f64 - 0.3).abs() <= 3.0 * sd);
    let single = decompose(&integral).unwrap();
    assert_eq!(swap_round(&single, 9).bundles(), &[vec![0], vec![1]]);
}

#[test]
fn generator_examples() {
    let ex = example1(20, 20.0, 0.5).unwrap();
    let a: Vec<f64> = (0..21).map(|j| ex.singleton(0, j)).collect();
    assert_eq!(a[0], 20.5);
    assert!(a[1..].iter().all(|&v| v == 1.0));
    let b: Vec<f64> = (0..21).map(|j| ex.singleton(1, j)).collect();
    assert_eq!((b[0], b[1]), (20.0, 1.0));
    assert!(b[2..].iter().all(|&v| v == 0.0));
    let gap = po_gap(0.01).unwrap();
    assert_eq!((gap.num_agents(), gap.num_items()), (2, 4));
    assert_eq!(gap.singleton(0, 0), 2.01);
    let spec = FamilySpec::RandomAdditive { n: 2, m: 4, lo: 0.0, hi: 10.0 };
    assert_eq!(generate(&spec, 7).unwrap().0, generate(&spec, 7).unwrap().0);
}
