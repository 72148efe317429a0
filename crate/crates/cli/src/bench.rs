use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use nsw_core::constagents::ONE_MINUS_INV_E;
use nsw_core::instances::{asym_tight, example1, generate, po_gap, subadditive_gap, xos_gap, FamilySpec};
use nsw_core::{nsw, Instance, NswError};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::solve::{optimum, ratio, run_algorithm, Algo, OracleChoice, SolveParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// The constructed instances, one of each.
    Paper,
    /// Random instances of every family, small enough for exhaustive optima.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Text table on a terminal, JSON otherwise.
    Auto,
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Instances per family in the random suite.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    pub format: Format,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Relative slack when comparing a ratio against its bound.
const BOUND_TOL: f64 = 1e-9;

struct Case {
    family: &'static str,
    instance: Instance,
    algos: Vec<Algo>,
    /// Ratio the construction is known to force on `gap_algo`.
    gap: Option<(Algo, f64)>,
}

fn log2(n: usize) -> f64 {
    (n as f64).log2()
}

/// Worst-case ratio guaranteed for `algo` on this family, if any.
fn bound(family: &str, algo: Algo, n: usize) -> Option<f64> {
    let submodular = !matches!(family, "subadditive_gap" | "xos_gap");
    match algo {
        Algo::Smatch | Algo::SmatchMarginal => Some(2.0 * n as f64),
        Algo::SmatchRestricted => Some(1.45),
        Algo::Reprematch if submodular => Some(2.0 * n as f64 * (log2(n) + 2.0)),
        Algo::ConstAgents if submodular => Some(1.0 / (ONE_MINUS_INV_E * (1.0 - 0.05))),
        Algo::Exact => Some(1.0),
        _ => None,
    }
}

fn paper_cases() -> CliResult<Vec<Case>> {
    use Algo::*;
    let all_additive = vec![Smatch, SmatchMarginal, Reprematch, SingleMatching, NaiveRm];
    let (k, big, eps) = (10usize, 100.0, 0.1);
    Ok(vec![
        Case {
            family: "example1",
            instance: example1(20, 20.0, 0.5)?,
            algos: all_additive.clone(),
            gap: Some((NaiveRm, 3.0)),
        },
        Case {
            family: "subadditive_gap",
            instance: subadditive_gap(8, 10.0)?,
            algos: vec![Reprematch, SingleMatching, NaiveRm],
            gap: Some((Reprematch, 4.0)),
        },
        Case {
            family: "xos_gap",
            instance: xos_gap(k, big, eps)?,
            algos: vec![Reprematch, SingleMatching, NaiveRm],
            gap: Some((Reprematch, k as f64 * big / (3.0 * big + k as f64 * eps))),
        },
        Case {
            family: "asym_tight",
            instance: asym_tight(4, 1, 100.0, 10.0, 1e-2, 5e-3)?,
            algos: all_additive.clone(),
            gap: None,
        },
        Case {
            family: "po_gap",
            instance: po_gap(0.01)?,
            algos: all_additive,
            gap: None,
        },
    ])
}

fn random_cases(trials: usize, seed: u64) -> CliResult<Vec<Case>> {
    use Algo::*;
    let mut cases = Vec::new();
    for t in 0..trials {
        let pick = |xs: &[usize], salt: usize| xs[(t / salt) % xs.len()];
        let seed_for = |fam: u64| seed.wrapping_add(fam << 40).wrapping_add(t as u64);
        let n4 = pick(&[2, 3, 4], 1);
        let m8 = pick(&[4, 5, 6, 7, 8], 3);
        let n3 = pick(&[2, 3], 1);
        let specs: [(&'static str, FamilySpec, Vec<Algo>); 5] = [
            (
                "random_additive",
                FamilySpec::RandomAdditive {
                    n: n4,
                    m: m8,
                    lo: 0.0,
                    hi: 10.0,
                },
                vec![Smatch, SmatchMarginal, Reprematch, SingleMatching, NaiveRm],
            ),
            (
                "random_restricted",
                FamilySpec::RandomRestricted {
                    n: n3,
                    m: pick(&[3, 4, 5, 6], 2),
                    interest: 0.6,
                },
                vec![SmatchRestricted, Smatch, Reprematch],
            ),
            ("random_ba", FamilySpec::RandomBa { n: n4, m: m8 }, vec![SmatchMarginal, Reprematch]),
            (
                "random_splc",
                FamilySpec::RandomSplc {
                    n: n4,
                    kinds: m8 / 2,
                    max_copies: 2,
                },
                vec![SmatchMarginal, Reprematch],
            ),
            (
                "random_coverage",
                FamilySpec::RandomCoverage {
                    n: n3,
                    m: pick(&[4, 5, 6, 7], 2),
                    universe: 8,
                    sets_per_item: 3,
                },
                vec![Reprematch, ConstAgents],
            ),
        ];
        for (fam, (family, spec, algos)) in specs.into_iter().enumerate() {
            cases.push(Case {
                family,
                instance: generate(&spec, seed_for(fam as u64))?.0,
                algos,
                gap: None,
            });
        }
    }
    Ok(cases)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub family: String,
    pub algorithm: &'static str,
    pub instances: usize,
    pub mean_nsw: f64,
    /// Largest opt/achieved over the instances; `null` when some instance got zero NSW against a positive optimum.
    pub worst_ratio: Option<f64>,
    pub bound: Option<f64>,
    pub violations: usize,
    pub bound_satisfied: Option<bool>,
    /// Ratio the construction forces on this algorithm, and whether every run reached it.
    pub expected_min_ratio: Option<f64>,
    pub gap_reproduced: Option<bool>,
    pub time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub suite: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub rows: Vec<BenchRow>,
    pub all_satisfied: bool,
}

struct CellResult {
    key: (String, Algo),
    nsw: f64,
    ratio: Option<f64>,
    violated: bool,
    bound: Option<f64>,
    gap: Option<(f64, bool)>,
    time_ms: f64,
}

fn run_case(case: &Case, params: &SolveParams) -> CliResult<Vec<CellResult>> {
    let opt = optimum(&case.instance, params.limit)?.opt_nsw;
    let n = case.instance.num_agents();
    let mut out = Vec::new();
    for &algo in &case.algos {
        let start = Instant::now();
        let solved = match run_algorithm(&case.instance, algo, params) {
            Err(e) if e.code == crate::error::exit::INVALID => continue,
            other => other?,
        };
        let time_ms = start.elapsed().as_secs_f64() * 1e3;
        let achieved = nsw(&case.instance, &solved.allocation)?.nsw;
        let r = ratio(opt, achieved);
        let b = bound(case.family, algo, n);
        let violated = match (b, r) {
            (Some(b), Some(r)) => r > b * (1.0 + BOUND_TOL),
            (Some(_), None) => true,
            _ => false,
        };
        let gap = case
            .gap
            .filter(|g| g.0 == algo)
            .map(|(_, want)| (want, r.is_none_or(|r| r >= want - 1e-6)));
        out.push(CellResult {
            key: (case.family.to_string(), algo),
            nsw: achieved,
            ratio: r,
            violated,
            bound: b,
            gap,
            time_ms,
        });
    }
    Ok(out)
}

fn aggregate(cells: Vec<CellResult>) -> Vec<BenchRow> {
    let mut groups: BTreeMap<(String, Algo), Vec<CellResult>> = BTreeMap::new();
    for c in cells {
        groups.entry(c.key.clone()).or_default().push(c);
    }
    groups
        .into_iter()
        .map(|((family, algo), cs)| {
            let k = cs.len();
            let worst = cs.iter().try_fold(1.0f64, |acc, c| c.ratio.map(|r| acc.max(r)));
            let violations = cs.iter().filter(|c| c.violated).count();
            let bound = cs[0].bound;
            let gap = cs.iter().find_map(|c| c.gap.map(|g| g.0));
            BenchRow {
                family,
                algorithm: algo.name(),
                instances: k,
                mean_nsw: cs.iter().map(|c| c.nsw).sum::<f64>() / k as f64,
                worst_ratio: worst,
                bound,
                violations,
                bound_satisfied: bound.map(|_| violations == 0),
                expected_min_ratio: gap,
                gap_reproduced: gap.map(|_| cs.iter().all(|c| c.gap.is_none_or(|g| g.1))),
                time_ms: cs.iter().map(|c| c.time_ms).sum(),
            }
        })
        .collect()
}

pub fn run_bench(suite: Suite, trials: usize, seed: u64, limit: u128) -> CliResult<BenchReport> {
    let cases = match suite {
        Suite::Paper => paper_cases()?,
        Suite::Random => random_cases(trials, seed)?,
    };
    let params = SolveParams {
        seed,
        delta: 0.05,
        beta: None,
        oracle: OracleChoice::Exact,
        samples: 1000,
        limit,
    };
    let cells: Vec<Vec<CellResult>> = cases
        .par_iter()
        .map(|c| run_case(c, &params))
        .collect::<CliResult<_>>()?;
    let rows = aggregate(cells.into_iter().flatten().collect());
    let all_satisfied = rows
        .iter()
        .all(|r| r.bound_satisfied != Some(false) && r.gap_reproduced != Some(false));
    Ok(BenchReport {
        suite: match suite {
            Suite::Paper => "paper",
            Suite::Random => "random",
        },
        seed,
        trials: match suite {
            Suite::Paper => 1,
            Suite::Random => trials,
        },
        rows,
        all_satisfied,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.4}"))
}

pub fn render_text(report: &BenchReport) -> String {
    let mut s = format!(
        "{:<18} {:<18} {:>5} {:>12} {:>11} {:>9} {:>5} {:>10}\n",
        "family", "algorithm", "inst", "mean nsw", "worst ratio", "bound", "ok", "time ms"
    );
    for r in &report.rows {
        let ok = match (r.bound_satisfied, r.gap_reproduced) {
            (Some(false), _) | (_, Some(false)) => "NO",
            (None, None) => "-",
            _ => "yes",
        };
        let worst = r.worst_ratio.map_or("inf".into(), |v| format!("{v:.4}"));
        s.push_str(&format!(
            "{:<18} {:<18} {:>5} {:>12.4} {:>11} {:>9} {:>5} {:>10.1}\n",
            r.family,
            r.algorithm,
            r.instances,
            r.mean_nsw,
            worst,
            fmt_opt(r.bound),
            ok,
            r.time_ms
        ));
    }
    s
}

pub fn check_trials(suite: Suite, trials: usize) -> CliResult<()> {
    if suite == Suite::Random && trials == 0 {
        return Err(CliError::from(NswError::InvalidParameter("trials must be at least 1".into())));
    }
    Ok(())
}
