use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use nsw_core::baselines::{naive_repeated_matching, single_matching_fill};
use nsw_core::constagents::{const_agents_search, GridSearchConfig, OracleKind};
use nsw_core::exact::{allocation_count, exact_opt, exact_opt_grouped, OptResult};
use nsw_core::fairness::{fairness_report, FairnessReport};
use nsw_core::instances::Metadata;
use nsw_core::reprematch::reprematch;
use nsw_core::smatch::{smatch, SmatchVariant};
use nsw_core::valuations::fold_copies;
use nsw_core::{nsw, Allocation, Instance, NswError, Valuation};
use serde::Serialize;

use crate::error::{load_instance, CliError, CliResult};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum)]
pub enum Algo {
    Smatch,
    SmatchMarginal,
    SmatchRestricted,
    Reprematch,
    SingleMatching,
    NaiveRm,
    Exact,
    ConstAgents,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Smatch => "smatch",
            Algo::SmatchMarginal => "smatch-marginal",
            Algo::SmatchRestricted => "smatch-restricted",
            Algo::Reprematch => "reprematch",
            Algo::SingleMatching => "single-matching",
            Algo::NaiveRm => "naive-rm",
            Algo::Exact => "exact",
            Algo::ConstAgents => "const-agents",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleChoice {
    /// Exhaustive when `n^m` fits the oracle limit, rounded otherwise.
    Auto,
    Exact,
    Rounded,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file (JSON).
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Also compute the exhaustive optimum and the ratio opt/achieved.
    #[arg(long)]
    pub with_exact: bool,
    /// Report EF1, strong EF1 and (within the oracle limit) Pareto optimality.
    #[arg(long)]
    pub check_fairness: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid ratio for const-agents.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Search floor for const-agents; derived from the instance when omitted.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Feasibility oracle for const-agents.
    #[arg(long, value_enum, default_value_t = OracleChoice::Auto)]
    pub oracle: OracleChoice,
    /// Samples per multilinear estimate in the rounded oracle.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Settings shared by `solve` and `bench`.
#[derive(Debug, Clone)]
pub struct SolveParams {
    pub seed: u64,
    pub delta: f64,
    pub beta: Option<f64>,
    pub oracle: OracleChoice,
    pub samples: usize,
    pub limit: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSummary {
    pub oracle: &'static str,
    pub delta: f64,
    pub beta: f64,
    pub opt_guess: f64,
    pub max: f64,
    pub iterations: usize,
    pub oracle_calls: usize,
}

pub struct Solved {
    pub allocation: Allocation,
    pub search: Option<SearchSummary>,
}

fn within_limit(inst: &Instance, limit: u128) -> bool {
    allocation_count(inst.num_agents(), inst.num_items()).is_some_and(|c| c <= limit)
}

/// Exhaustive optimum. Additive instances past the limit fall back to the
/// grouped enumeration, which is often far smaller.
pub fn optimum(inst: &Instance, limit: u128) -> CliResult<OptResult> {
    match exact_opt(inst, limit) {
        Err(e @ NswError::LimitExceeded { .. }) => {
            let additive = inst
                .valuations()
                .iter()
                .all(|v| matches!(v, Valuation::Additive { .. } | Valuation::RestrictedAdditive { .. }));
            if additive {
                Ok(exact_opt_grouped(inst, limit)?)
            } else {
                Err(e.into())
            }
        }
        other => Ok(other?),
    }
}

pub fn run_algorithm(inst: &Instance, algo: Algo, p: &SolveParams) -> CliResult<Solved> {
    let plain = |allocation| Solved {
        allocation,
        search: None,
    };
    Ok(match algo {
        Algo::Smatch => plain(smatch(inst, SmatchVariant::Additive)?),
        Algo::SmatchMarginal => plain(smatch(inst, SmatchVariant::Marginal)?),
        Algo::SmatchRestricted => plain(smatch(inst, SmatchVariant::Restricted)?),
        Algo::Reprematch => plain(reprematch(inst)?),
        Algo::SingleMatching => plain(single_matching_fill(inst)?),
        Algo::NaiveRm => plain(naive_repeated_matching(inst)?),
        Algo::Exact => plain(optimum(inst, p.limit)?.best),
        Algo::ConstAgents => {
            let oracle = match p.oracle {
                OracleChoice::Exact => OracleKind::Exact,
                OracleChoice::Rounded => OracleKind::Rounded,
                OracleChoice::Auto if within_limit(inst, p.limit) => OracleKind::Exact,
                OracleChoice::Auto => OracleKind::Rounded,
            };
            let cfg = GridSearchConfig {
                delta: p.delta,
                beta: p.beta,
                oracle,
                sample_count: p.samples,
                seed: p.seed,
                limit: p.limit,
            };
            let out = const_agents_search(inst, &cfg)?;
            Solved {
                allocation: out.allocation,
                search: Some(SearchSummary {
                    oracle: match oracle {
                        OracleKind::Exact => "exact",
                        OracleKind::Rounded => "rounded",
                    },
                    delta: p.delta,
                    beta: out.beta,
                    opt_guess: out.opt_guess,
                    max: out.max,
                    iterations: out.iterations,
                    oracle_calls: out.oracle_calls,
                }),
            }
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub path: Option<String>,
    pub num_agents: usize,
    pub num_items: usize,
    pub weights: Vec<f64>,
    pub families: Vec<&'static str>,
    pub metadata: Option<Metadata>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub algorithm: &'static str,
    pub seed: u64,
    pub instance: InstanceSummary,
    /// Per-agent item lists (SPLC copies appear as their expanded item ids).
    pub allocation: Vec<Vec<usize>>,
    /// Per-agent `(kind, count)` pairs, present for SPLC instances.
    pub copies: Option<Vec<Vec<(usize, usize)>>>,
    pub values: Vec<f64>,
    pub nsw: f64,
    /// `null` when some agent gets nothing of value.
    pub log_nsw: Option<f64>,
    pub opt_nsw: Option<f64>,
    /// `opt_nsw / nsw`; `null` when the optimum is positive but `nsw` is zero.
    pub ratio: Option<f64>,
    pub fairness: Option<FairnessReport>,
    pub search: Option<SearchSummary>,
    pub wall_time_ms: f64,
}

pub fn ratio(opt: f64, achieved: f64) -> Option<f64> {
    if achieved > 0.0 {
        Some(opt / achieved)
    } else if opt > 0.0 {
        None
    } else {
        Some(1.0)
    }
}

fn splc_fold(inst: &Instance, alloc: &Allocation) -> Option<Vec<Vec<(usize, usize)>>> {
    match inst.valuation(0) {
        Valuation::Splc { item_kind, .. } => Some(alloc.bundles().iter().map(|b| fold_copies(item_kind, b)).collect()),
        _ => None,
    }
}

/// Recomputes the NSW from the report's own allocation and rejects any mismatch.
pub fn audit(inst: &Instance, report: &RunReport) -> CliResult<()> {
    let alloc = Allocation::from_bundles(report.allocation.clone())?;
    alloc.check_complete(inst)?;
    let again = nsw(inst, &alloc)?.nsw;
    if (again - report.nsw).abs() > 1e-12 * again.abs().max(1.0) {
        return Err(CliError::invalid(format!(
            "self-audit failed: reported nsw {} but allocation gives {again}",
            report.nsw
        )));
    }
    if let Some(r) = report.ratio {
        if r < 1.0 - 1e-9 {
            return Err(CliError::invalid(format!("self-audit failed: ratio {r} below 1")));
        }
    }
    Ok(())
}

pub fn build_report(
    inst: &Instance,
    meta: Option<Metadata>,
    path: Option<String>,
    algo: Algo,
    p: &SolveParams,
    with_exact: bool,
    check_fairness: bool,
) -> CliResult<RunReport> {
    let start = Instant::now();
    let solved = run_algorithm(inst, algo, p)?;
    let alloc = solved.allocation;
    let value = nsw(inst, &alloc)?;
    let opt_nsw = if with_exact {
        Some(optimum(inst, p.limit)?.opt_nsw)
    } else {
        None
    };
    let fairness = if check_fairness {
        let po_limit = within_limit(inst, p.limit).then_some(p.limit);
        Some(fairness_report(inst, &alloc, po_limit)?)
    } else {
        None
    };
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        algorithm: algo.name(),
        seed: p.seed,
        instance: InstanceSummary {
            path,
            num_agents: inst.num_agents(),
            num_items: inst.num_items(),
            weights: inst.weights().to_vec(),
            families: inst.valuations().iter().map(Valuation::family_name).collect(),
            metadata: meta,
        },
        copies: splc_fold(inst, &alloc),
        values: inst.bundle_values(&alloc),
        nsw: value.nsw,
        log_nsw: value.log_nsw.is_finite().then_some(value.log_nsw),
        opt_nsw,
        ratio: opt_nsw.and_then(|o| ratio(o, value.nsw)),
        fairness,
        search: solved.search,
        allocation: alloc.into_bundles(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    audit(inst, &report)?;
    Ok(report)
}

pub fn cmd_solve(args: &SolveArgs, limit: u128) -> CliResult<String> {
    let (inst, meta) = load_instance(&args.input)?;
    let params = SolveParams {
        seed: args.seed,
        delta: args.delta,
        beta: args.beta,
        oracle: args.oracle,
        samples: args.samples,
        limit,
    };
    let report = build_report(
        &inst,
        meta,
        Some(args.input.display().to_string()),
        args.algo,
        &params,
        args.with_exact,
        args.check_fairness,
    )?;
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}
