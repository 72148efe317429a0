use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nsw_core::instances::{generate, to_json, FamilySpec};

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Family {
    Example1,
    SubadditiveGap,
    XosGap,
    AsymTight,
    PoGap,
    RandomAdditive,
    RandomRestricted,
    RandomBa,
    RandomSplc,
    RandomCoverage,
}

/// Parameters not used by the chosen family are ignored.
#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 6)]
    pub m: usize,
    /// The large value M of the constructed families.
    #[arg(long = "M", default_value_t = 10.0)]
    pub big: f64,
    /// Perturbation ε; each family has its own default.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Second perturbation of asym_tight (default ε/2).
    #[arg(long)]
    pub eps_bar: Option<f64>,
    /// Half the item count of xos_gap.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Entitlement of agent 0 in asym_tight.
    #[arg(long = "W", default_value_t = 100.0)]
    pub weight: f64,
    /// Number of n²-item groups in asym_tight.
    #[arg(long, default_value_t = 1)]
    pub sets: usize,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 10.0)]
    pub hi: f64,
    /// Probability that an agent wants an item (random_restricted).
    #[arg(long, default_value_t = 0.6)]
    pub interest: f64,
    #[arg(long, default_value_t = 3)]
    pub kinds: usize,
    #[arg(long, default_value_t = 2)]
    pub max_copies: usize,
    #[arg(long, default_value_t = 8)]
    pub universe: usize,
    #[arg(long, default_value_t = 3)]
    pub sets_per_item: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl GenArgs {
    pub fn spec(&self) -> FamilySpec {
        let (n, m) = (self.n, self.m);
        match self.family {
            Family::Example1 => FamilySpec::Example1 {
                m,
                big: self.big,
                eps: self.eps,
            },
            Family::SubadditiveGap => FamilySpec::SubadditiveGap { m, big: self.big },
            Family::XosGap => FamilySpec::XosGap {
                k: self.k,
                big: self.big,
                eps: self.eps,
            },
            Family::AsymTight => FamilySpec::AsymTight {
                n,
                sets: self.sets,
                weight: self.weight,
                big: self.big,
                eps: self.eps,
                eps_bar: self.eps_bar,
            },
            Family::PoGap => FamilySpec::PoGap {
                eps: self.eps.unwrap_or(0.01),
            },
            Family::RandomAdditive => FamilySpec::RandomAdditive {
                n,
                m,
                lo: self.lo,
                hi: self.hi,
            },
            Family::RandomRestricted => FamilySpec::RandomRestricted {
                n,
                m,
                interest: self.interest,
            },
            Family::RandomBa => FamilySpec::RandomBa { n, m },
            Family::RandomSplc => FamilySpec::RandomSplc {
                n,
                kinds: self.kinds,
                max_copies: self.max_copies,
            },
            Family::RandomCoverage => FamilySpec::RandomCoverage {
                n,
                m,
                universe: self.universe,
                sets_per_item: self.sets_per_item,
            },
        }
    }
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<String> {
    let (inst, meta) = generate(&args.spec(), args.seed)?;
    Ok(to_json(&inst, Some(&meta)))
}
