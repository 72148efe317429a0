use std::fs;
use std::path::PathBuf;

use clap::Args;
use nsw_core::exact::allocation_count;
use nsw_core::fairness::{fairness_report, FairnessReport};
use nsw_core::{nsw, Allocation};
use serde::Serialize;
use serde_json::Value;

use crate::error::{load_instance, CliError, CliResult};

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Instance file (JSON).
    pub instance: PathBuf,
    /// A run report, an object with a `bundles` field, or a bare list of bundles.
    pub allocation: PathBuf,
    /// Also run the exhaustive Pareto check (within the oracle limit).
    #[arg(long)]
    pub po: bool,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub allocation: Vec<Vec<usize>>,
    pub values: Vec<f64>,
    pub nsw: f64,
    pub log_nsw: Option<f64>,
    /// NSW stored in the input file, if any.
    pub reported_nsw: Option<f64>,
    pub reported_nsw_matches: Option<bool>,
    pub fairness: FairnessReport,
}

fn bundles_from(doc: &Value) -> CliResult<Vec<Vec<usize>>> {
    let raw = match doc {
        Value::Array(_) => doc,
        Value::Object(o) => o
            .get("allocation")
            .or_else(|| o.get("bundles"))
            .ok_or_else(|| CliError::invalid("allocation file has neither `allocation` nor `bundles`"))?,
        _ => return Err(CliError::invalid("allocation file must be a JSON array or object")),
    };
    serde_json::from_value(raw.clone()).map_err(|e| CliError::invalid(format!("malformed bundles: {e}")))
}

pub fn cmd_check(args: &CheckArgs, limit: u128) -> CliResult<String> {
    let (inst, _) = load_instance(&args.instance)?;
    let text = fs::read_to_string(&args.allocation).map_err(|e| CliError::io(&args.allocation.display().to_string(), e))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("{}: {e}", args.allocation.display())))?;
    let alloc = Allocation::from_bundles(bundles_from(&doc)?)?;
    alloc.check_complete(&inst)?;
    let value = nsw(&inst, &alloc)?;
    let po_limit = if args.po {
        match allocation_count(inst.num_agents(), inst.num_items()) {
            Some(c) if c <= limit => Some(limit),
            c => {
                return Err(CliError::from(nsw_core::NswError::LimitExceeded {
                    required: c.unwrap_or(u128::MAX),
                    limit,
                }))
            }
        }
    } else {
        None
    };
    let reported_nsw = doc.get("nsw").and_then(Value::as_f64);
    let report = CheckReport {
        values: inst.bundle_values(&alloc),
        nsw: value.nsw,
        log_nsw: value.log_nsw.is_finite().then_some(value.log_nsw),
        reported_nsw,
        reported_nsw_matches: reported_nsw.map(|r| (r - value.nsw).abs() <= 1e-9 * value.nsw.abs().max(1.0)),
        fairness: fairness_report(&inst, &alloc, po_limit)?,
        allocation: alloc.into_bundles(),
    };
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}
