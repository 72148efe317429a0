//! Nash social welfare allocation of indivisible goods among agents with
//! unequal entitlements.

pub mod baselines;
pub mod constagents;
pub mod error;
pub mod exact;
pub mod fairness;
pub mod instances;
pub mod matching;
pub mod model;
pub mod reprematch;
pub mod smatch;
pub mod valuations;

pub use error::{NswError, Result};
pub use matching::{build_weights, max_weight_matching, Matching, WeightMatrix, WeightMode, SENTINEL};
pub use model::{keepaside_value, nsw, nsw_of_values, rank_items, Allocation, Instance, NswValue};
pub use valuations::{check_submodular, Valuation};
