use thiserror::Error;

/// Errors produced by the solvers, oracles and instance I/O.
#[derive(Debug, Error)]
pub enum NswError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("item {item} out of range (instance has {num_items} items)")]
    ItemOutOfRange { item: usize, num_items: usize },

    #[error("item {item} already belongs to the query set")]
    ItemInSet { item: usize },

    #[error("{0}")]
    Incompatible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration needs {required} allocations, limit is {limit}")]
    LimitExceeded { required: u128, limit: u128 },

    #[error("search did not converge within {0} iterations")]
    NonConvergence(usize),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NswError>;
