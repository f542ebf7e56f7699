use thiserror::Error;

use crate::composite::Quantity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArldaError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("snapshot has no value for {0}")]
    MissingQuantity(Quantity),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    /// The requested accuracy is below what the oracle can honor.
    #[error("accuracy floor reached for {quantity}: requested {requested:e}, floor {floor:e}")]
    AccuracyFloorReached { quantity: Quantity, requested: f64, floor: f64 },
    #[error("invalid oracle request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("subproblem did not converge: gap {gap:e} after {iterations} iterations")]
    NonConvergence { gap: f64, iterations: usize },
    #[error("gap-certified optimum {best_decrease:e} (gap {gap:e}) cannot reach target decrease {target:e}")]
    TargetUnreachable { best_decrease: f64, gap: f64, target: f64 },
}
