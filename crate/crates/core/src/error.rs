use thiserror::Error;

use crate::colgen::EquilibriumResult;

pub type Result<T> = std::result::Result<T, Error>;

/// Instance and strategy validation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("instance must have at least one location")]
    NoLocations,
    #[error("instance must have at least one component")]
    NoComponents,
    #[error("empty monitoring set {0}")]
    EmptyMonitoringSet(String),
    #[error("component {0} is not monitored by any location")]
    UnmonitoredComponent(String),
    #[error("detection probability must be in (0,1]: location {location} has {value}")]
    DetectionProbability { location: String, value: f64 },
    #[error("defender budget r_D = {r_d} must satisfy 1 <= r_D <= n = {n}")]
    DefenderBudget { r_d: usize, n: usize },
    #[error("attacker budget r_A = {r_a} must satisfy 1 <= r_A <= m = {m}")]
    AttackerBudget { r_a: usize, m: usize },
    #[error("unknown location index {0}")]
    UnknownLocation(usize),
    #[error("unknown component index {0}")]
    UnknownComponent(usize),
    #[error("unknown location name {0:?}")]
    UnknownLocationName(String),
    #[error("unknown component name {0:?}")]
    UnknownComponentName(String),
    #[error("duplicate name {0:?}")]
    DuplicateName(String),
    #[error("missing entry for location {location} in {field:?}")]
    MissingEntry { field: &'static str, location: String },
    #[error("detector set of size {size} exceeds r_D = {r_d}")]
    DefenderSetTooLarge { size: usize, r_d: usize },
    #[error("attack set of size {size} exceeds r_A = {r_a}")]
    AttackSetTooLarge { size: usize, r_a: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid marginal attack vector: {0}")]
    Marginal(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("schema violation: {0}")]
    Schema(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),

    #[error("marginal vector is not in the capped simplex: {0}")]
    InfeasibleMarginal(String),

    #[error("exhaustive enumeration of {count} placements exceeds the cap of {cap}")]
    SizeLimit { count: u128, cap: u128 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("LP solver failure after {pivots} pivots: {reason}")]
    SolverFailure { pivots: usize, reason: String },

    #[error("no convergence after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        incumbent: Box<EquilibriumResult>,
    },

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
