use thiserror::Error;

use crate::grid::Cube;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid Young function: {0}")]
    InvalidGauge(String),

    #[error("{0} has no finite-valued associate function")]
    NoFiniteAssociate(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("cube {0} is not aligned with the sample lattice or leaves the domain")]
    Misaligned(Cube),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("family is not sparse: cube {cube} keeps |E_Q|/|Q| = {ratio} < delta = {delta}")]
    NotSparse { cube: Cube, ratio: f64, delta: f64 },

    #[error("unsupported commutator order {0} for this construction")]
    UnsupportedOrder(u32),

    #[error("zero denominator: {0}")]
    ZeroNorm(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("scenario validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
