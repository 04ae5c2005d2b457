//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown registry name `{0}` (known: REG1, CB1)")]
    UnknownRegistry(String),

    #[error("invalid monomial key `{0}`")]
    BadMonomial(String),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("invalid grid or arc structure: {0}")]
    InvalidTrajectory(String),

    #[error("state became non-finite at node {node} (t = {time})")]
    NonFiniteState { node: usize, time: f64 },

    #[error("costate became non-finite at node {node} (t = {time})")]
    NonFiniteCostate { node: usize, time: f64 },

    #[error("first-order margin |g'f1| = {margin:.3e} below fo_min = {fo_min:.3e} at t = {time}")]
    FirstOrderDegenerate { margin: f64, fo_min: f64, time: f64 },

    #[error("multiplier fit did not converge: residual {residual:.3e} after {iterations} iterations (fit_tol = {fit_tol:.3e})")]
    FitDidNotConverge { residual: f64, iterations: usize, fit_tol: f64 },

    #[error("empty multiplier list")]
    EmptyMultiplierList,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, Error>;
