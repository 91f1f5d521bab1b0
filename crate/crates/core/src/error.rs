use thiserror::Error;

use crate::fitting::FitResult;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid bracket [{lo}, {hi}]: lower end must be below upper end")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("objective returned a non-finite value at {at}")]
    NonFiniteObjective { at: String },

    #[error("adaptive quadrature exceeded maximum depth {depth} near x = {near}")]
    MaxDepthExceeded { depth: usize, near: f64 },

    #[error("parameters belong to different families: (n, m) = ({n1}, {m1}) vs ({n2}, {m2})")]
    MismatchedFamily { n1: f64, m1: f64, n2: f64, m2: f64 },

    #[error("degenerate parameters: a1 = a2 = {a}")]
    DegenerateParams { a: f64 },

    #[error("density ratio minimum {min_ratio} is above one; densities cannot cross")]
    RatioAboveOne { min_ratio: f64 },

    #[error("no crossing of the CDF difference found on the scan grid")]
    NoCrossing,

    #[error("inconclusive: {sign_changes} sign changes on the grid")]
    Inconclusive { sign_changes: usize },

    #[error("transform is not strictly monotone: {0}")]
    NonMonotoneTransform(String),

    #[error("median falls in the open top bin (cumulative {cumulative_percent:.3}% at last finite edge)")]
    MedianInOpenBin { cumulative_percent: f64 },

    #[error("underdetermined fit: {bins} bins cannot identify {free_params} free parameters")]
    Underdetermined { bins: usize, free_params: usize },

    #[error("optimizer did not converge (chi-square {:.6e} after {} iterations)", .result.chi_square, .result.iterations)]
    OptimizerFailed { result: Box<FitResult> },

    #[error("mean undefined: beta * gamma = {beta_gamma} <= 1")]
    MeanUndefined { beta_gamma: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
