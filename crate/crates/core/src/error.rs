use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("index {index} outside cached range 0..={capacity}")]
    IndexOutOfRange { index: usize, capacity: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("result overflowed working precision: {0}")]
    Overflow(String),

    #[error("series did not converge within {terms} terms (partial sum {partial})")]
    NonConvergence { terms: usize, partial: f64 },

    #[error("degree {n} exceeds supported maximum {max}")]
    Capacity { n: usize, max: usize },

    #[error("function `{name}` evaluated at t = {t} outside its domain [{lo}, {hi}]")]
    FunctionDomain {
        name: String,
        t: f64,
        lo: f64,
        hi: f64,
    },

    #[error("evaluation failed at x = {x}: {source}")]
    AtPoint {
        x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "degree {n} is ill-conditioned in binary64: narrowest cell is {rel_width:e} of its \
         position (minimum {min:e})"
    )]
    IllConditioned { n: usize, rel_width: f64, min: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("tabulated function: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;
