//! (p,q)-calculus and (p,q)-Bernstein-Kantorovich operators.
//!
//! * [`pq`]: (p,q)-integers, factorials, binomials and the Jackson-type
//!   definite integral.
//! * [`operators`]: basis weights, integration cells and the operator itself,
//!   plus the revised (p,q)-Bernstein and q-Kantorovich operators.
//! * [`moments`]: closed-form moments and the scales `delta_n`, `alpha_n`.
//! * [`analysis`]: moduli of continuity, pointwise error bounds and the
//!   convergence harness.

pub mod analysis;
pub mod error;
pub mod function;
pub mod moments;
pub mod operators;
pub mod pq;

pub use analysis::{
    korovkin_run, BoundKind, BoundReport, BoundRow, ConvergenceEntry, ConvergenceReport,
    ParamSequence,
};
pub use error::{Error, Result};
pub use function::{FunctionSpec, RealFunction};
pub use moments::{alpha_n, delta_n, delta_n_local, moments_closed_form, MomentSet};
pub use operators::{
    basis_weights, kantorovich_apply, kantorovich_cells, BasisWeights, KantorovichCell,
    KantorovichOperator, MAX_DEGREE,
};
pub use pq::{IntegralOptions, PQContext, PQParams};
