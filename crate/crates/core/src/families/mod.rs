//! Finite-column models of coherent and trivial families of functions.
//!
//! The universe `ω × ω` is cut to `N` columns. Equality modulo finite sets
//! becomes agreement on every column `≥ k*`, for a per-instance threshold `k*`.

mod cofinal;
mod family;
mod finsup;
pub mod gen;
mod grid;
pub mod io;

use thiserror::Error;

pub use cofinal::{default_domination, extend_from_cofinal, CofinalExtension};
pub use family::{
    cech_d, coboundary, coherence_violation, defect, face, is_n_coherent, is_trivialization,
    sort_with_sign, trivialization_failure, CoherenceViolation, Family, Trivialization,
    TrivializationFailure,
};
pub use finsup::{
    finsup_to_trivialization, finsup_to_trivialization_by, finsup_violation, solve_finsup,
    trivialization_to_finsup, FinsupOutcome, FinsupViolation, UnsatCertificate,
};
pub use gen::{gen_family, GenMode};
pub use grid::{eq_above, join, meet, GridFn, Point, TruncFn};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("meet of an empty list")]
    EmptyMeet,
    #[error("column count mismatch: expected {expected}, found {found}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("point {point:?} lies outside I{domain}")]
    OutsideDomain { point: Point, domain: String },
    #[error("registry is empty")]
    EmptyRegistry,
    #[error("family arity must be at least 1")]
    ZeroArity,
    #[error("threshold k* = {kstar} exceeds column count {n_cols}")]
    ThresholdTooLarge { kstar: usize, n_cols: usize },
    #[error("registry index {index} out of range (registry has {size} members)")]
    UnknownIndex { index: usize, size: usize },
    #[error("expected a tuple of length {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("value for {tuple:?} has domain I{found}, expected I{expected}")]
    DomainMismatch {
        tuple: Vec<usize>,
        expected: String,
        found: String,
    },
    #[error("nonzero value at tuple {0:?} with a repeated index")]
    RepeatedIndex(Vec<usize>),
    #[error("families live on different registries or arities")]
    Incompatible,
    #[error("family is not coherent at k*: defect at {:?} is {} at {:?}", .0.tuple, .0.value, .0.point)]
    NotCoherent(CoherenceViolation),
    #[error("candidate is not a finitely supported reformulation: {0:?}")]
    NotFinsup(FinsupViolation),
    #[error("not a trivialization: at {:?}, point {:?}, expected {} found {}", .0.tuple, .0.point, .0.expected, .0.found)]
    NotTrivialization(TrivializationFailure),
    #[error("solution value does not fit in 64 bits")]
    Overflow,
    #[error("registry member {index} is not dominated above k* by any sub-registry member")]
    Undominated { index: usize },
    #[error("invalid domination map: {0}")]
    BadDomination(String),
    #[error("cannot place an incoherent perturbation (k* = {kstar}, N = {n_cols}, |registry| = {registry}, n = {n})")]
    CannotPerturb {
        kstar: usize,
        n_cols: usize,
        registry: usize,
        n: usize,
    },
    #[error("{0}")]
    Format(String),
}
