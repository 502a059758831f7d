//! Precision bounds for single-parameter estimation from finite outcome sets.
//!
//! The crate is organized around a small linear-algebra engine that turns a
//! set of linear bias constraints on an estimator into a variance lower
//! bound.  A constraint is a pair `(g, λ)`: a test function `g` on the
//! outcome set and a requested bias value `λ`.  For a model `p(x|θ)` the
//! engine forms the constraint matrix
//!
//! ```text
//! C_kl = Σ_{x ∈ X₊} g_k(x) g_l(x) / p(x|θ),    X₊ = { x : p(x|θ) > τ_supp }
//! ```
//!
//! and evaluates `sup_a (aᵀλ)² / (aᵀCa)`, which is `λᵀC⁻¹λ` when `C` is
//! invertible and diverges when `λ` has a component in the kernel of `C`.
//!
//! Modules:
//! - [`models`]: finite-outcome measurement models (spin binomial, Poisson
//!   counts, deterministic pointer).
//! - [`engine`]: constraint matrices, bound evaluation, estimator variances.
//! - [`constraints`]: ready-made constraint families (Barankin-type grids,
//!   score constraints, the two-point bound) and test-point sweeps.
//! - [`reference`]: closed-form bounds and estimator moments used as
//!   cross-checks.
//! - [`bayes`]: flat-prior posterior variances and the sampled comparison
//!   protocol behind the Bayesian-vs-CRB figure.
//! - [`quantum`]: density-operator analogues (raising map, quantum
//!   constraint matrix, pure-state Fisher information).

pub mod bayes;
pub mod constraints;
pub mod engine;
pub mod models;
pub mod quantum;
pub mod reference;

pub use constraints::{HcrBound, SweepResult, SweepStrategy, TestPointGrid};
pub use engine::{
    BoundResult, BoundStatus, Constraint, ConstraintKind, ConstraintSet, Tolerances,
};
pub use models::DiscreteModel;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// No outcome carries probability above the support threshold.
    #[error("degenerate model: no outcome has probability above the support threshold")]
    DegenerateModel,
    /// Mismatched dimensions between a model, constraint set, or estimator.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A matrix that must be (Hermitian) symmetric is not.
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    /// A matrix that must be positive semidefinite has a negative eigenvalue.
    #[error("matrix is not positive semidefinite (eigenvalue {0:.6e})")]
    NotPositiveSemidefinite(f64),
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A scan or optimization found no finite value.
    #[error("search failed: {0}")]
    SearchFailed(String),
    /// A density operator is too close to singular for the raising map.
    #[error("density operator is rank deficient (min eigenvalue {0:.6e}); regularize first")]
    RankDeficientDensity(f64),
    /// A truncated state leaks too much norm; enlarge the truncation.
    #[error("truncation leakage {0:.6e} exceeds tolerance; increase the truncation")]
    TruncationLeakage(f64),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
