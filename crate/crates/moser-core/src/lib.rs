//! Time-dependent Moser normal forms for aperiodically perturbed hyperbolic
//! equilibria.
//!
//! The library normalizes Hamiltonians of the form
//!
//! ```text
//! H(p, q, eta, t) = omega*p*q + eta + F(p, q, t)
//! ```
//!
//! where `F` is a polynomial perturbation of degree >= 3 whose coefficients
//! are exponential polynomials of time. Canonical transformations generated
//! by Lie series remove the perturbation order by order; the result depends
//! only on `x = p*q` (and `eta`), so the normalized flow reduces to
//! quadratures.
//!
//! Modules:
//! - [`timecoeff`]: the exact algebra of exponential-polynomial time
//!   coefficients (closed under products, d/dt, definite and improper
//!   integrals, certified sup bounds),
//! - [`pqseries`]: truncated Taylor series in `(p, q)` and in `x = pq`,
//!   Taylor norms, and the mixed/diagonal splitting,
//! - [`lie`]: Poisson bracket actions, truncated Lie-series transforms and
//!   point maps,
//! - [`homological`]: closed-form solvers for both time-dependent
//!   homological equations,
//! - [`normalizer`]: the quadratic normalization iteration and its ledger,
//! - [`bounds`]: the quantitative bound schedules and smallness conditions,
//! - [`flow`]: numerical integration of the original system, the exact
//!   normal-form flow, and conjugacy verification.

pub mod bounds;
pub mod flow;
pub mod homological;
pub mod lie;
pub mod normalizer;
pub mod pqseries;
pub mod timecoeff;

use thiserror::Error;

/// Errors shared by the engine modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands were built over different rate bases.
    #[error("rate bases differ between operands")]
    BasisMismatch,

    /// An improper time integral does not converge.
    #[error("improper integral diverges: {0}")]
    DivergentImproperIntegral(String),

    /// A quantity required to be bounded on t >= 0 grows.
    #[error("unbounded on the half-line: {0}")]
    UnboundedOnHalfLine(String),

    /// An operation precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A measured hypothesis needed by the scheme failed on the working
    /// domain (e.g. the real part of the frequency dropped below omega/2).
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Relative amplitude threshold used when canonicalizing exponential
/// polynomials: terms smaller than this times the largest amplitude are
/// roundoff ghosts and are dropped.
pub const AMP_CLEANUP_REL: f64 = 1e-14;
