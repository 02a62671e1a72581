use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Certificate checks report *violations* through dedicated variants that
/// carry a witness, so callers can print where an inequality broke.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("truncation did not converge: argmax reached k = {k} at r = {r}")]
    TruncationNotConverged { k: usize, r: f64 },

    #[error("invariant `{check}` violated at {witness}: {detail}")]
    InvariantViolated {
        check: String,
        witness: String,
        detail: String,
    },

    #[error("gap constant did not stabilize: Q = {q} on base grid, {q_ext} on extended grid")]
    GapUnbounded { q: f64, q_ext: f64 },

    #[error("maximizer hit the grid boundary for x = {x}")]
    DomainTooSmall { x: f64 },

    #[error("function is not convex on the grid (second difference {second_difference} at y = {y})")]
    NotConvex { y: f64, second_difference: f64 },

    #[error("weight has no second derivative; Riesz mass check not available")]
    NonSmoothWeight,

    #[error("maximizer not bracketed for m = {m}")]
    MaximizerUnbounded { m: f64 },

    #[error("norm did not stabilize: {last} -> {extended}")]
    NormDiverged { last: f64, extended: f64 },

    #[error("function provides derivatives up to order {available}, {required} required")]
    InsufficientDerivatives { required: usize, available: usize },

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {estimate:e}")]
    QuadratureNotConverged { a: f64, b: f64, estimate: f64 },

    #[error("growth bound violated at z = {z}: log|T(z)| = {lhs}, log envelope = {rhs}")]
    GrowthViolated { z: Complex64, lhs: f64, rhs: f64 },

    #[error("factorization bound violated: {0}")]
    FactorizationBoundViolated(String),

    #[error("density recovery failed: {0}")]
    DensityRecoveryFailed(String),

    #[error("node system is singular: {0}")]
    SingularNodeSystem(String),

    #[error("decay certificate violated at sample {index}: {ratio} > {bound}")]
    DecayCertificateViolated { index: i64, ratio: f64, bound: f64 },

    #[error("series tail {tail:e} exceeds tolerance {tol:e}")]
    TailNotConverged { tail: f64, tol: f64 },

    #[error("term bound violated for n = {n} at z = {z}: {value} > {bound}")]
    TermBoundViolated {
        n: i64,
        z: Complex64,
        value: f64,
        bound: f64,
    },

    #[error("shifted zero {index} leaves its disk")]
    ShiftLeavesDisk { index: usize },

    #[error("probe {z} lies inside exceptional disk {index}")]
    ProbeInsideDisk { z: Complex64, index: usize },

    #[error("no avoiding interval found for zero {index}")]
    NoAvoidingInterval { index: usize },

    #[error("polynomial coefficients lost {digits:.1} digits to cancellation")]
    CoefficientOverflow { digits: f64 },

    #[error("bad cutoff function: {0}")]
    BadCutoff(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
