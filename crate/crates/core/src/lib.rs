//! Zero-window laboratory for one-parameter families of elliptic curves.
//!
//! The crate evaluates the prime-sum side of the explicit formula averaged
//! over a family `y^2 = x^3 + A(T)x + B(T)`, builds and optimizes the
//! compactly supported test functions that drive the window bounds, computes
//! the lower/upper/random-matrix sandwich for the average number of
//! normalized low zeros, and validates the window-count predictions against
//! simulated orthogonal ensembles with forced eigenvalues.
//!
//! Modules mirror the pipeline:
//!
//! * [`arith`] - primes, Legendre symbols, factorization, exact polynomial
//!   evaluation;
//! * [`curves`] - short-Weierstrass curves, traces of Frobenius via
//!   character sums, reduction types;
//! * [`family`] - specialization, the square-free sieve, the conductor
//!   proxy, persistent trace caches;
//! * [`density`] - explicit-formula prime sums, family averages, symmetry
//!   kernels and their predictions;
//! * [`testfunc`] - the profile `h`, the `phi` construction from `g = f*f`,
//!   the Fejer function `psi`;
//! * [`optimize`] - maximization of `C(h)` over polynomial profiles;
//! * [`bounds`] - the window sandwich (lower bound, upper bound, random
//!   matrix prediction, `tau_BSD`);
//! * [`rmtsim`] - Haar-random special orthogonal matrices, eigenangles,
//!   window counts.

use num_bigint::BigInt;

pub mod arith;
pub mod bounds;
pub mod curves;
pub mod density;
pub mod family;
mod intpoly;
pub mod optimize;
pub mod quad;
pub mod rmtsim;
pub mod testfunc;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("p = {0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("cannot factor zero")]
    ZeroFactorization,
    #[error("|{0}| exceeds the 128-bit working range")]
    WorkingRange(BigInt),
    #[error("curve y^2 = x^3 + {a}x + {b} is singular")]
    SingularCurve { a: BigInt, b: BigInt },
    #[error("singular specialization at t = {0}")]
    SingularSpecialization(i64),
    #[error("traces at p = {0} are covered by the small-prime policy, not the character sum")]
    SmallPrime(u64),
    #[error("square-free sieve calibration failed: ord_{p}(D(t)) varies along the progression t = c t' + t0")]
    SieveCalibration { p: u64 },
    #[error("family contributed no curves")]
    EmptyFamily,
    #[error("support sigma = {0} must lie in (0, 1)")]
    SupportOutOfRange(f64),
    #[error("missing trace for p = {p} at t = {t}")]
    MissingTrace { t: i64, p: u64 },
    #[error("degenerate test function: {0}")]
    DegenerateTestFunction(String),
    #[error("quadrature did not reach tolerance within the evaluation budget")]
    QuadratureBudget,
    #[error("forced rank > 0 is defined only for the orthogonal kernels")]
    KernelRank,
    #[error("tau = {tau} must satisfy 0 < tau < 1/sigma = {limit}")]
    TauOutOfRange { tau: f64, limit: f64 },
    #[error("trace cache: {0}")]
    CacheFormat(String),
    #[error("trace cache checksum mismatch")]
    CacheChecksum,
    #[error("trace cache fingerprint does not match this family")]
    CacheFingerprint,
    #[error("matrix is not orthogonal within tolerance")]
    NotOrthogonal,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
