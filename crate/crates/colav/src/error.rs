//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// Numerical fallbacks that the algorithms handle internally (for example the
/// degenerate safe-distance radicand of the dynamic unsafe box) are *not*
/// errors; they are recorded as diagnostics on the supervisor state instead.
#[derive(Debug, Error)]
pub enum Error {
    /// Two points that must be distinct coincide (zero-length line of sight).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A guidance quantity is singular at the requested state
    /// (e.g. desired-heading rate evaluated at the target point).
    #[error("guidance singularity: {0}")]
    Singularity(String),

    /// A parameter set violates a feasibility bound of the method.
    #[error("infeasible constraint: {0}")]
    InfeasibleConstraint(String),

    /// Closest-point-of-approach quantities are undefined because the two
    /// tracks have (numerically) zero relative velocity.
    #[error("no relative motion between tracks")]
    NoRelativeMotion,

    /// The caller asked for an operation from a state that must not occur
    /// (e.g. a virtual waypoint for a ship already inside the unsafe box).
    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    /// Benchmark case index outside 1..=22.
    #[error("benchmark case {0} out of range 1..=22")]
    CaseOutOfRange(u32),

    /// A scenario or trace file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
