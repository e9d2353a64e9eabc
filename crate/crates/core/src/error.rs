//! Crate-wide error type; variant names follow the failure they signal.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A byte string is not a canonical encoding of an element of the ring.
    #[error("invalid ring element encoding: {0}")]
    InvalidElement(String),

    /// A ring description is not constructible (e.g. `Zn` with n = 0).
    #[error("invalid ring spec: {0}")]
    InvalidRingSpec(String),

    /// A generator or subset index falls outside `[0, k)` or repeats.
    #[error("invalid index: {0}")]
    InvalidIndex(String),

    /// Additive-span enumeration exceeded the configured bound.
    #[error("additive span exceeds the configured bound of {bound} elements")]
    SpanTooLarge { bound: usize },

    /// An assignment length does not match the polynomial arity.
    #[error("arity mismatch: polynomial has {expected} variables, got {got}")]
    Arity { expected: usize, got: usize },

    /// A polynomial term is structurally invalid.
    #[error("invalid polynomial term: {0}")]
    InvalidTerm(String),

    /// An exhaustive verifier would enumerate more tuples than the cap allows.
    #[error("enumeration size {size} exceeds cap {cap}")]
    EnumerationTooLarge { size: u128, cap: u128 },

    /// The set passed as a coset is not a coset of a proper additive subgroup.
    #[error("not a coset of a proper additive subgroup: {0}")]
    NotAProperCoset(String),

    /// A verifier that needs a non-identity instance was given an identity.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A dense matrix would exceed the configured dimension cap.
    #[error("matrix dimension {dim} exceeds cap {cap}")]
    MatrixTooLarge { dim: usize, cap: usize },

    /// Walk-search cost is undefined when no state is marked.
    #[error("marked set is empty: cost 1/sqrt(delta*eps) is undefined")]
    MarkedSetEmpty,

    /// Detection horizon requested with zero marked fraction.
    #[error("marked fraction is zero: {0}")]
    MarkedFractionZero(String),

    /// The relaxation parameter fails its admissibility condition.
    #[error("alpha = {alpha} infeasible: (k-1)/(k-l) = {ratio} exceeds 1 + alpha")]
    AlphaInfeasible { alpha: f64, ratio: f64 },

    /// Automaton size 2^m exceeds the supported cap.
    #[error("m = {m} too large: automaton would have 2^{m} states (cap m <= {cap})")]
    MTooLarge { m: usize, cap: usize },

    /// A split-collision instance violates its structural invariants.
    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    /// A letter outside the automaton alphabet.
    #[error("unknown letter: {0:?}")]
    UnknownLetter(String),

    /// JSON syntax error, with location.
    #[error("parse error: {0}")]
    Parse(String),

    /// JSON that parses but does not match the expected schema.
    #[error("schema error at {path}: {detail}")]
    Schema { path: String, detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
