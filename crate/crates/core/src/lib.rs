//! Multilinear identity testing (MIT) over black-box finite rings.
//!
//! A finite ring `R = <r_1, ..., r_k>` is presented by an additive generating
//! set and accessed only through query-counted oracles for addition,
//! multiplication and negation; a multilinear polynomial `f : R^m -> R` is
//! accessed as a unit-cost black box. The crate provides:
//!
//! - [`ring`]: concrete oracle rings (`Z_n`, `M_t(F_2)`, products) behind the
//!   black-box interface, with an exact per-oracle query ledger and brute-force
//!   additive-span enumeration for verification.
//! - [`poly`]: multilinear polynomials in commuting or noncommuting variables,
//!   evaluable both structurally and as opaque one-query black boxes.
//! - [`testers`]: the deterministic `k^m` tester, the randomized subsum tester,
//!   and exhaustive verifiers for the coset/subsum/marked-fraction lemmas the
//!   testers rest on (exact rational probabilities, no floating point).
//! - [`walk`]: the lazy random walk on `l`-subsets of `[k]` (Johnson graph)
//!   with incremental subsum maintenance and exact spectral-gap analysis.
//! - [`quantum`]: the walk-search cost formula `S + (U+C)/sqrt(delta*eps)`,
//!   the query-bound algebra with parameter optimization, and a dense
//!   desk-scale simulation of the Szegedy walk quantization.
//! - [`reduction`]: the automata-based compilation of split-collision
//!   instances into matrix-ring identity-testing instances, with brute-force
//!   ground truth and the randomized partition lift.
//! - [`json`]: the wire formats (ring specs, element literals, polynomial and
//!   instance files) shared by the CLI and the Python bindings.

pub mod error;
pub mod json;
pub mod poly;
pub mod quantum;
pub mod reduction;
pub mod ring;
pub mod rng;
pub mod testers;
pub mod walk;

pub use error::{Error, Result};
pub use poly::{Assignment, Atom, MultilinearPolynomial, Term, VariableMode};
pub use ring::{AdditiveBasis, BlackBoxRing, QueryLedger, RingElement, RingKind};

/// Exact probability type used by the lemma verifiers.
pub type Frac = num_rational::Ratio<u128>;
