//! Classical identity tests and exhaustive lemma verifiers.
//!
//! Two testers:
//! - [`deterministic_test`]: evaluates `f` on all `k^m` generator tuples.
//!   Soundness is the l = 1 case of the subsum machinery: vanishing on every
//!   generator tuple forces vanishing on the whole additive span.
//! - [`randomized_test`]: repeatedly plugs random size-l subsums of the
//!   generators into each variable. One-sided: a true identity is never
//!   flagged, and a non-identity survives a trial with probability at most
//!   `1 - ((1-p)/2)^m`.
//!
//! The verifiers ([`verify_coset_lemma`], [`verify_subsum_lemma`],
//! [`exhaustive_nonzero_fraction`]) brute-force the combinatorial statements
//! the testers rest on, comparing exact rationals, never floats.

use std::collections::HashSet;
use std::ops::ControlFlow;

use itertools::Itertools;
use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{Assignment, MultilinearPolynomial};
use crate::ring::{
    enumerate_additive_span, subset_sum, AdditiveBasis, BlackBoxRing, QueryLedger, RingElement,
};
use crate::rng::WalkRng;
use crate::Frac;

/// Default cap on exhaustive tuple enumerations.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Cap on the span size for subgroup enumeration (2^n subset masks).
pub const DEFAULT_SUBGROUP_SPAN_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    IdentityConsistent,
    Violated,
}

/// Verdict of a tester run, with the exact query cost of the run.
#[derive(Clone, Debug)]
pub struct TestVerdict {
    pub outcome: Outcome,
    /// A point on which `f` re-evaluates nonzero; present iff `Violated`.
    pub witness: Option<Assignment>,
    pub ledger_delta: QueryLedger,
}

impl TestVerdict {
    pub fn violated(&self) -> bool {
        self.outcome == Outcome::Violated
    }
}

/// Configuration for the randomized subsum tester.
#[derive(Clone, Copy, Debug)]
pub struct SamplerConfig {
    /// Subset size; defaults to floor(k/2), the bound-optimal choice.
    pub ell: Option<usize>,
    /// Trial count; defaults to ceil(4^m * ln(1/failure_bound)).
    pub trials: Option<u64>,
    pub seed: u64,
    pub failure_bound: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            ell: None,
            trials: None,
            seed: 0,
            failure_bound: 0.01,
        }
    }
}

impl SamplerConfig {
    fn resolve(&self, k: usize, m: usize) -> Result<(usize, u64)> {
        let ell = self.ell.unwrap_or_else(|| (k / 2).max(1));
        if ell == 0 || ell > k {
            return Err(Error::InvalidIndex(format!(
                "l = {ell} outside [1, k = {k}]"
            )));
        }
        let trials = match self.trials {
            Some(t) if t >= 1 => t,
            Some(t) => return Err(Error::InvalidIndex(format!("trials = {t} must be >= 1"))),
            None => {
                if !(self.failure_bound > 0.0 && self.failure_bound < 1.0) {
                    return Err(Error::InvalidIndex(format!(
                        "failure_bound = {} outside (0, 1)",
                        self.failure_bound
                    )));
                }
                let t = (4f64.powi(m as i32) * (1.0 / self.failure_bound).ln()).ceil();
                if !t.is_finite() || t > u64::MAX as f64 {
                    return Err(Error::EnumerationTooLarge {
                        size: u128::MAX,
                        cap: u64::MAX as u128,
                    });
                }
                (t as u64).max(1)
            }
        };
        Ok((ell, trials))
    }
}

/// Visit every length-`arity` tuple over `[0, radix)` in odometer order.
fn for_each_index_tuple<F>(radix: usize, arity: usize, mut visit: F) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<ControlFlow<()>>,
{
    if radix == 0 {
        return Ok(());
    }
    let mut digits = vec![0usize; arity];
    loop {
        if let ControlFlow::Break(()) = visit(&digits)? {
            return Ok(());
        }
        let mut pos = arity;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < radix {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn require_multilinear(f: &MultilinearPolynomial) -> Result<()> {
    if !f.is_multilinear() {
        return Err(Error::NotApplicable("polynomial is not multilinear".into()));
    }
    Ok(())
}

/// The deterministic `k^m` tester: evaluate `f` on every generator tuple.
///
/// Runs the full sweep unconditionally - the query budget is exactly `k^m`
/// f-evals - recording the first violating tuple as witness.
pub fn deterministic_test(
    f: &MultilinearPolynomial,
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
) -> Result<TestVerdict> {
    require_multilinear(f)?;
    let before = ring.ledger_snapshot();
    let k = basis.k();
    let m = f.arity();
    let mut witness: Option<Assignment> = None;
    let mut point: Assignment = Vec::with_capacity(m);
    for_each_index_tuple(k, m, |digits| {
        point.clear();
        for &i in digits {
            point.push(basis.generator(i)?.clone());
        }
        let value = f.evaluate(ring, &point)?;
        if !ring.is_zero(&value) && witness.is_none() {
            witness = Some(point.clone());
        }
        Ok(ControlFlow::Continue(()))
    })?;
    let ledger_delta = ring.ledger_snapshot().delta_since(&before);
    Ok(TestVerdict {
        outcome: if witness.is_some() {
            Outcome::Violated
        } else {
            Outcome::IdentityConsistent
        },
        witness,
        ledger_delta,
    })
}

/// Uniform size-`ell` subset of the generator indices plus its subsum,
/// costing exactly `ell - 1` addition queries.
pub fn random_subsum(
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
    ell: usize,
    rng: &mut WalkRng,
) -> Result<(Vec<usize>, RingElement)> {
    let k = basis.k();
    if ell == 0 || ell > k {
        return Err(Error::InvalidIndex(format!(
            "l = {ell} outside [1, k = {k}]"
        )));
    }
    let mut subset: Vec<usize> = rand::seq::index::sample(rng, k, ell).into_vec();
    subset.sort_unstable();
    let sum = subset_sum(ring, basis, &subset)?;
    Ok((subset, sum))
}

/// The randomized subsum tester.
///
/// Each trial draws `m` independent subsums (costing `m*(l-1)` adds) and one
/// f-eval; the first nonzero evaluation stops the run with a witness.
pub fn randomized_test(
    f: &MultilinearPolynomial,
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
    config: &SamplerConfig,
) -> Result<TestVerdict> {
    require_multilinear(f)?;
    let k = basis.k();
    let m = f.arity();
    let (ell, trials) = config.resolve(k, m)?;
    let before = ring.ledger_snapshot();
    let mut rng = crate::rng::from_seed(config.seed);
    for _ in 0..trials {
        let mut point: Assignment = Vec::with_capacity(m);
        for _ in 0..m {
            let (_, sum) = random_subsum(ring, basis, ell, &mut rng)?;
            point.push(sum);
        }
        let value = f.evaluate(ring, &point)?;
        if !ring.is_zero(&value) {
            return Ok(TestVerdict {
                outcome: Outcome::Violated,
                witness: Some(point),
                ledger_delta: ring.ledger_snapshot().delta_since(&before),
            });
        }
    }
    Ok(TestVerdict {
        outcome: Outcome::IdentityConsistent,
        witness: None,
        ledger_delta: ring.ledger_snapshot().delta_since(&before),
    })
}

// ---------------------------------------------------------------------------
// Exact rational bounds
// ---------------------------------------------------------------------------

/// `p = (l(l-1) + (k-l)(k-l-1)) / (k(k-1))`: the probability that two fixed
/// indices land on the same side of a random size-l subset.
pub fn collision_prob_p(k: usize, ell: usize) -> Frac {
    let (k, l) = (k as u128, ell as u128);
    assert!(l >= 1 && l <= k && k >= 2);
    let same_inside = l * (l - 1);
    let same_outside = (k - l) * (k - l).saturating_sub(1);
    Ratio::new(same_inside + same_outside, k * (k - 1))
}

/// `(1-p)/2 = l(k-l) / (k(k-1))`: the subsum-miss lower bound of the sampling
/// lemma.
pub fn subsum_miss_bound(k: usize, ell: usize) -> Frac {
    let (k, l) = (k as u128, ell as u128);
    assert!(l >= 1 && l <= k && k >= 2);
    Ratio::new_raw(l * (k - l), k * (k - 1)).reduced()
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

// ---------------------------------------------------------------------------
// Coset lemma verifier
// ---------------------------------------------------------------------------

/// Brute-force report on the vanishing set `R_i` of one coordinate.
#[derive(Clone, Debug)]
pub struct CosetReport {
    pub coordinate: usize,
    /// The additive span the check ran over.
    pub span_size: usize,
    /// `R_i`: elements that force `f` to vanish in coordinate i, sorted.
    pub vanishing_set: Vec<RingElement>,
    /// Representative `u` with `R_i = u + subgroup`; `None` when `R_i` is empty.
    pub coset_representative: Option<RingElement>,
    /// The translated set `R_i - u`, verified closed under addition.
    pub subgroup: Option<Vec<RingElement>>,
    /// Closure verdict (vacuously true for the empty set).
    pub is_coset: bool,
    /// `|R_i| <= |span| / 2`.
    pub size_bound_holds: bool,
}

/// Brute-forces `R_i` over the span and checks the coset structure claim:
/// `R_i - u` is an additive subgroup for any `u` in `R_i`, and
/// `|R_i| <= |R|/2`.
///
/// Errors with `NotApplicable` when `f` is an identity (then `R_i = R` and
/// the claim has no content); the identity check is the deterministic tester.
pub fn verify_coset_lemma(
    f: &MultilinearPolynomial,
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
    coordinate: usize,
    span_bound: usize,
) -> Result<CosetReport> {
    require_multilinear(f)?;
    let m = f.arity();
    if coordinate >= m {
        return Err(Error::Arity {
            expected: m,
            got: coordinate + 1,
        });
    }
    if deterministic_test(f, ring, basis)?.outcome == Outcome::IdentityConsistent {
        return Err(Error::NotApplicable(
            "f = 0 is an identity; R_i would be all of R".into(),
        ));
    }
    let span = enumerate_additive_span(ring, basis.elements(), span_bound)?;

    let mut vanishing: Vec<RingElement> = Vec::new();
    for candidate in &span {
        let mut vanishes = true;
        for_each_index_tuple(span.len(), m - 1, |digits| {
            let mut point: Assignment = Vec::with_capacity(m);
            let mut rest = digits.iter();
            for pos in 0..m {
                if pos == coordinate {
                    point.push(candidate.clone());
                } else {
                    point.push(span[*rest.next().expect("m-1 digits")].clone());
                }
            }
            if !ring.is_zero(&f.evaluate(ring, &point)?) {
                vanishes = false;
                return Ok(ControlFlow::Break(()));
            }
            Ok(ControlFlow::Continue(()))
        })?;
        if vanishes {
            vanishing.push(candidate.clone());
        }
    }
    vanishing.sort();

    if vanishing.is_empty() {
        return Ok(CosetReport {
            coordinate,
            span_size: span.len(),
            vanishing_set: vanishing,
            coset_representative: None,
            subgroup: None,
            is_coset: true,
            size_bound_holds: true,
        });
    }

    let rep = vanishing[0].clone();
    let mut subgroup: Vec<RingElement> = vanishing
        .iter()
        .map(|x| ring.sub(x, &rep))
        .collect::<Result<_>>()?;
    subgroup.sort();
    let members: HashSet<&RingElement> = subgroup.iter().collect();
    let mut is_coset = members.contains(&ring.zero());
    'outer: for a in &subgroup {
        for b in &subgroup {
            if !members.contains(&ring.add(a, b)?) {
                is_coset = false;
                break 'outer;
            }
        }
    }
    let size_bound_holds = 2 * vanishing.len() <= span.len();
    Ok(CosetReport {
        coordinate,
        span_size: span.len(),
        vanishing_set: vanishing,
        coset_representative: Some(rep),
        subgroup: Some(subgroup),
        is_coset,
        size_bound_holds,
    })
}

// ---------------------------------------------------------------------------
// Subsum lemma verifier
// ---------------------------------------------------------------------------

/// Exhaustive check of the subsum sampling bound for one coset.
#[derive(Clone, Debug)]
pub struct SubsumReport {
    pub ell: usize,
    pub subsets_total: u128,
    /// Subsets whose subsum lands outside the coset.
    pub misses: u128,
    /// `misses / C(k, l)`, exact.
    pub exact_prob: Frac,
    /// `(1-p)/2`, exact.
    pub bound: Frac,
    pub holds: bool,
}

/// Enumerates all `C(k, l)` subsets and compares the exact probability that
/// the subsum avoids the coset `T` against `(1-p)/2`.
///
/// `T` must be a coset of a *proper* additive subgroup of the span of the
/// basis; anything else is rejected with `NotAProperCoset`.
pub fn verify_subsum_lemma(
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
    coset: &[RingElement],
    ell: usize,
    span_bound: usize,
) -> Result<SubsumReport> {
    let k = basis.k();
    if k < 2 {
        return Err(Error::InvalidIndex(
            "need at least 2 generators (k >= 2)".into(),
        ));
    }
    if ell == 0 || ell > k {
        return Err(Error::InvalidIndex(format!(
            "l = {ell} outside [1, k = {k}]"
        )));
    }
    if coset.is_empty() {
        return Err(Error::NotAProperCoset("empty set".into()));
    }
    let span = enumerate_additive_span(ring, basis.elements(), span_bound)?;
    let span_set: HashSet<&RingElement> = span.iter().collect();
    for t in coset {
        if !span_set.contains(t) {
            return Err(Error::NotAProperCoset(
                "coset element outside the span".into(),
            ));
        }
    }
    // Translate to a candidate subgroup and verify closure.
    let rep = &coset[0];
    let translated: Vec<RingElement> = coset
        .iter()
        .map(|x| ring.sub(x, rep))
        .collect::<Result<_>>()?;
    let translated_set: HashSet<&RingElement> = translated.iter().collect();
    if translated_set.len() != coset.len() {
        return Err(Error::NotAProperCoset("repeated elements".into()));
    }
    for a in &translated {
        for b in &translated {
            if !translated_set.contains(&ring.add(a, b)?) {
                return Err(Error::NotAProperCoset(
                    "translate is not closed under addition".into(),
                ));
            }
        }
    }
    if translated.len() >= span.len() {
        return Err(Error::NotAProperCoset("subgroup is the whole span".into()));
    }

    let total = binomial(k, ell);
    if total > DEFAULT_ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge {
            size: total,
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    let coset_set: HashSet<&RingElement> = coset.iter().collect();
    let mut misses: u128 = 0;
    for subset in (0..k).combinations(ell) {
        let sum = subset_sum(ring, basis, &subset)?;
        if !coset_set.contains(&sum) {
            misses += 1;
        }
    }
    let exact_prob = Ratio::new(misses, total);
    let bound = subsum_miss_bound(k, ell);
    Ok(SubsumReport {
        ell,
        subsets_total: total,
        misses,
        exact_prob,
        bound,
        holds: exact_prob >= bound,
    })
}

// ---------------------------------------------------------------------------
// Marked-fraction verifier
// ---------------------------------------------------------------------------

/// Exhaustive nonzero fraction of `f` over all m-tuples of size-l subsums.
#[derive(Clone, Debug)]
pub struct FractionReport {
    pub ell: usize,
    pub tuples_total: u128,
    pub nonzero: u128,
    /// `nonzero / C(k,l)^m`, exact.
    pub fraction: Frac,
    /// `((1-p)/2)^m`, exact.
    pub bound: Frac,
    /// Bound comparison; only meaningful when the fraction is nonzero
    /// (a zero fraction certifies an identity over the subsums).
    pub holds: bool,
}

/// Evaluates `f` on every m-tuple of subsums `r_u` with `|u| = l` and returns
/// the exact fraction of nonzero results together with the `((1-p)/2)^m`
/// lower bound it must meet whenever `f` is not an identity.
pub fn exhaustive_nonzero_fraction(
    f: &MultilinearPolynomial,
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
    ell: usize,
    cap: u128,
) -> Result<FractionReport> {
    let k = basis.k();
    let m = f.arity();
    if k < 2 {
        return Err(Error::InvalidIndex(
            "need at least 2 generators (k >= 2)".into(),
        ));
    }
    if ell == 0 || ell > k {
        return Err(Error::InvalidIndex(format!(
            "l = {ell} outside [1, k = {k}]"
        )));
    }
    let per_coord = binomial(k, ell);
    let total = per_coord
        .checked_pow(m as u32)
        .ok_or(Error::EnumerationTooLarge {
            size: u128::MAX,
            cap,
        })?;
    if total > cap {
        return Err(Error::EnumerationTooLarge { size: total, cap });
    }
    let subsums: Vec<RingElement> = (0..k)
        .combinations(ell)
        .map(|u| subset_sum(ring, basis, &u))
        .collect::<Result<_>>()?;
    let mut nonzero: u128 = 0;
    let mut point: Assignment = Vec::with_capacity(m);
    for_each_index_tuple(subsums.len(), m, |digits| {
        point.clear();
        for &i in digits {
            point.push(subsums[i].clone());
        }
        if !ring.is_zero(&f.evaluate(ring, &point)?) {
            nonzero += 1;
        }
        Ok(ControlFlow::Continue(()))
    })?;
    let fraction = Ratio::new(nonzero, total);
    let bound = subsum_miss_bound(k, ell).pow(m as i32);
    Ok(FractionReport {
        ell,
        tuples_total: total,
        nonzero,
        fraction,
        bound,
        holds: fraction >= bound,
    })
}

// ---------------------------------------------------------------------------
// Ground truth over the span, and subgroup/coset instruments
// ---------------------------------------------------------------------------

/// Brute-force identity check over the whole additive span: the independent
/// ground truth the testers are measured against.
pub fn identity_over_span(
    f: &MultilinearPolynomial,
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
    span_bound: usize,
    cap: u128,
) -> Result<bool> {
    let span = enumerate_additive_span(ring, basis.elements(), span_bound)?;
    let total =
        (span.len() as u128)
            .checked_pow(f.arity() as u32)
            .ok_or(Error::EnumerationTooLarge {
                size: u128::MAX,
                cap,
            })?;
    if total > cap {
        return Err(Error::EnumerationTooLarge { size: total, cap });
    }
    let mut identity = true;
    let mut point: Assignment = Vec::with_capacity(f.arity());
    for_each_index_tuple(span.len(), f.arity(), |digits| {
        point.clear();
        for &i in digits {
            point.push(span[i].clone());
        }
        if !ring.is_zero(&f.evaluate(ring, &point)?) {
            identity = false;
            return Ok(ControlFlow::Break(()));
        }
        Ok(ControlFlow::Continue(()))
    })?;
    Ok(identity)
}

/// All proper additive subgroups of a (small) span, by closure sweep over
/// subset masks. Each subgroup is returned as a sorted element list.
#[allow(clippy::needless_range_loop)] // bitmask positions, not element iteration
pub fn enumerate_proper_subgroups(
    ring: &BlackBoxRing,
    span: &[RingElement],
) -> Result<Vec<Vec<RingElement>>> {
    let n = span.len();
    if n > DEFAULT_SUBGROUP_SPAN_CAP {
        return Err(Error::EnumerationTooLarge {
            size: 1u128 << n,
            cap: 1u128 << DEFAULT_SUBGROUP_SPAN_CAP,
        });
    }
    let index_of = |e: &RingElement| span.binary_search(e).ok();
    let zero_idx = index_of(&ring.zero())
        .ok_or_else(|| Error::NotAProperCoset("span does not contain zero".into()))?;
    // Cayley table over span indices.
    let mut table = vec![vec![0usize; n]; n];
    for (i, row) in table.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let s = ring.add(&span[i], &span[j])?;
            *cell = index_of(&s)
                .ok_or_else(|| Error::NotAProperCoset("span not closed under addition".into()))?;
        }
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut out = Vec::new();
    for mask in 0u32..=full {
        if mask & (1 << zero_idx) == 0 || mask == full {
            continue;
        }
        let mut closed = true;
        'scan: for i in 0..n {
            if mask & (1 << i) == 0 {
                continue;
            }
            for j in i..n {
                if mask & (1 << j) == 0 {
                    continue;
                }
                if mask & (1 << table[i][j]) == 0 {
                    closed = false;
                    break 'scan;
                }
            }
        }
        if closed {
            out.push(
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| span[i].clone())
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// All cosets of a subgroup inside the span, each sorted, deduplicated.
pub fn cosets_of_subgroup(
    ring: &BlackBoxRing,
    subgroup: &[RingElement],
    span: &[RingElement],
) -> Result<Vec<Vec<RingElement>>> {
    let mut seen: HashSet<Vec<RingElement>> = HashSet::new();
    let mut out = Vec::new();
    for x in span {
        let mut coset: Vec<RingElement> = subgroup
            .iter()
            .map(|h| ring.add(x, h))
            .collect::<Result<_>>()?;
        coset.sort();
        if seen.insert(coset.clone()) {
            out.push(coset);
        }
    }
    Ok(out)
}
