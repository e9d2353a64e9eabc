//! From split-collision search to matrix-ring identity testing.
//!
//! An instance is a function table `f : [k] -> [k]` with the domain cut into
//! `m` consecutive equal intervals. The compilation tags each domain point
//! `i` with a k-tuple of transition matrices of the subset automaton (the
//! DFA accepting exactly the words in which every interval letter `b_j`
//! occurs): slot `i` carries the own-position letter `b`, slot `f(i)` the
//! interval letter `b_j` for `i` in interval j, every other slot the filler
//! `c`. The polynomial `P = A * x_1 ... x_m * B` then evaluates nonzero on a
//! generator tuple exactly when some slot's letter word is accepted.
//!
//! Two ground-truth predicates are provided and deliberately kept apart:
//!
//! - [`has_split_collision`]: some range element with *exactly one* preimage
//!   in each interval (`|f^-1(v)| = m`);
//! - [`has_covering_collision`]: some range element with *at least one*
//!   preimage in each interval.
//!
//! The matrix construction decides the covering predicate: a slot word can
//! collect all m letters whenever every interval reaches the value, whether
//! or not extra preimages exist. The two predicates agree on every instance
//! whose covering fibers have size exactly m (in particular under the usual
//! collision promise), and [`verify_equivalence`] reports both comparisons.
//!
//! On the clash `f(i) = i`, the interval letter wins slot i. The alternative
//! (keeping `b`, which acts as the identity matrix) hides the interval hit
//! and provably breaks the reduction; `ClashRule::OwnPositionWins` is kept
//! only so tests can demonstrate the disagreement.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Atom, MultilinearPolynomial, Term, VariableMode};
use crate::ring::{enumerate_additive_span, BlackBoxRing, RingElement, RingKind};
use crate::rng::WalkRng;
use crate::Frac;

/// Cap on automaton size: 2^12 states.
pub const MAX_AUTOMATON_M: usize = 12;
/// Cap on reduction arity: t = 2^m must fit the matrix ring (t <= 64).
pub const MAX_REDUCTION_M: usize = 6;
/// Cap on span enumeration for the full-span cross-check (2^k sums).
pub const DEFAULT_REDUCTION_SPAN_CAP: usize = 1 << 12;

// ---------------------------------------------------------------------------
// Alphabet and automaton
// ---------------------------------------------------------------------------

/// Alphabet of the subset automaton: the own-position letter `b`, the filler
/// `c`, and one interval letter `b_j` per interval (j is 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    OwnPosition,
    Filler,
    IntervalMark(usize),
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::OwnPosition => write!(f, "b"),
            Letter::Filler => write!(f, "c"),
            Letter::IntervalMark(j) => write!(f, "b{j}"),
        }
    }
}

impl Letter {
    /// Parse "b", "c", or "b<j>".
    pub fn parse(s: &str) -> Result<Letter> {
        match s {
            "b" => Ok(Letter::OwnPosition),
            "c" => Ok(Letter::Filler),
            _ => {
                if let Some(rest) = s.strip_prefix('b') {
                    if let Ok(j) = rest.parse::<usize>() {
                        if j >= 1 {
                            return Ok(Letter::IntervalMark(j));
                        }
                    }
                }
                Err(Error::UnknownLetter(s.to_string()))
            }
        }
    }
}

/// The DFA over subsets of `[m]` accepting words in which every interval
/// letter occurs at least once.
///
/// States are subset bitmasks `0 .. 2^m - 1`; the canonical 1-based
/// relabeling `S -> 1 + sum_{j in S} 2^(j-1)` makes 1 the initial state and
/// `t = 2^m` the single final state.
#[derive(Clone, Copy, Debug)]
pub struct SubsetAutomaton {
    m: usize,
}

impl SubsetAutomaton {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_AUTOMATON_M {
            return Err(Error::MTooLarge {
                m,
                cap: MAX_AUTOMATON_M,
            });
        }
        Ok(SubsetAutomaton { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// t = 2^m.
    pub fn num_states(&self) -> usize {
        1 << self.m
    }

    /// Initial state: the empty subset (canonical label 1).
    pub fn initial(&self) -> usize {
        0
    }

    /// Final state: the full subset (canonical label t).
    pub fn accepting(&self) -> usize {
        self.num_states() - 1
    }

    /// Canonical 1-based label of a state bitmask.
    pub fn canonical_label(&self, state: usize) -> usize {
        state + 1
    }

    /// One transition. Letters outside the alphabet are rejected.
    pub fn step(&self, state: usize, letter: Letter) -> Result<usize> {
        debug_assert!(state < self.num_states());
        match letter {
            Letter::OwnPosition | Letter::Filler => Ok(state),
            Letter::IntervalMark(j) if j >= 1 && j <= self.m => Ok(state | (1 << (j - 1))),
            Letter::IntervalMark(j) => {
                Err(Error::UnknownLetter(format!("b{j} with m = {}", self.m)))
            }
        }
    }

    /// Direct run of the automaton on a word.
    pub fn accepts(&self, word: &[Letter]) -> Result<bool> {
        let mut state = self.initial();
        for &a in word {
            state = self.step(state, a)?;
        }
        Ok(state == self.accepting())
    }
}

// ---------------------------------------------------------------------------
// Transition matrices
// ---------------------------------------------------------------------------

/// Dense t x t matrix over GF(2), bit-packed 64 columns per word.
///
/// Letter matrices are row-functional (exactly one 1 per row: the adjacency
/// of a function graph), and products of row-functional matrices stay
/// row-functional; the multiplication here is nonetheless a real GF(2)
/// matrix product, so acceptance checks through matrix entries stay an
/// independent route from direct automaton runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    t: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl TransitionMatrix {
    pub fn zero(t: usize) -> Self {
        let words_per_row = t.div_ceil(64);
        TransitionMatrix {
            t,
            words_per_row,
            bits: vec![0; t * words_per_row],
        }
    }

    pub fn identity(t: usize) -> Self {
        let mut m = Self::zero(t);
        for i in 0..t {
            m.set(i, i);
        }
        m
    }

    /// Adjacency matrix of a function graph: row q has its single 1 at
    /// `images[q]`.
    pub fn from_function(images: &[usize]) -> Self {
        let t = images.len();
        let mut m = Self::zero(t);
        for (q, &q2) in images.iter().enumerate() {
            assert!(q2 < t, "image out of range");
            m.set(q, q2);
        }
        m
    }

    pub fn t(&self) -> usize {
        self.t
    }

    fn set(&mut self, r: usize, c: usize) {
        self.bits[r * self.words_per_row + (c >> 6)] |= 1u64 << (c & 63);
    }

    pub fn entry(&self, r: usize, c: usize) -> bool {
        (self.bits[r * self.words_per_row + (c >> 6)] >> (c & 63)) & 1 == 1
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// GF(2) matrix product.
    pub fn mul(&self, other: &TransitionMatrix) -> TransitionMatrix {
        assert_eq!(self.t, other.t, "dimension mismatch");
        let mut out = TransitionMatrix::zero(self.t);
        for r in 0..self.t {
            let mut acc = vec![0u64; self.words_per_row];
            for (w, &word) in self.row(r).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let j = (w << 6) + bits.trailing_zeros() as usize;
                    for (a, &b) in acc.iter_mut().zip(other.row(j)) {
                        *a ^= b;
                    }
                    bits &= bits - 1;
                }
            }
            out.bits[r * self.words_per_row..(r + 1) * self.words_per_row].copy_from_slice(&acc);
        }
        out
    }

    /// `Some(images)` iff every row has exactly one 1.
    pub fn row_function(&self) -> Option<Vec<usize>> {
        let mut images = Vec::with_capacity(self.t);
        for r in 0..self.t {
            let mut found = None;
            for (w, &word) in self.row(r).iter().enumerate() {
                if word != 0 {
                    if word.count_ones() != 1 || found.is_some() {
                        return None;
                    }
                    found = Some((w << 6) + word.trailing_zeros() as usize);
                }
            }
            images.push(found?);
        }
        Some(images)
    }

    /// Canonical `MatF2` ring encoding (row-major bit-packed).
    pub fn to_matf2_bytes(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; (self.t * self.t).div_ceil(8)];
        for r in 0..self.t {
            for c in 0..self.t {
                if self.entry(r, c) {
                    crate::ring::set_bit(&mut bytes, r * self.t + c);
                }
            }
        }
        bytes
    }
}

/// Transition matrix of one letter: `M_a(q, q') = 1` iff `delta_a(q) = q'`.
pub fn letter_matrix(aut: &SubsetAutomaton, letter: Letter) -> Result<TransitionMatrix> {
    let t = aut.num_states();
    let images: Vec<usize> = (0..t).map(|q| aut.step(q, letter)).collect::<Result<_>>()?;
    Ok(TransitionMatrix::from_function(&images))
}

/// Product `M_{w_1} ... M_{w_n}`; the empty word gives the identity matrix.
/// `M_w(initial, accepting) = 1` iff the automaton accepts `w`.
pub fn word_matrix(aut: &SubsetAutomaton, word: &[Letter]) -> Result<TransitionMatrix> {
    let mut acc = TransitionMatrix::identity(aut.num_states());
    for &a in word {
        acc = acc.mul(&letter_matrix(aut, a)?);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// A function table `f : [k] -> [k]` (1-based values) with `m` consecutive
/// equal-sized intervals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCollisionInstance {
    pub k: usize,
    pub m: usize,
    /// `f[i]` is the image of domain point `i + 1`, as a value in `[1, k]`.
    pub f: Vec<usize>,
}

impl SplitCollisionInstance {
    pub fn new(k: usize, m: usize, f: Vec<usize>) -> Result<Self> {
        let inst = SplitCollisionInstance { k, m, f };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::MalformedInstance("k and m must be >= 1".into()));
        }
        if !self.k.is_multiple_of(self.m) {
            return Err(Error::MalformedInstance(format!(
                "k = {} is not a multiple of m = {}",
                self.k, self.m
            )));
        }
        if self.f.len() != self.k {
            return Err(Error::MalformedInstance(format!(
                "table has {} entries, expected k = {}",
                self.f.len(),
                self.k
            )));
        }
        if let Some(&bad) = self.f.iter().find(|&&v| v < 1 || v > self.k) {
            return Err(Error::MalformedInstance(format!(
                "table value {bad} outside the 1-based domain [1, {}]",
                self.k
            )));
        }
        Ok(())
    }

    /// Interval size n = k/m.
    pub fn interval_size(&self) -> usize {
        self.k / self.m
    }

    /// 1-based interval index of a 1-based domain point.
    pub fn interval_of(&self, i: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.k);
        (i - 1) / self.interval_size() + 1
    }

    /// Preimage of a 1-based value, as 1-based domain points.
    pub fn preimage(&self, v: usize) -> Vec<usize> {
        (1..=self.k).filter(|&i| self.f[i - 1] == v).collect()
    }
}

/// Exactly one preimage in each interval (so `|f^-1(v)| = m`).
pub fn has_split_collision(inst: &SplitCollisionInstance) -> bool {
    (1..=inst.k).any(|v| {
        let pre = inst.preimage(v);
        pre.len() == inst.m
            && (1..=inst.m).all(|j| pre.iter().filter(|&&i| inst.interval_of(i) == j).count() == 1)
    })
}

/// At least one preimage in each interval: the predicate the matrix
/// construction decides.
pub fn has_covering_collision(inst: &SplitCollisionInstance) -> bool {
    (1..=inst.k).any(|v| {
        let pre = inst.preimage(v);
        (1..=inst.m).all(|j| pre.iter().any(|&i| inst.interval_of(i) == j))
    })
}

/// Resolution of the slot clash at fixed points `f(i) = i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ClashRule {
    /// Slot i carries `b_j`. Required for correctness.
    #[default]
    IntervalMarkWins,
    /// Slot i keeps `b`. Breaks the reduction; kept for the regression test
    /// that documents the disagreement.
    OwnPositionWins,
}

/// The compiled instance: ring, generators, coefficients and polynomial.
#[derive(Debug)]
pub struct ReductionOutput {
    pub instance: SplitCollisionInstance,
    /// k-fold product of t x t GF(2) matrix rings, t = 2^m.
    pub ring: BlackBoxRing,
    pub t: usize,
    /// One generator per domain point, in domain order.
    pub generators: Vec<RingElement>,
    /// Coefficient tuples (A, ..., A) and (B, ..., B).
    pub a_bar: RingElement,
    pub b_bar: RingElement,
    /// `P(x_1, ..., x_m) = A_bar * x_1 ... x_m * B_bar`.
    pub polynomial: MultilinearPolynomial,
    /// 1-based fixed points `f(i) = i` where the clash rule fired.
    pub clash_slots: Vec<usize>,
    pub rule: ClashRule,
}

/// Per-slot letter of generator i (both 1-based): `b` at slot i, `b_j` at
/// slot `f(i)`, filler elsewhere; the clash rule decides slot i when
/// `f(i) = i`.
pub fn generator_letter(
    inst: &SplitCollisionInstance,
    rule: ClashRule,
    i: usize,
    slot: usize,
) -> Letter {
    let fi = inst.f[i - 1];
    let j = inst.interval_of(i);
    if slot == fi && slot == i {
        match rule {
            ClashRule::IntervalMarkWins => Letter::IntervalMark(j),
            ClashRule::OwnPositionWins => Letter::OwnPosition,
        }
    } else if slot == i {
        Letter::OwnPosition
    } else if slot == fi {
        Letter::IntervalMark(j)
    } else {
        Letter::Filler
    }
}

/// Compile a split-collision instance into an identity-testing instance.
pub fn build_instance(inst: &SplitCollisionInstance, rule: ClashRule) -> Result<ReductionOutput> {
    inst.validate()?;
    if inst.m > MAX_REDUCTION_M {
        return Err(Error::MTooLarge {
            m: inst.m,
            cap: MAX_REDUCTION_M,
        });
    }
    let aut = SubsetAutomaton::new(inst.m)?;
    let t = aut.num_states();
    let ring = BlackBoxRing::product(vec![RingKind::MatF2 { t }; inst.k])?;

    let letters = {
        let mut map = std::collections::HashMap::new();
        map.insert(
            Letter::OwnPosition,
            letter_matrix(&aut, Letter::OwnPosition)?,
        );
        map.insert(Letter::Filler, letter_matrix(&aut, Letter::Filler)?);
        for j in 1..=inst.m {
            map.insert(
                Letter::IntervalMark(j),
                letter_matrix(&aut, Letter::IntervalMark(j))?,
            );
        }
        map
    };

    let slot_width = RingKind::MatF2 { t }.width_bytes();
    let mut generators = Vec::with_capacity(inst.k);
    for i in 1..=inst.k {
        let mut bytes = Vec::with_capacity(inst.k * slot_width);
        for slot in 1..=inst.k {
            let letter = generator_letter(inst, rule, i, slot);
            bytes.extend_from_slice(&letters[&letter].to_matf2_bytes());
        }
        generators.push(ring.element_from_bytes(&bytes)?);
    }

    let mut a = TransitionMatrix::zero(t);
    a.set(0, 0);
    let mut b = TransitionMatrix::zero(t);
    b.set(t - 1, 0);
    let tuple_of = |m: &TransitionMatrix| -> Result<RingElement> {
        let mut bytes = Vec::with_capacity(inst.k * slot_width);
        for _ in 0..inst.k {
            bytes.extend_from_slice(&m.to_matf2_bytes());
        }
        ring.element_from_bytes(&bytes)
    };
    let a_bar = tuple_of(&a)?;
    let b_bar = tuple_of(&b)?;

    let mut atoms = Vec::with_capacity(inst.m + 2);
    atoms.push(Atom::Const(a_bar.clone()));
    for v in 0..inst.m {
        atoms.push(Atom::Var(v));
    }
    atoms.push(Atom::Const(b_bar.clone()));
    let polynomial = MultilinearPolynomial::new(
        inst.m,
        VariableMode::Noncommuting,
        vec![Term::new(1, atoms)?],
    )?;

    let clash_slots: Vec<usize> = (1..=inst.k).filter(|&i| inst.f[i - 1] == i).collect();
    Ok(ReductionOutput {
        instance: inst.clone(),
        ring,
        t,
        generators,
        a_bar,
        b_bar,
        polynomial,
        clash_slots,
        rule,
    })
}

// ---------------------------------------------------------------------------
// Equivalence verification
// ---------------------------------------------------------------------------

/// Side-by-side verdicts of the compiled instance and the brute-force
/// predicates.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub k: usize,
    pub m: usize,
    /// P vanishes on every generator m-tuple.
    pub identity_on_generators: bool,
    /// 1-based generator indices of the first violating tuple, if any.
    pub witness: Option<Vec<usize>>,
    pub exact_split: bool,
    pub covering: bool,
    /// Reduction verdict (violated) vs covering predicate: the equivalence
    /// that holds unconditionally.
    pub matches_covering: bool,
    /// Reduction verdict vs the exact predicate: agrees whenever every
    /// covering fiber has size exactly m.
    pub matches_exact: bool,
    /// P vanishes on every m-tuple over the whole GF(2) span (only when the
    /// span check ran).
    pub identity_on_span: Option<bool>,
    pub generator_equals_span: Option<bool>,
}

/// Evaluate P over all `k^m` generator tuples; with `span_check`, also over
/// every m-tuple of the full additive span of the generators (distributivity
/// makes the two verdicts provably equal; the check is the brute-force
/// confirmation).
pub fn verify_equivalence(
    inst: &SplitCollisionInstance,
    rule: ClashRule,
    span_check: bool,
    cap: u128,
) -> Result<EquivalenceReport> {
    let out = build_instance(inst, rule)?;
    let (identity_on_generators, witness) = identity_on_tuples(&out, &out.generators, cap, true)?;
    let mut identity_on_span = None;
    if span_check {
        let span = enumerate_additive_span(&out.ring, &out.generators, DEFAULT_REDUCTION_SPAN_CAP)?;
        let (span_identity, _) = identity_on_tuples(&out, &span, cap, false)?;
        identity_on_span = Some(span_identity);
    }
    let exact_split = has_split_collision(inst);
    let covering = has_covering_collision(inst);
    let violated = !identity_on_generators;
    Ok(EquivalenceReport {
        k: inst.k,
        m: inst.m,
        identity_on_generators,
        witness,
        exact_split,
        covering,
        matches_covering: violated == covering,
        matches_exact: violated == exact_split,
        identity_on_span,
        generator_equals_span: identity_on_span.map(|s| s == identity_on_generators),
    })
}

fn identity_on_tuples(
    out: &ReductionOutput,
    pool: &[RingElement],
    cap: u128,
    track_witness: bool,
) -> Result<(bool, Option<Vec<usize>>)> {
    let m = out.instance.m;
    let total = (pool.len() as u128)
        .checked_pow(m as u32)
        .ok_or(Error::EnumerationTooLarge {
            size: u128::MAX,
            cap,
        })?;
    if total > cap {
        return Err(Error::EnumerationTooLarge { size: total, cap });
    }
    let mut digits = vec![0usize; m];
    loop {
        let point: Vec<RingElement> = digits.iter().map(|&i| pool[i].clone()).collect();
        let value = out.polynomial.evaluate(&out.ring, &point)?;
        if !out.ring.is_zero(&value) {
            let witness = track_witness.then(|| digits.iter().map(|&i| i + 1).collect());
            return Ok((false, witness));
        }
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok((true, None));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < pool.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// The randomized lift
// ---------------------------------------------------------------------------

/// Random equal-sized m-partition of the domain, relabeled so the parts
/// become consecutive intervals: the reduction from plain m-collision search.
///
/// The returned instance is `g(p) = f(pi(p))` where `pi` maps the j-th
/// interval onto the j-th sampled part (sorted within each part, so the
/// instance is a deterministic function of the sampled partition).
pub fn random_partition_lift(
    f: &[usize],
    m: usize,
    rng: &mut WalkRng,
) -> Result<SplitCollisionInstance> {
    let k = f.len();
    if m == 0 || k == 0 || !k.is_multiple_of(m) {
        return Err(Error::MalformedInstance(format!(
            "k = {k} not a positive multiple of m = {m}"
        )));
    }
    if let Some(&bad) = f.iter().find(|&&v| v < 1 || v > k) {
        return Err(Error::MalformedInstance(format!(
            "table value {bad} outside [1, {k}]"
        )));
    }
    let n = k / m;
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let mut table = Vec::with_capacity(k);
    for part in 0..m {
        let mut members: Vec<usize> = order[part * n..(part + 1) * n].to_vec();
        members.sort_unstable();
        for old in members {
            table.push(f[old]);
        }
    }
    SplitCollisionInstance::new(k, m, table)
}

/// Closed-form probability that a planted size-m fiber is split by a uniform
/// equal m-partition: sequential placement gives
/// `prod_{j=1}^{m-1} (m-j) n / (k-j)` with `n = k/m`.
pub fn split_probability_closed_form(k: usize, m: usize) -> Result<Frac> {
    if m == 0 || k == 0 || !k.is_multiple_of(m) {
        return Err(Error::MalformedInstance(format!(
            "k = {k} not a positive multiple of m = {m}"
        )));
    }
    let n = (k / m) as u128;
    let mut p = Frac::new(1, 1);
    for j in 1..m as u128 {
        p *= Frac::new((m as u128 - j) * n, k as u128 - j);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(k: usize, m: usize, f: &[usize]) -> SplitCollisionInstance {
        SplitCollisionInstance::new(k, m, f.to_vec()).unwrap()
    }

    fn word(s: &str) -> Vec<Letter> {
        s.split_whitespace()
            .map(|w| Letter::parse(w).unwrap())
            .collect()
    }

    #[test]
    fn automaton_basics() {
        let aut = SubsetAutomaton::new(2).unwrap();
        assert_eq!(aut.num_states(), 4);
        assert_eq!(aut.canonical_label(aut.initial()), 1);
        assert_eq!(aut.canonical_label(aut.accepting()), 4);
        assert!(aut.accepts(&word("b1 b2")).unwrap());
        assert!(!aut.accepts(&word("b1 c b1")).unwrap());
        assert!(!aut.accepts(&[]).unwrap());
        assert!(matches!(
            SubsetAutomaton::new(13),
            Err(Error::MTooLarge { .. })
        ));
        assert!(matches!(
            aut.accepts(&word("b3")),
            Err(Error::UnknownLetter(_))
        ));
    }

    #[test]
    fn letter_matrices_structure() {
        let aut = SubsetAutomaton::new(2).unwrap();
        let t = aut.num_states();
        assert_eq!(
            letter_matrix(&aut, Letter::Filler).unwrap(),
            TransitionMatrix::identity(t)
        );
        assert_eq!(
            letter_matrix(&aut, Letter::OwnPosition).unwrap(),
            TransitionMatrix::identity(t)
        );
        let m1 = letter_matrix(&aut, Letter::IntervalMark(1)).unwrap();
        assert_eq!(m1.mul(&m1), m1); // idempotent: inserting 1 twice
        assert!(m1.row_function().is_some());
    }

    #[test]
    fn word_matrix_empty_and_homomorphism() {
        let aut = SubsetAutomaton::new(3).unwrap();
        assert_eq!(
            word_matrix(&aut, &[]).unwrap(),
            TransitionMatrix::identity(8)
        );
        let mut rng = crate::rng::from_seed(31);
        use rand::Rng;
        let alphabet: Vec<Letter> = vec![
            Letter::OwnPosition,
            Letter::Filler,
            Letter::IntervalMark(1),
            Letter::IntervalMark(2),
            Letter::IntervalMark(3),
        ];
        for _ in 0..1000 {
            let u: Vec<Letter> = (0..rng.random_range(0..5))
                .map(|_| alphabet[rng.random_range(0..5)])
                .collect();
            let v: Vec<Letter> = (0..rng.random_range(0..5))
                .map(|_| alphabet[rng.random_range(0..5)])
                .collect();
            let mut uv = u.clone();
            uv.extend_from_slice(&v);
            let lhs = word_matrix(&aut, &uv).unwrap();
            let rhs = word_matrix(&aut, &u)
                .unwrap()
                .mul(&word_matrix(&aut, &v).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn word_matrix_entry_equals_acceptance_fuzz() {
        use rand::Rng;
        for m in 1..=4usize {
            let aut = SubsetAutomaton::new(m).unwrap();
            let mut alphabet: Vec<Letter> = vec![Letter::OwnPosition, Letter::Filler];
            alphabet.extend((1..=m).map(Letter::IntervalMark));
            let mut rng = crate::rng::from_seed(100 + m as u64);
            for _ in 0..2500 {
                let w: Vec<Letter> = (0..rng.random_range(0..=2 * m + 2))
                    .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                    .collect();
                let mat = word_matrix(&aut, &w).unwrap();
                assert!(mat.row_function().is_some());
                assert_eq!(
                    mat.entry(aut.initial(), aut.accepting()),
                    aut.accepts(&w).unwrap(),
                    "m={m}, w={w:?}"
                );
            }
        }
    }

    #[test]
    fn generator_layout_for_spec_example() {
        // f = (2, 1, 2, 4), m = 2: T_1 = (b, b1, c, c); T_3 = (c, b2, b, c)
        let inst = inst(4, 2, &[2, 1, 2, 4]);
        let expect_t1 = [
            Letter::OwnPosition,
            Letter::IntervalMark(1),
            Letter::Filler,
            Letter::Filler,
        ];
        let expect_t3 = [
            Letter::Filler,
            Letter::IntervalMark(2),
            Letter::OwnPosition,
            Letter::Filler,
        ];
        for slot in 1..=4 {
            assert_eq!(
                generator_letter(&inst, ClashRule::IntervalMarkWins, 1, slot),
                expect_t1[slot - 1]
            );
            assert_eq!(
                generator_letter(&inst, ClashRule::IntervalMarkWins, 3, slot),
                expect_t3[slot - 1]
            );
        }
        // fixed point f(4) = 4: slot 4 of T_4 carries b2 and no slot carries b
        let out = build_instance(&inst, ClashRule::IntervalMarkWins).unwrap();
        assert_eq!(out.clash_slots, vec![4]);
        assert_eq!(
            generator_letter(&inst, ClashRule::IntervalMarkWins, 4, 4),
            Letter::IntervalMark(2)
        );
    }

    #[test]
    fn coefficient_tuples_have_single_entry() {
        let out = build_instance(&inst(4, 2, &[2, 1, 2, 4]), ClashRule::IntervalMarkWins).unwrap();
        let t = out.t;
        let slot_width = (t * t).div_ceil(8);
        // every slot of a_bar is A with A[1,1] = 1 the sole nonzero
        for slot in 0..4 {
            let bytes = &out.a_bar.bytes()[slot * slot_width..(slot + 1) * slot_width];
            let ones: Vec<usize> = (0..t * t)
                .filter(|&i| (bytes[i >> 3] >> (i & 7)) & 1 == 1)
                .collect();
            assert_eq!(ones, vec![0]); // row 0, col 0
            let bytes = &out.b_bar.bytes()[slot * slot_width..(slot + 1) * slot_width];
            let ones: Vec<usize> = (0..t * t)
                .filter(|&i| (bytes[i >> 3] >> (i & 7)) & 1 == 1)
                .collect();
            assert_eq!(ones, vec![(t - 1) * t]); // row t-1, col 0
        }
    }

    #[test]
    fn split_collision_ground_truth_examples() {
        assert!(has_split_collision(&inst(4, 2, &[2, 1, 2, 4])));
        assert!(!has_split_collision(&inst(4, 2, &[2, 2, 3, 4]))); // collision inside I_1
        assert!(!has_split_collision(&inst(4, 2, &[1, 2, 3, 4]))); // permutation
    }

    #[test]
    fn covering_differs_from_exact_on_fat_fibers() {
        // constant f: every interval reaches 1, but |f^-1(1)| = 4 != m
        let c = inst(4, 2, &[1, 1, 1, 1]);
        assert!(has_covering_collision(&c));
        assert!(!has_split_collision(&c));
        let rep = verify_equivalence(&c, ClashRule::IntervalMarkWins, false, 1 << 20).unwrap();
        assert!(!rep.identity_on_generators);
        assert!(rep.matches_covering);
        assert!(!rep.matches_exact);
    }

    #[test]
    fn verified_yes_instance_end_to_end() {
        let rep = verify_equivalence(
            &inst(4, 2, &[2, 1, 2, 4]),
            ClashRule::IntervalMarkWins,
            true,
            1 << 20,
        )
        .unwrap();
        assert!(!rep.identity_on_generators);
        assert!(rep.exact_split && rep.covering);
        assert!(rep.matches_covering && rep.matches_exact);
        assert_eq!(rep.identity_on_span, Some(false));
        assert_eq!(rep.generator_equals_span, Some(true));
        // the witness tuple (T_1, T_3) should be among generator pairs; the
        // first violating tuple must re-verify
        assert!(rep.witness.is_some());
    }

    #[test]
    fn clash_rules_disagree_on_fixed_point_instance() {
        // f = (1, 4, 1, 3): split collision {1, 3} at value 1, with f(1) = 1
        let fixed = inst(4, 2, &[1, 4, 1, 3]);
        assert!(has_split_collision(&fixed));
        let primary =
            verify_equivalence(&fixed, ClashRule::IntervalMarkWins, false, 1 << 20).unwrap();
        let alternative =
            verify_equivalence(&fixed, ClashRule::OwnPositionWins, false, 1 << 20).unwrap();
        assert!(
            !primary.identity_on_generators,
            "interval-mark rule detects the collision"
        );
        assert!(
            alternative.identity_on_generators,
            "own-position rule hides the witness letter behind an identity matrix"
        );
    }

    #[test]
    fn lift_of_permutation_never_splits() {
        let f: Vec<usize> = (1..=12).collect();
        let mut rng = crate::rng::from_seed(5);
        for _ in 0..25 {
            let lifted = random_partition_lift(&f, 3, &mut rng).unwrap();
            assert!(!has_split_collision(&lifted));
            assert_eq!(lifted.interval_size(), 4);
        }
    }

    #[test]
    fn lift_preserves_fiber_multiset() {
        let f = vec![1, 1, 1, 4, 5, 6, 7, 8, 9, 10, 11, 12];
        let mut rng = crate::rng::from_seed(6);
        let lifted = random_partition_lift(&f, 3, &mut rng).unwrap();
        let mut a = f.clone();
        let mut b = lifted.f.clone();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_form_split_probability() {
        assert_eq!(
            split_probability_closed_form(12, 2).unwrap(),
            Frac::new(6, 11)
        );
        assert_eq!(
            split_probability_closed_form(12, 3).unwrap(),
            Frac::new(16, 55)
        );
        assert_eq!(
            split_probability_closed_form(4, 2).unwrap(),
            Frac::new(2, 3)
        );
    }

    #[test]
    fn malformed_instances_rejected() {
        assert!(SplitCollisionInstance::new(5, 2, vec![1, 2, 3, 4, 5]).is_err());
        assert!(SplitCollisionInstance::new(4, 2, vec![0, 1, 2, 3]).is_err());
        assert!(SplitCollisionInstance::new(4, 2, vec![1, 2, 3]).is_err());
        assert!(build_instance(&inst(14, 7, &[1; 14]), ClashRule::IntervalMarkWins).is_err());
    }
}
