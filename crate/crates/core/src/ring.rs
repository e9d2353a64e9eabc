//! Black-box finite rings with exact query accounting.
//!
//! Every ring element is an opaque fixed-width byte string; two elements are
//! equal iff their canonical encodings are byte-identical, and the zero
//! element has a single fixed encoding. The ring is driven exclusively
//! through [`BlackBoxRing::add`], [`BlackBoxRing::mul`] and
//! [`BlackBoxRing::neg`], each of which charges exactly one query of its kind
//! to the ring's [`QueryLedger`]. Equality and zero-recognition are free:
//! the query model charges only ring-oracle and f-oracle calls.
//!
//! Canonical encodings:
//! - `Zn`: the residue as a little-endian unsigned integer, minimal byte width;
//! - `MatF2`: the t x t matrix row-major bit-packed, bit `r*t + c` of the
//!   byte string (LSB-first within each byte);
//! - `Product`: the factor encodings concatenated.

use std::collections::HashSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound for brute-force additive-span enumeration.
pub const DEFAULT_SPAN_BOUND: usize = 1 << 20;

/// Largest supported matrix side for `MatF2`; rows are packed in one machine
/// word, which covers every reduction instance (t = 2^m with m <= 6).
pub const MAX_MATF2_SIDE: usize = 64;

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

/// An opaque ring element: a canonical fixed-width byte encoding.
///
/// Equality, ordering and hashing are all byte-wise on the encoding.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RingElement {
    bytes: Box<[u8]>,
}

impl RingElement {
    pub(crate) fn from_bytes(bytes: Vec<u8>) -> Self {
        RingElement {
            bytes: bytes.into_boxed_slice(),
        }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElement(")?;
        for b in self.bytes.iter() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

// ---------------------------------------------------------------------------
// Ring kinds
// ---------------------------------------------------------------------------

/// Structure of a concrete ring instantiation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum RingKind {
    /// Integers modulo n.
    Zn { n: u64 },
    /// t x t matrices over GF(2).
    MatF2 { t: usize },
    /// Componentwise product of factor rings.
    Product { factors: Vec<RingKind> },
}

impl RingKind {
    fn validate_spec(&self) -> Result<()> {
        match self {
            RingKind::Zn { n } => {
                if *n == 0 {
                    return Err(Error::InvalidRingSpec("Zn requires n >= 1".into()));
                }
            }
            RingKind::MatF2 { t } => {
                if *t == 0 || *t > MAX_MATF2_SIDE {
                    return Err(Error::InvalidRingSpec(format!(
                        "MatF2 requires 1 <= t <= {MAX_MATF2_SIDE}, got {t}"
                    )));
                }
            }
            RingKind::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidRingSpec(
                        "Product requires at least one factor".into(),
                    ));
                }
                for f in factors {
                    f.validate_spec()?;
                }
            }
        }
        Ok(())
    }

    /// Width of the canonical encoding in bytes.
    pub fn width_bytes(&self) -> usize {
        match self {
            RingKind::Zn { n } => {
                let bits = 64 - (n - 1).leading_zeros() as usize;
                bits.div_ceil(8).max(1)
            }
            RingKind::MatF2 { t } => (t * t).div_ceil(8),
            RingKind::Product { factors } => factors.iter().map(|f| f.width_bytes()).sum(),
        }
    }

    /// Width of the canonical encoding in bits (the `n` of `{0,1}^n`).
    pub fn width_bits(&self) -> usize {
        self.width_bytes() * 8
    }

    fn validate_bytes(&self, bytes: &[u8]) -> Result<()> {
        if bytes.len() != self.width_bytes() {
            return Err(Error::InvalidElement(format!(
                "expected {} bytes, got {}",
                self.width_bytes(),
                bytes.len()
            )));
        }
        match self {
            RingKind::Zn { n } => {
                let v = decode_le(bytes);
                if v >= *n {
                    return Err(Error::InvalidElement(format!("residue {v} >= modulus {n}")));
                }
            }
            RingKind::MatF2 { t } => {
                let used = t * t;
                for i in used..bytes.len() * 8 {
                    if get_bit(bytes, i) {
                        return Err(Error::InvalidElement(format!(
                            "padding bit {i} set in MatF2 encoding"
                        )));
                    }
                }
            }
            RingKind::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let w = f.width_bytes();
                    f.validate_bytes(&bytes[off..off + w])?;
                    off += w;
                }
            }
        }
        Ok(())
    }

    fn zero_bytes(&self) -> Vec<u8> {
        vec![0u8; self.width_bytes()]
    }

    fn add_bytes(&self, a: &[u8], b: &[u8], out: &mut [u8]) {
        match self {
            RingKind::Zn { n } => {
                let s = (decode_le(a) as u128 + decode_le(b) as u128) % *n as u128;
                encode_le(s as u64, out);
            }
            RingKind::MatF2 { .. } => {
                for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(b.iter())) {
                    *o = x ^ y;
                }
            }
            RingKind::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let w = f.width_bytes();
                    f.add_bytes(&a[off..off + w], &b[off..off + w], &mut out[off..off + w]);
                    off += w;
                }
            }
        }
    }

    fn mul_bytes(&self, a: &[u8], b: &[u8], out: &mut [u8]) {
        match self {
            RingKind::Zn { n } => {
                let p = (decode_le(a) as u128 * decode_le(b) as u128) % *n as u128;
                encode_le(p as u64, out);
            }
            RingKind::MatF2 { t } => {
                let ra = decode_matf2_rows(*t, a);
                let rb = decode_matf2_rows(*t, b);
                let mut rows = vec![0u64; *t];
                for (row, &a_row) in rows.iter_mut().zip(ra.iter()) {
                    let mut acc = 0u64;
                    let mut bits = a_row;
                    while bits != 0 {
                        let j = bits.trailing_zeros() as usize;
                        acc ^= rb[j];
                        bits &= bits - 1;
                    }
                    *row = acc;
                }
                encode_matf2_rows(*t, &rows, out);
            }
            RingKind::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let w = f.width_bytes();
                    f.mul_bytes(&a[off..off + w], &b[off..off + w], &mut out[off..off + w]);
                    off += w;
                }
            }
        }
    }

    fn neg_bytes(&self, a: &[u8], out: &mut [u8]) {
        match self {
            RingKind::Zn { n } => {
                let v = decode_le(a);
                encode_le(if v == 0 { 0 } else { n - v }, out);
            }
            // Characteristic 2: negation is the identity.
            RingKind::MatF2 { .. } => out.copy_from_slice(a),
            RingKind::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let w = f.width_bytes();
                    f.neg_bytes(&a[off..off + w], &mut out[off..off + w]);
                    off += w;
                }
            }
        }
    }

    fn random_bytes<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u8]) {
        match self {
            RingKind::Zn { n } => encode_le(rng.random_range(0..*n), out),
            RingKind::MatF2 { t } => {
                out.fill(0);
                for i in 0..t * t {
                    if rng.random_bool(0.5) {
                        set_bit(out, i);
                    }
                }
            }
            RingKind::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let w = f.width_bytes();
                    f.random_bytes(rng, &mut out[off..off + w]);
                    off += w;
                }
            }
        }
    }
}

fn decode_le(bytes: &[u8]) -> u64 {
    let mut v = 0u64;
    for (i, b) in bytes.iter().enumerate() {
        v |= (*b as u64) << (8 * i);
    }
    v
}

fn encode_le(v: u64, out: &mut [u8]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = (v >> (8 * i)) as u8;
    }
}

pub(crate) fn get_bit(bytes: &[u8], i: usize) -> bool {
    (bytes[i >> 3] >> (i & 7)) & 1 == 1
}

pub(crate) fn set_bit(bytes: &mut [u8], i: usize) {
    bytes[i >> 3] |= 1 << (i & 7);
}

fn decode_matf2_rows(t: usize, bytes: &[u8]) -> Vec<u64> {
    let mut rows = vec![0u64; t];
    for (r, row) in rows.iter_mut().enumerate() {
        for c in 0..t {
            if get_bit(bytes, r * t + c) {
                *row |= 1 << c;
            }
        }
    }
    rows
}

fn encode_matf2_rows(t: usize, rows: &[u64], out: &mut [u8]) {
    out.fill(0);
    for (r, row) in rows.iter().enumerate() {
        for c in 0..t {
            if (row >> c) & 1 == 1 {
                set_bit(out, r * t + c);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Query ledger
// ---------------------------------------------------------------------------

/// Snapshot of the per-oracle query counters.
///
/// Counters are monotonically non-decreasing within a session; snapshots are
/// exact, and [`QueryLedger::delta_since`] gives the exact per-call cost of
/// whatever ran between two snapshots.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub add_count: u64,
    pub mul_count: u64,
    pub neg_count: u64,
    pub f_eval_count: u64,
}

impl QueryLedger {
    /// Exact counter deltas relative to an earlier snapshot of the same ring.
    ///
    /// Panics if `earlier` is not actually earlier (counters only grow).
    pub fn delta_since(&self, earlier: &QueryLedger) -> QueryLedger {
        QueryLedger {
            add_count: self.add_count - earlier.add_count,
            mul_count: self.mul_count - earlier.mul_count,
            neg_count: self.neg_count - earlier.neg_count,
            f_eval_count: self.f_eval_count - earlier.f_eval_count,
        }
    }

    /// Ring-oracle accesses under the walk's cost accounting: adds and muls.
    /// Fused subtraction charges its negation to `neg_count` only, so a
    /// subtract-then-add walk move costs exactly 2 accesses here.
    pub fn ring_accesses(&self) -> u64 {
        self.add_count + self.mul_count
    }

    /// Combine per-session ledgers (counter-wise sum), for parallel sessions
    /// running on [`BlackBoxRing::fresh_session`] rings.
    pub fn merged(&self, other: &QueryLedger) -> QueryLedger {
        QueryLedger {
            add_count: self.add_count + other.add_count,
            mul_count: self.mul_count + other.mul_count,
            neg_count: self.neg_count + other.neg_count,
            f_eval_count: self.f_eval_count + other.f_eval_count,
        }
    }

    pub fn total_queries(&self) -> u64 {
        self.add_count + self.mul_count + self.neg_count + self.f_eval_count
    }
}

#[derive(Default)]
struct LedgerCells {
    add: AtomicU64,
    mul: AtomicU64,
    neg: AtomicU64,
    f_eval: AtomicU64,
}

// ---------------------------------------------------------------------------
// The black-box ring
// ---------------------------------------------------------------------------

/// A concrete finite ring driven through the query-counted oracle interface.
///
/// Ring values are immutable and freely shareable; the ledger is the only
/// mutable state. Either one session owns the ring exclusively, or concurrent
/// sessions use [`BlackBoxRing::fresh_session`] rings and merge snapshots.
pub struct BlackBoxRing {
    kind: RingKind,
    width_bytes: usize,
    ledger: LedgerCells,
}

impl fmt::Debug for BlackBoxRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxRing")
            .field("kind", &self.kind)
            .field("ledger", &self.ledger_snapshot())
            .finish()
    }
}

impl BlackBoxRing {
    pub fn new(kind: RingKind) -> Result<Self> {
        kind.validate_spec()?;
        let width_bytes = kind.width_bytes();
        Ok(BlackBoxRing {
            kind,
            width_bytes,
            ledger: LedgerCells::default(),
        })
    }

    pub fn zn(n: u64) -> Result<Self> {
        Self::new(RingKind::Zn { n })
    }

    pub fn mat_f2(t: usize) -> Result<Self> {
        Self::new(RingKind::MatF2 { t })
    }

    pub fn product(factors: Vec<RingKind>) -> Result<Self> {
        Self::new(RingKind::Product { factors })
    }

    pub fn kind(&self) -> &RingKind {
        &self.kind
    }

    pub fn width_bytes(&self) -> usize {
        self.width_bytes
    }

    /// Same ring, fresh ledger: for per-session accounting.
    pub fn fresh_session(&self) -> BlackBoxRing {
        BlackBoxRing {
            kind: self.kind.clone(),
            width_bytes: self.width_bytes,
            ledger: LedgerCells::default(),
        }
    }

    /// The fixed canonical encoding of zero (all-zero bytes in every kind).
    pub fn zero(&self) -> RingElement {
        RingElement::from_bytes(self.kind.zero_bytes())
    }

    /// Free equality test on canonical encodings.
    pub fn eq(&self, a: &RingElement, b: &RingElement) -> bool {
        a == b
    }

    /// Free zero test.
    pub fn is_zero(&self, a: &RingElement) -> bool {
        a.bytes.iter().all(|&b| b == 0)
    }

    pub fn validate(&self, a: &RingElement) -> Result<()> {
        self.kind.validate_bytes(&a.bytes)
    }

    /// Construct an element from raw canonical bytes, failing loudly on
    /// malformed encodings.
    pub fn element_from_bytes(&self, bytes: &[u8]) -> Result<RingElement> {
        self.kind.validate_bytes(bytes)?;
        Ok(RingElement::from_bytes(bytes.to_vec()))
    }

    /// a + b; charges exactly one addition query.
    pub fn add(&self, a: &RingElement, b: &RingElement) -> Result<RingElement> {
        let out = self.add_unmetered(a, b)?;
        self.ledger.add.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }

    /// a * b; charges exactly one multiplication query.
    pub fn mul(&self, a: &RingElement, b: &RingElement) -> Result<RingElement> {
        let out = self.mul_unmetered(a, b)?;
        self.ledger.mul.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }

    /// -a; charges exactly one negation query.
    pub fn neg(&self, a: &RingElement) -> Result<RingElement> {
        let out = self.neg_unmetered(a)?;
        self.ledger.neg.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }

    /// a - b as a fused negate-and-add.
    ///
    /// Charged as a single addition access (the walk's accounting treats a
    /// subtraction as one oracle access); the negation is still recorded in
    /// `neg_count` so raw counts stay honest.
    pub fn sub(&self, a: &RingElement, b: &RingElement) -> Result<RingElement> {
        let nb = self.neg_unmetered(b)?;
        let out = self.add_unmetered(a, &nb)?;
        self.ledger.add.fetch_add(1, Ordering::Relaxed);
        self.ledger.neg.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }

    pub(crate) fn add_unmetered(&self, a: &RingElement, b: &RingElement) -> Result<RingElement> {
        self.kind.validate_bytes(&a.bytes)?;
        self.kind.validate_bytes(&b.bytes)?;
        let mut out = vec![0u8; self.width_bytes];
        self.kind.add_bytes(&a.bytes, &b.bytes, &mut out);
        Ok(RingElement::from_bytes(out))
    }

    pub(crate) fn mul_unmetered(&self, a: &RingElement, b: &RingElement) -> Result<RingElement> {
        self.kind.validate_bytes(&a.bytes)?;
        self.kind.validate_bytes(&b.bytes)?;
        let mut out = vec![0u8; self.width_bytes];
        self.kind.mul_bytes(&a.bytes, &b.bytes, &mut out);
        Ok(RingElement::from_bytes(out))
    }

    pub(crate) fn neg_unmetered(&self, a: &RingElement) -> Result<RingElement> {
        self.kind.validate_bytes(&a.bytes)?;
        let mut out = vec![0u8; self.width_bytes];
        self.kind.neg_bytes(&a.bytes, &mut out);
        Ok(RingElement::from_bytes(out))
    }

    pub(crate) fn record_f_eval(&self) {
        self.ledger.f_eval.fetch_add(1, Ordering::Relaxed);
    }

    /// Immutable copy of the current counters.
    pub fn ledger_snapshot(&self) -> QueryLedger {
        QueryLedger {
            add_count: self.ledger.add.load(Ordering::Relaxed),
            mul_count: self.ledger.mul.load(Ordering::Relaxed),
            neg_count: self.ledger.neg.load(Ordering::Relaxed),
            f_eval_count: self.ledger.f_eval.load(Ordering::Relaxed),
        }
    }

    /// Uniformly random element; test and experiment utility, not an oracle
    /// call (no query charged).
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> RingElement {
        let mut out = vec![0u8; self.width_bytes];
        self.kind.random_bytes(rng, &mut out);
        RingElement::from_bytes(out)
    }

    /// All elements of the ring itself (not of a generated subgroup), bounded.
    /// Only well-defined for desk-scale rings.
    pub fn enumerate_all(&self, bound: usize) -> Result<Vec<RingElement>> {
        fn order(kind: &RingKind) -> Option<u128> {
            match kind {
                RingKind::Zn { n } => Some(*n as u128),
                RingKind::MatF2 { t } => 1u128.checked_shl((t * t) as u32),
                RingKind::Product { factors } => {
                    let mut acc: u128 = 1;
                    for f in factors {
                        acc = acc.checked_mul(order(f)?)?;
                    }
                    Some(acc)
                }
            }
        }
        let size = order(&self.kind).ok_or(Error::SpanTooLarge { bound })?;
        if size > bound as u128 {
            return Err(Error::SpanTooLarge { bound });
        }
        let mut out = Vec::with_capacity(size as usize);
        let mut buf = self.kind.zero_bytes();
        enumerate_rec(&self.kind, &mut buf, &mut out);
        fn enumerate_rec(kind: &RingKind, buf: &mut [u8], out: &mut Vec<RingElement>) {
            // Enumerate by counting through each factor's value range.
            match kind {
                RingKind::Zn { n } => {
                    for v in 0..*n {
                        encode_le(v, buf);
                        out.push(RingElement::from_bytes(buf.to_vec()));
                    }
                }
                RingKind::MatF2 { t } => {
                    let bits = t * t;
                    for v in 0..(1u128 << bits) {
                        buf.fill(0);
                        for i in 0..bits {
                            if (v >> i) & 1 == 1 {
                                set_bit(buf, i);
                            }
                        }
                        out.push(RingElement::from_bytes(buf.to_vec()));
                    }
                }
                RingKind::Product { factors } => {
                    let mut parts: Vec<Vec<RingElement>> = Vec::new();
                    for f in factors {
                        let mut sub = Vec::new();
                        let mut fbuf = f.zero_bytes();
                        enumerate_rec(f, &mut fbuf, &mut sub);
                        parts.push(sub);
                    }
                    let mut acc: Vec<Vec<u8>> = vec![Vec::new()];
                    for part in &parts {
                        let mut next = Vec::with_capacity(acc.len() * part.len());
                        for prefix in &acc {
                            for e in part {
                                let mut v = prefix.clone();
                                v.extend_from_slice(e.bytes());
                                next.push(v);
                            }
                        }
                        acc = next;
                    }
                    out.extend(acc.into_iter().map(RingElement::from_bytes));
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Additive bases
// ---------------------------------------------------------------------------

/// An additive generating sequence `(r_1, ..., r_k)`, canonicalized so that
/// `r_1` is the zero element (prepended when absent) and the generators are
/// pairwise distinct.
#[derive(Clone, Debug)]
pub struct AdditiveBasis {
    elements: Vec<RingElement>,
    zero_prepended: bool,
    duplicates_removed: usize,
}

impl AdditiveBasis {
    pub fn new(ring: &BlackBoxRing, generators: Vec<RingElement>) -> Result<Self> {
        for g in &generators {
            ring.validate(g)?;
        }
        let before = generators.len();
        let mut seen = HashSet::new();
        let mut elements: Vec<RingElement> = Vec::with_capacity(before + 1);
        for g in generators {
            if seen.insert(g.clone()) {
                elements.push(g);
            }
        }
        let duplicates_removed = before - elements.len();
        let zero = ring.zero();
        let zero_prepended = match elements.iter().position(|e| *e == zero) {
            Some(pos) => {
                // The samplers assume r_1 = 0; move it to the front.
                elements.remove(pos);
                elements.insert(0, zero);
                false
            }
            None => {
                elements.insert(0, zero);
                true
            }
        };
        Ok(AdditiveBasis {
            elements,
            zero_prepended,
            duplicates_removed,
        })
    }

    /// Number of generators k (zero included).
    pub fn k(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[RingElement] {
        &self.elements
    }

    pub fn generator(&self, i: usize) -> Result<&RingElement> {
        self.elements.get(i).ok_or_else(|| {
            Error::InvalidIndex(format!("generator {i} out of range [0, {})", self.k()))
        })
    }

    /// Whether canonicalization had to insert the zero element.
    pub fn zero_prepended(&self) -> bool {
        self.zero_prepended
    }

    pub fn duplicates_removed(&self) -> usize {
        self.duplicates_removed
    }
}

/// Sum of the generators indexed by `u`, using exactly `|u| - 1` addition
/// queries. `u` must be a nonempty set of distinct indices into the basis.
pub fn subset_sum(ring: &BlackBoxRing, basis: &AdditiveBasis, u: &[usize]) -> Result<RingElement> {
    if u.is_empty() {
        return Err(Error::InvalidIndex(
            "subset_sum requires a nonempty index set".into(),
        ));
    }
    let mut seen = HashSet::new();
    for &i in u {
        if i >= basis.k() {
            return Err(Error::InvalidIndex(format!(
                "index {i} out of range [0, {})",
                basis.k()
            )));
        }
        if !seen.insert(i) {
            return Err(Error::InvalidIndex(format!("index {i} repeated in subset")));
        }
    }
    let mut acc = basis.generator(u[0])?.clone();
    for &i in &u[1..] {
        acc = ring.add(&acc, basis.generator(i)?)?;
    }
    Ok(acc)
}

/// Exact additive closure of the generators: BFS over repeated addition until
/// fixpoint, starting from zero. Verification-only brute force.
pub fn enumerate_additive_span(
    ring: &BlackBoxRing,
    generators: &[RingElement],
    bound: usize,
) -> Result<Vec<RingElement>> {
    let mut seen: HashSet<RingElement> = HashSet::new();
    let mut frontier = vec![ring.zero()];
    seen.insert(ring.zero());
    while let Some(cur) = frontier.pop() {
        for g in generators {
            let next = ring.add(&cur, g)?;
            if seen.insert(next.clone()) {
                if seen.len() > bound {
                    return Err(Error::SpanTooLarge { bound });
                }
                frontier.push(next);
            }
        }
    }
    let mut out: Vec<RingElement> = seen.into_iter().collect();
    out.sort();
    Ok(out)
}
