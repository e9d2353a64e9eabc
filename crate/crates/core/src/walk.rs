//! Lazy random walk on l-subsets of `[k]` with incremental subsum
//! maintenance.
//!
//! The walk graph is the Johnson graph J(k, l): vertices are the size-l
//! subsets, edges join subsets differing in one element, so the graph is
//! l(k-l)-regular. The walk holds with probability 1/2 (transition matrix
//! `A = (I + P)/2`, spectral gap exactly half of P's); a move swaps one
//! member for one non-member and repairs the cached subsum with a fused
//! subtraction plus one addition - 2 oracle accesses, never a recomputation.
//!
//! Over `m` coordinates the product walk is just `m` independent copies;
//! a step therefore costs at most `2m` accesses, exactly 2 per moved
//! coordinate.

use itertools::Itertools;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::MultilinearPolynomial;
use crate::ring::{subset_sum, AdditiveBasis, BlackBoxRing, QueryLedger, RingElement};
use crate::rng::WalkRng;

/// Default cap on C(k, l) for dense spectral work.
pub const DEFAULT_MATRIX_CAP: usize = 2048;

/// One coordinate of the walk: a sorted l-subset with its cached subsum.
#[derive(Clone, Debug)]
pub struct SubsetState {
    indices: Vec<usize>,
    sum: RingElement,
}

impl SubsetState {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn sum(&self) -> &RingElement {
        &self.sum
    }

    /// Recompute the subsum from scratch and compare with the cache.
    /// Uses unmetered arithmetic so verification does not disturb ledgers.
    pub fn verify_cached_sum(&self, ring: &BlackBoxRing, basis: &AdditiveBasis) -> Result<bool> {
        let mut acc = ring.zero();
        for &i in &self.indices {
            acc = ring.add_unmetered(&acc, basis.generator(i)?)?;
        }
        Ok(ring.eq(&acc, &self.sum))
    }
}

/// The full m-coordinate walk configuration.
#[derive(Clone, Debug)]
pub struct WalkState {
    coords: Vec<SubsetState>,
    k: usize,
    ell: usize,
}

impl WalkState {
    pub fn coords(&self) -> &[SubsetState] {
        &self.coords
    }

    pub fn m(&self) -> usize {
        self.coords.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// The m cached subsums, in coordinate order.
    pub fn sums(&self) -> Vec<RingElement> {
        self.coords.iter().map(|c| c.sum.clone()).collect()
    }
}

/// Uniform initial state: each coordinate an independent uniform l-subset,
/// sums computed with exactly `m * (l - 1)` addition queries.
pub fn init_uniform(
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
    ell: usize,
    m: usize,
    rng: &mut WalkRng,
) -> Result<WalkState> {
    let k = basis.k();
    if ell == 0 || ell > k {
        return Err(Error::InvalidIndex(format!(
            "l = {ell} outside [1, k = {k}]"
        )));
    }
    let mut coords = Vec::with_capacity(m);
    for _ in 0..m {
        let mut indices: Vec<usize> = rand::seq::index::sample(rng, k, ell).into_vec();
        indices.sort_unstable();
        let sum = subset_sum(ring, basis, &indices)?;
        coords.push(SubsetState { indices, sum });
    }
    Ok(WalkState { coords, k, ell })
}

/// One lazy step of every coordinate; returns how many coordinates moved.
///
/// A held coordinate costs nothing. A moved coordinate swaps a uniformly
/// chosen member for a uniformly chosen non-member, repairing the sum via
/// `sum - r_out + r_in`: 2 charged accesses (the subtraction's negation is
/// recorded separately).
pub fn step(
    state: &mut WalkState,
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
    rng: &mut WalkRng,
) -> Result<usize> {
    let k = state.k;
    let ell = state.ell;
    let mut moved = 0usize;
    for coord in &mut state.coords {
        if rng.random_bool(0.5) {
            continue; // hold
        }
        if ell == k {
            // J(k, k) has a single vertex; the walk is pinned.
            continue;
        }
        let out_pos = rng.random_range(0..ell);
        let complement: Vec<usize> = (0..k)
            .filter(|i| coord.indices.binary_search(i).is_err())
            .collect();
        let incoming = complement[rng.random_range(0..complement.len())];
        let outgoing = coord.indices[out_pos];
        let without = ring.sub(&coord.sum, basis.generator(outgoing)?)?;
        coord.sum = ring.add(&without, basis.generator(incoming)?)?;
        coord.indices[out_pos] = incoming;
        coord.indices.sort_unstable();
        moved += 1;
    }
    Ok(moved)
}

/// Marked-state predicate: `f` evaluated at the cached subsums is nonzero.
/// Costs exactly one f-eval.
pub fn is_marked(
    state: &WalkState,
    f: &MultilinearPolynomial,
    ring: &BlackBoxRing,
) -> Result<bool> {
    if f.arity() != state.m() {
        return Err(Error::Arity {
            expected: f.arity(),
            got: state.m(),
        });
    }
    let value = f.evaluate(ring, &state.sums())?;
    Ok(!ring.is_zero(&value))
}

/// Outcome of a classical walk search.
#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    /// Step index at which a marked state was first seen (0 = initial state);
    /// `None` on timeout.
    pub hit_step: Option<u64>,
    /// Walk steps actually taken.
    pub steps_taken: u64,
    pub ledger_delta: QueryLedger,
    /// The marked point (the m subsums) on a hit; rendered by callers that
    /// know the ring's literal format.
    #[serde(skip)]
    pub witness: Option<Vec<RingElement>>,
}

/// Classical analogue of the quantized search: walk until marked or give up.
/// A timeout is a verdict, not an error.
pub fn classical_search(
    f: &MultilinearPolynomial,
    ring: &BlackBoxRing,
    basis: &AdditiveBasis,
    ell: usize,
    max_steps: u64,
    rng: &mut WalkRng,
) -> Result<SearchOutcome> {
    let before = ring.ledger_snapshot();
    let mut state = init_uniform(ring, basis, ell, f.arity(), rng)?;
    if is_marked(&state, f, ring)? {
        return Ok(SearchOutcome {
            hit_step: Some(0),
            steps_taken: 0,
            ledger_delta: ring.ledger_snapshot().delta_since(&before),
            witness: Some(state.sums()),
        });
    }
    for s in 1..=max_steps {
        step(&mut state, ring, basis, rng)?;
        if is_marked(&state, f, ring)? {
            return Ok(SearchOutcome {
                hit_step: Some(s),
                steps_taken: s,
                ledger_delta: ring.ledger_snapshot().delta_since(&before),
                witness: Some(state.sums()),
            });
        }
    }
    Ok(SearchOutcome {
        hit_step: None,
        steps_taken: max_steps,
        ledger_delta: ring.ledger_snapshot().delta_since(&before),
        witness: None,
    })
}

// ---------------------------------------------------------------------------
// Spectral structure
// ---------------------------------------------------------------------------

/// The size-l subsets of `[k]` in lexicographic order: the vertex enumeration
/// every dense matrix in this module indexes by.
pub fn johnson_vertices(k: usize, ell: usize) -> Vec<Vec<usize>> {
    (0..k).combinations(ell).collect()
}

/// Normalized adjacency matrix of J(k, l):
/// `P[X][Y] = 1/(l(k-l))` iff `|X cap Y| = l - 1`.
pub fn johnson_transition_matrix(k: usize, ell: usize, cap: usize) -> Result<DMatrix<f64>> {
    if ell == 0 || ell > k {
        return Err(Error::InvalidIndex(format!(
            "l = {ell} outside [1, k = {k}]"
        )));
    }
    let verts = johnson_vertices(k, ell);
    let n = verts.len();
    if n > cap {
        return Err(Error::MatrixTooLarge { dim: n, cap });
    }
    let degree = (ell * (k - ell)) as f64;
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let inter = intersection_size(&verts[i], &verts[j]);
            if inter == ell - 1 {
                p[(i, j)] = 1.0 / degree;
                p[(j, i)] = 1.0 / degree;
            }
        }
    }
    Ok(p)
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Walk matrices of J(k, l): the chain `P`, its lazy version `A = (I+P)/2`,
/// and their numerically computed spectral gaps (`delta_hat = delta / 2`).
#[derive(Clone, Debug)]
pub struct WalkMatrices {
    pub p: DMatrix<f64>,
    pub lazy: DMatrix<f64>,
    pub delta: f64,
    pub delta_hat: f64,
}

impl WalkMatrices {
    pub fn johnson(k: usize, ell: usize, cap: usize) -> Result<Self> {
        let p = johnson_transition_matrix(k, ell, cap)?;
        let n = p.nrows();
        let lazy = (DMatrix::<f64>::identity(n, n) + &p) * 0.5;
        let delta = numeric_gap(&p)?;
        Ok(WalkMatrices {
            p,
            lazy,
            delta,
            delta_hat: delta / 2.0,
        })
    }
}

/// `1 - lambda_2` for a symmetric stochastic matrix, by dense symmetric
/// eigendecomposition. The top eigenvalue must be 1 within 1e-9.
pub fn numeric_gap(p: &DMatrix<f64>) -> Result<f64> {
    let eig = SymmetricEigen::new(p.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    if vals.len() < 2 {
        return Err(Error::NotApplicable(
            "chain has a single state; gap undefined".into(),
        ));
    }
    if (vals[0] - 1.0).abs() > 1e-9 {
        return Err(Error::NotApplicable(format!(
            "top eigenvalue {} is not 1: matrix is not stochastic",
            vals[0]
        )));
    }
    Ok(1.0 - vals[1])
}

/// Closed-form spectral gap of J(k, l): `delta = k / (l(k-l))`.
///
/// From the Johnson eigenvalues `lambda_j = ((l-j)(k-l-j) - j) / (l(k-l))`,
/// which decrease in j, so `delta = 1 - lambda_1`. For l = 1 the graph is
/// complete and the value exceeds 1 (second eigenvalue `-1/(k-1)`).
pub fn spectral_gap_exact(k: usize, ell: usize) -> f64 {
    assert!(ell >= 1 && ell < k, "requires 1 <= l < k");
    k as f64 / (ell * (k - ell)) as f64
}

/// Exact and numeric spectral data for one (k, l).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectralGap {
    pub k: usize,
    pub ell: usize,
    pub delta_exact: f64,
    pub delta_numeric: f64,
    pub delta_hat_exact: f64,
    pub delta_hat_numeric: f64,
    /// The walk analysis bound `delta_hat >= 1/(2l)` (valid for l <= k/2).
    pub bound_half_inv_ell: f64,
}

pub fn spectral_gap(k: usize, ell: usize, cap: usize) -> Result<SpectralGap> {
    if ell == 0 || ell >= k {
        return Err(Error::InvalidIndex(format!(
            "l = {ell} outside [1, k-1 = {}]",
            k.max(1) - 1
        )));
    }
    let exact = spectral_gap_exact(k, ell);
    let p = johnson_transition_matrix(k, ell, cap)?;
    let numeric = numeric_gap(&p)?;
    Ok(SpectralGap {
        k,
        ell,
        delta_exact: exact,
        delta_numeric: numeric,
        delta_hat_exact: exact / 2.0,
        delta_hat_numeric: numeric / 2.0,
        bound_half_inv_ell: 1.0 / (2.0 * ell as f64),
    })
}
