//! Multilinear polynomials over a black-box ring.
//!
//! A polynomial is a signed sum of terms; each term is an ordered sequence of
//! atoms, where an atom is either a ring constant or a variable. This covers
//! both plain monomial sums like the commutator `x1*x2 - x2*x1` and
//! two-sided-coefficient forms like `A*x1*...*xm*B`. Evaluation folds each
//! term left-to-right under ring multiplication, so noncommuting variables
//! come for free; in commuting mode nothing is reordered either, since
//! commutativity is a property of the ring instance, not of the syntax.
//!
//! As a black box, one evaluation costs exactly one `f_eval` query; the ring
//! work inside the box is not charged to the add/mul counters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{BlackBoxRing, RingElement};

/// A point of `R^m`.
pub type Assignment = Vec<RingElement>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableMode {
    Commuting,
    Noncommuting,
}

/// One multiplicand of a term: a ring constant or a variable index in `[0, m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Const(RingElement),
    Var(usize),
}

/// A signed product of atoms. The empty atom list is forbidden; use an
/// explicit `Const(zero)` instead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub sign: i8,
    pub atoms: Vec<Atom>,
}

impl Term {
    pub fn new(sign: i8, atoms: Vec<Atom>) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidTerm(format!(
                "sign must be +1 or -1, got {sign}"
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidTerm(
                "empty atom list; use Const(zero)".into(),
            ));
        }
        Ok(Term { sign, atoms })
    }

    /// Variable indices in order of appearance (repeats preserved).
    pub fn var_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Var(i) => Some(*i),
            Atom::Const(_) => None,
        })
    }
}

/// A polynomial over `R` in `m` (commuting or noncommuting) variables.
///
/// Construction checks arity bounds but deliberately admits terms that repeat
/// a variable, so that [`MultilinearPolynomial::is_multilinear`] is a real
/// check; the testers require multilinearity and reject anything else.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilinearPolynomial {
    m: usize,
    mode: VariableMode,
    terms: Vec<Term>,
}

impl MultilinearPolynomial {
    pub fn new(m: usize, mode: VariableMode, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            // re-validate: Term fields are public, so literals bypass Term::new
            if t.sign != 1 && t.sign != -1 {
                return Err(Error::InvalidTerm(format!(
                    "sign must be +1 or -1, got {}",
                    t.sign
                )));
            }
            if t.atoms.is_empty() {
                return Err(Error::InvalidTerm(
                    "empty atom list; use Const(zero)".into(),
                ));
            }
            for i in t.var_indices() {
                if i >= m {
                    return Err(Error::InvalidTerm(format!(
                        "variable index {i} out of range [0, {m})"
                    )));
                }
            }
        }
        Ok(MultilinearPolynomial { m, mode, terms })
    }

    pub fn arity(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> VariableMode {
        self.mode
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// True iff no term repeats a variable (degree <= 1 per variable per
    /// monomial). Constant-only polynomials are vacuously multilinear.
    pub fn is_multilinear(&self) -> bool {
        self.terms.iter().all(|t| {
            let mut seen = vec![false; self.m];
            t.var_indices()
                .all(|i| !std::mem::replace(&mut seen[i], true))
        })
    }

    /// `f(x1, x2) = x1*x2 - x2*x1` in noncommuting mode.
    pub fn commutator() -> Self {
        MultilinearPolynomial {
            m: 2,
            mode: VariableMode::Noncommuting,
            terms: vec![
                Term {
                    sign: 1,
                    atoms: vec![Atom::Var(0), Atom::Var(1)],
                },
                Term {
                    sign: -1,
                    atoms: vec![Atom::Var(1), Atom::Var(0)],
                },
            ],
        }
    }

    /// Evaluate at a point of `R^m`, charging exactly one `f_eval` query.
    ///
    /// The internal ring arithmetic is unmetered: the f-oracle is opaque.
    pub fn evaluate(&self, ring: &BlackBoxRing, point: &[RingElement]) -> Result<RingElement> {
        if point.len() != self.m {
            return Err(Error::Arity {
                expected: self.m,
                got: point.len(),
            });
        }
        for v in point {
            ring.validate(v)?;
        }
        let mut acc = ring.zero();
        for term in &self.terms {
            let mut prod: Option<RingElement> = None;
            for atom in &term.atoms {
                let factor = match atom {
                    Atom::Const(c) => c,
                    Atom::Var(i) => &point[*i],
                };
                prod = Some(match prod {
                    None => factor.clone(),
                    Some(p) => ring.mul_unmetered(&p, factor)?,
                });
            }
            let value = prod.expect("terms are nonempty by construction");
            acc = if term.sign >= 0 {
                ring.add_unmetered(&acc, &value)?
            } else {
                let neg = ring.neg_unmetered(&value)?;
                ring.add_unmetered(&acc, &neg)?
            };
        }
        ring.record_f_eval();
        Ok(acc)
    }

    /// Testable form of the coordinate decomposition `f = A + B` with `A`
    /// collecting every monomial that contains `x_i`:
    /// checks `f(a+b, rest) = f(a, rest) + f(b, rest) - f(0, rest)`.
    ///
    /// The combination arithmetic on the left/right sides is caller-side ring
    /// work and is charged normally; the four evaluations cost 4 `f_eval`s.
    pub fn coordinate_additivity_check(
        &self,
        ring: &BlackBoxRing,
        coord: usize,
        a: &RingElement,
        b: &RingElement,
        rest: &[RingElement],
    ) -> Result<bool> {
        if coord >= self.m {
            return Err(Error::Arity {
                expected: self.m,
                got: coord + 1,
            });
        }
        if rest.len() != self.m - 1 {
            return Err(Error::Arity {
                expected: self.m - 1,
                got: rest.len(),
            });
        }
        let with = |x: &RingElement| -> Vec<RingElement> {
            let mut point = Vec::with_capacity(self.m);
            point.extend_from_slice(&rest[..coord]);
            point.push(x.clone());
            point.extend_from_slice(&rest[coord..]);
            point
        };
        let sum = ring.add(a, b)?;
        let lhs = self.evaluate(ring, &with(&sum))?;
        let fa = self.evaluate(ring, &with(a))?;
        let fb = self.evaluate(ring, &with(b))?;
        let f0 = self.evaluate(ring, &with(&ring.zero()))?;
        let rhs = ring.sub(&ring.add(&fa, &fb)?, &f0)?;
        Ok(ring.eq(&lhs, &rhs))
    }
}
