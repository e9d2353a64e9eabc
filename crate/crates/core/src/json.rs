//! Wire formats: ring specs, element literals, polynomials, instance files.
//!
//! Ring specs are tagged objects (`{"type":"Zn","n":6}`, `{"type":"MatF2",
//! "t":4}`, `{"type":"Product","factors":[...]}`). Element literals depend on
//! the ring: an integer for `Zn`, a row-major bit string of length t*t for
//! `MatF2`, an array of factor literals for products. A polynomial carries
//! 1-based variable indices and constants as element literals. An
//! identity-testing instance file bundles ring, generator literals and
//! polynomial; a split-collision instance file is `{"k":4,"m":2,"f":[2,1,2,4]}`
//! with a 1-based table. The compiled reduction serializes to the former, so
//! tester commands consume reduction outputs unchanged.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::poly::{Atom, MultilinearPolynomial, Term, VariableMode};
use crate::reduction::{ReductionOutput, SplitCollisionInstance};
use crate::ring::{AdditiveBasis, BlackBoxRing, RingElement, RingKind};
use crate::Frac;

// ---------------------------------------------------------------------------
// Generic helpers
// ---------------------------------------------------------------------------

/// Parse a JSON document, reporting syntax errors with line and column.
pub fn value_from_str(s: &str) -> Result<Value> {
    serde_json::from_str(s)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

/// Deserialize with field-path context on schema violations.
pub fn from_value<T: DeserializeOwned>(v: Value) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        detail: e.inner().to_string(),
    })
}

fn u128_value(x: u128) -> Value {
    match u64::try_from(x) {
        Ok(v) => json!(v),
        Err(_) => json!(x.to_string()),
    }
}

/// Exact rational as `{"num": ..., "den": ...}`.
pub fn frac_to_json(f: &Frac) -> Value {
    json!({ "num": u128_value(*f.numer()), "den": u128_value(*f.denom()) })
}

/// Exact rational as the CSV-friendly string `num/den`.
pub fn frac_to_string(f: &Frac) -> String {
    format!("{}/{}", f.numer(), f.denom())
}

// ---------------------------------------------------------------------------
// Element literals
// ---------------------------------------------------------------------------

fn element_bytes_from_json(kind: &RingKind, v: &Value, out: &mut Vec<u8>) -> Result<()> {
    match kind {
        RingKind::Zn { n } => {
            let raw = v.as_u64().ok_or_else(|| Error::Schema {
                path: "element".into(),
                detail: format!("Zn literal must be an unsigned integer, got {v}"),
            })?;
            if raw >= *n {
                return Err(Error::InvalidElement(format!(
                    "residue {raw} >= modulus {n}"
                )));
            }
            let width = kind.width_bytes();
            let start = out.len();
            out.resize(start + width, 0);
            for i in 0..width {
                out[start + i] = (raw >> (8 * i)) as u8;
            }
        }
        RingKind::MatF2 { t } => {
            let s = v.as_str().ok_or_else(|| Error::Schema {
                path: "element".into(),
                detail: format!("MatF2 literal must be a bit string, got {v}"),
            })?;
            if s.len() != t * t || !s.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::InvalidElement(format!(
                    "MatF2 literal must be {} bits of 0/1, got {:?}",
                    t * t,
                    s
                )));
            }
            let width = kind.width_bytes();
            let start = out.len();
            out.resize(start + width, 0);
            for (i, b) in s.bytes().enumerate() {
                if b == b'1' {
                    out[start + (i >> 3)] |= 1 << (i & 7);
                }
            }
        }
        RingKind::Product { factors } => {
            let arr = v.as_array().ok_or_else(|| Error::Schema {
                path: "element".into(),
                detail: format!("Product literal must be an array, got {v}"),
            })?;
            if arr.len() != factors.len() {
                return Err(Error::InvalidElement(format!(
                    "Product literal has {} components, expected {}",
                    arr.len(),
                    factors.len()
                )));
            }
            for (f, comp) in factors.iter().zip(arr) {
                element_bytes_from_json(f, comp, out)?;
            }
        }
    }
    Ok(())
}

fn element_json_from_bytes(kind: &RingKind, bytes: &[u8]) -> Value {
    match kind {
        RingKind::Zn { .. } => {
            let mut v = 0u64;
            for (i, b) in bytes.iter().enumerate() {
                v |= (*b as u64) << (8 * i);
            }
            json!(v)
        }
        RingKind::MatF2 { t } => {
            let s: String = (0..t * t)
                .map(|i| {
                    if (bytes[i >> 3] >> (i & 7)) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            json!(s)
        }
        RingKind::Product { factors } => {
            let mut off = 0;
            let comps: Vec<Value> = factors
                .iter()
                .map(|f| {
                    let w = f.width_bytes();
                    let v = element_json_from_bytes(f, &bytes[off..off + w]);
                    off += w;
                    v
                })
                .collect();
            Value::Array(comps)
        }
    }
}

/// Parse an element literal for a ring.
pub fn element_from_json(ring: &BlackBoxRing, v: &Value) -> Result<RingElement> {
    let mut bytes = Vec::with_capacity(ring.width_bytes());
    element_bytes_from_json(ring.kind(), v, &mut bytes)?;
    ring.element_from_bytes(&bytes)
}

/// Canonical literal of an element.
pub fn element_to_json(ring: &BlackBoxRing, el: &RingElement) -> Value {
    element_json_from_bytes(ring.kind(), el.bytes())
}

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PolyJson {
    m: usize,
    mode: VariableMode,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    sign: i8,
    atoms: Vec<Value>,
}

/// Parse a polynomial (variable indices are 1-based on the wire).
pub fn polynomial_from_json(ring: &BlackBoxRing, v: &Value) -> Result<MultilinearPolynomial> {
    let raw: PolyJson = from_value(v.clone())?;
    let mut terms = Vec::with_capacity(raw.terms.len());
    for (ti, t) in raw.terms.iter().enumerate() {
        let mut atoms = Vec::with_capacity(t.atoms.len());
        for (ai, a) in t.atoms.iter().enumerate() {
            let obj = a.as_object().ok_or_else(|| Error::Schema {
                path: format!("terms[{ti}].atoms[{ai}]"),
                detail: "atom must be an object with a `var` or `const` field".into(),
            })?;
            match (obj.get("var"), obj.get("const")) {
                (Some(idx), None) => {
                    let one_based = idx.as_u64().ok_or_else(|| Error::Schema {
                        path: format!("terms[{ti}].atoms[{ai}].var"),
                        detail: "variable index must be a positive integer".into(),
                    })?;
                    if one_based == 0 {
                        return Err(Error::Schema {
                            path: format!("terms[{ti}].atoms[{ai}].var"),
                            detail: "variable indices are 1-based".into(),
                        });
                    }
                    atoms.push(Atom::Var(one_based as usize - 1));
                }
                (None, Some(lit)) => atoms.push(Atom::Const(element_from_json(ring, lit)?)),
                _ => {
                    return Err(Error::Schema {
                        path: format!("terms[{ti}].atoms[{ai}]"),
                        detail: "atom must have exactly one of `var` or `const`".into(),
                    })
                }
            }
        }
        terms.push(Term::new(t.sign, atoms)?);
    }
    MultilinearPolynomial::new(raw.m, raw.mode, terms)
}

/// Serialize a polynomial (variable indices 1-based on the wire).
pub fn polynomial_to_json(ring: &BlackBoxRing, f: &MultilinearPolynomial) -> Value {
    let terms: Vec<Value> = f
        .terms()
        .iter()
        .map(|t| {
            let atoms: Vec<Value> = t
                .atoms
                .iter()
                .map(|a| match a {
                    Atom::Var(i) => json!({ "var": i + 1 }),
                    Atom::Const(c) => json!({ "const": element_to_json(ring, c) }),
                })
                .collect();
            json!({ "sign": t.sign, "atoms": atoms })
        })
        .collect();
    json!({ "m": f.arity(), "mode": f.mode(), "terms": terms })
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

/// An identity-testing instance: ring, generators, polynomial.
#[derive(Debug)]
pub struct MitInstance {
    pub ring: BlackBoxRing,
    pub basis: AdditiveBasis,
    pub polynomial: MultilinearPolynomial,
}

#[derive(Serialize, Deserialize)]
struct MitInstanceJson {
    ring: RingKind,
    generators: Vec<Value>,
    polynomial: Value,
}

pub fn mit_instance_from_json(v: &Value) -> Result<MitInstance> {
    let raw: MitInstanceJson = from_value(v.clone())?;
    let ring = BlackBoxRing::new(raw.ring)?;
    let generators: Vec<RingElement> = raw
        .generators
        .iter()
        .map(|g| element_from_json(&ring, g))
        .collect::<Result<_>>()?;
    let basis = AdditiveBasis::new(&ring, generators)?;
    let polynomial = polynomial_from_json(&ring, &raw.polynomial)?;
    Ok(MitInstance {
        ring,
        basis,
        polynomial,
    })
}

pub fn mit_instance_to_json(inst: &MitInstance) -> Value {
    json!({
        "ring": inst.ring.kind(),
        "generators": inst.basis.elements().iter()
            .map(|g| element_to_json(&inst.ring, g)).collect::<Vec<_>>(),
        "polynomial": polynomial_to_json(&inst.ring, &inst.polynomial),
    })
}

/// The compiled reduction as an instance file the testers consume unchanged.
pub fn reduction_to_mit_json(out: &ReductionOutput) -> Value {
    json!({
        "ring": out.ring.kind(),
        "generators": out.generators.iter()
            .map(|g| element_to_json(&out.ring, g)).collect::<Vec<_>>(),
        "polynomial": polynomial_to_json(&out.ring, &out.polynomial),
        "metadata": {
            "source": { "k": out.instance.k, "m": out.instance.m, "f": out.instance.f },
            "t": out.t,
            "clash_slots": out.clash_slots,
        },
    })
}

/// Either kind of instance file.
#[derive(Debug)]
pub enum InstanceFile {
    Mit(Box<MitInstance>),
    SplitCollision(SplitCollisionInstance),
}

/// Parse an instance file of either kind: split-collision files are bare
/// `{k, m, f}` objects, identity-testing files carry a `ring` field.
pub fn parse_instance_str(s: &str) -> Result<InstanceFile> {
    let v = value_from_str(s)?;
    let obj = v.as_object().ok_or_else(|| Error::Schema {
        path: ".".into(),
        detail: "instance file must be a JSON object".into(),
    })?;
    if obj.contains_key("ring") {
        Ok(InstanceFile::Mit(Box::new(mit_instance_from_json(&v)?)))
    } else {
        let raw: SplitCollisionInstance = from_value(v)?;
        raw.validate()?;
        Ok(InstanceFile::SplitCollision(raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{build_instance, ClashRule};

    #[test]
    fn ring_spec_round_trip() {
        for spec in [
            r#"{"type":"Zn","n":6}"#,
            r#"{"type":"MatF2","t":4}"#,
            r#"{"type":"Product","factors":[{"type":"Zn","n":6},{"type":"MatF2","t":2}]}"#,
        ] {
            let kind: RingKind = from_value(value_from_str(spec).unwrap()).unwrap();
            let back = serde_json::to_value(&kind).unwrap();
            let again: RingKind = from_value(back).unwrap();
            assert_eq!(kind, again);
        }
    }

    #[test]
    fn element_literals_round_trip() {
        let ring = BlackBoxRing::zn(6).unwrap();
        let el = element_from_json(&ring, &json!(4)).unwrap();
        assert_eq!(element_to_json(&ring, &el), json!(4));
        assert!(element_from_json(&ring, &json!(6)).is_err());

        let m = BlackBoxRing::mat_f2(2).unwrap();
        let el = element_from_json(&m, &json!("0110")).unwrap();
        assert_eq!(element_to_json(&m, &el), json!("0110"));
        assert!(element_from_json(&m, &json!("01")).is_err());

        let p =
            BlackBoxRing::product(vec![RingKind::Zn { n: 6 }, RingKind::MatF2 { t: 2 }]).unwrap();
        let el = element_from_json(&p, &json!([3, "1001"])).unwrap();
        assert_eq!(element_to_json(&p, &el), json!([3, "1001"]));
    }

    #[test]
    fn commutator_polynomial_wire_format() {
        let ring = BlackBoxRing::zn(6).unwrap();
        let text = r#"{"m":2,"mode":"noncommuting","terms":[
            {"sign":1,"atoms":[{"var":1},{"var":2}]},
            {"sign":-1,"atoms":[{"var":2},{"var":1}]}]}"#;
        let f = polynomial_from_json(&ring, &value_from_str(text).unwrap()).unwrap();
        assert_eq!(f, MultilinearPolynomial::commutator());
        let back = polynomial_to_json(&ring, &f);
        let f2 = polynomial_from_json(&ring, &back).unwrap();
        assert_eq!(f, f2);
    }

    #[test]
    fn instance_file_round_trip_and_dispatch() {
        let text = r#"{
            "ring": {"type":"Zn","n":6},
            "generators": [0, 1],
            "polynomial": {"m":2,"mode":"noncommuting","terms":[
                {"sign":1,"atoms":[{"var":1},{"var":2}]},
                {"sign":-1,"atoms":[{"var":2},{"var":1}]}]}
        }"#;
        let parsed = parse_instance_str(text).unwrap();
        let mit = match parsed {
            InstanceFile::Mit(m) => m,
            _ => panic!("expected an identity-testing instance"),
        };
        let emitted = mit_instance_to_json(&mit);
        let reparsed = match parse_instance_str(&emitted.to_string()).unwrap() {
            InstanceFile::Mit(m) => m,
            _ => unreachable!(),
        };
        // canonical re-emit is byte-identical
        assert_eq!(
            emitted.to_string(),
            mit_instance_to_json(&reparsed).to_string()
        );

        let split = parse_instance_str(r#"{"k":4,"m":2,"f":[2,1,2,4]}"#).unwrap();
        assert!(matches!(split, InstanceFile::SplitCollision(_)));
    }

    #[test]
    fn split_instance_schema_errors() {
        // zero entry: the domain is 1-based
        let err = parse_instance_str(r#"{"k":4,"m":2,"f":[0,1,2,4]}"#).unwrap_err();
        assert!(matches!(err, Error::MalformedInstance(_)));
        // field-path context on type errors
        let err = parse_instance_str(r#"{"k":4,"m":2,"f":"nope"}"#).unwrap_err();
        match err {
            Error::Schema { path, .. } => assert!(path.contains('f'), "path was {path}"),
            other => panic!("expected schema error, got {other:?}"),
        }
        // syntax error carries location
        assert!(matches!(parse_instance_str("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn reduction_serializes_to_consumable_instance() {
        let inst = SplitCollisionInstance::new(4, 2, vec![2, 1, 2, 4]).unwrap();
        let out = build_instance(&inst, ClashRule::IntervalMarkWins).unwrap();
        let v = reduction_to_mit_json(&out);
        let mit = match parse_instance_str(&v.to_string()).unwrap() {
            InstanceFile::Mit(m) => m,
            _ => panic!(),
        };
        // zero joins the generator list during canonicalization
        assert_eq!(mit.basis.k(), 5);
        assert!(mit.basis.zero_prepended());
        assert_eq!(mit.polynomial.arity(), 2);
    }

    #[test]
    fn frac_rendering() {
        let f = Frac::new(6, 11);
        assert_eq!(frac_to_json(&f), json!({"num": 6, "den": 11}));
        assert_eq!(frac_to_string(&f), "6/11");
    }
}
