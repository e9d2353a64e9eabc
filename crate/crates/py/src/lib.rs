//! Python bindings: rings, polynomials, testers, walks, cost model and the
//! split-collision reduction.
//!
//! Ring elements cross the boundary as their wire literals (int for `Zn`,
//! row-major bit string for `MatF2`, list for products), and structured
//! results come back as plain dicts mirroring the CLI report fields.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList, PyString, PyTuple};
use serde_json::{json, Value};

use mlit_core::json as wire;
use mlit_core::poly::MultilinearPolynomial;
use mlit_core::quantum;
use mlit_core::reduction::{self, ClashRule, SplitCollisionInstance};
use mlit_core::ring::{BlackBoxRing, RingElement, DEFAULT_SPAN_BOUND};
use mlit_core::testers;
use mlit_core::walk;
use mlit_core::{rng, Error, Frac};

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

// ---------------------------------------------------------------------------
// JSON bridging
// ---------------------------------------------------------------------------

fn value_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => (*b).into_pyobject(py)?.to_owned().unbind().into_any(),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.unbind().into_any()
            } else if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into_any()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .unbind()
                    .into_any()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.unbind().into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.unbind().into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, value_to_py(py, item)?)?;
            }
            dict.unbind().into_any()
        }
    })
}

fn py_to_value(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    if obj.is_none() {
        return Ok(Value::Null);
    }
    if let Ok(b) = obj.cast::<PyBool>() {
        return Ok(Value::Bool(b.is_true()));
    }
    if obj.cast::<PyInt>().is_ok() {
        if let Ok(u) = obj.extract::<u64>() {
            return Ok(json!(u));
        }
        return Ok(json!(obj.extract::<i64>()?));
    }
    if obj.cast::<PyFloat>().is_ok() {
        return Ok(json!(obj.extract::<f64>()?));
    }
    if let Ok(s) = obj.cast::<PyString>() {
        return Ok(Value::String(s.to_str()?.to_string()));
    }
    if let Ok(list) = obj.cast::<PyList>() {
        return list
            .iter()
            .map(|item| py_to_value(&item))
            .collect::<PyResult<Vec<_>>>()
            .map(Value::Array);
    }
    if let Ok(tuple) = obj.cast::<PyTuple>() {
        return tuple
            .iter()
            .map(|item| py_to_value(&item))
            .collect::<PyResult<Vec<_>>>()
            .map(Value::Array);
    }
    if let Ok(dict) = obj.cast::<PyDict>() {
        let mut map = serde_json::Map::new();
        for (k, v) in dict.iter() {
            map.insert(k.extract::<String>()?, py_to_value(&v)?);
        }
        return Ok(Value::Object(map));
    }
    Err(PyValueError::new_err(format!(
        "cannot convert {} to a wire value",
        obj.get_type()
    )))
}

fn frac_value(f: &Frac) -> Value {
    wire::frac_to_json(f)
}

// ---------------------------------------------------------------------------
// Ring and polynomial classes
// ---------------------------------------------------------------------------

/// A concrete black-box ring with its query ledger.
#[pyclass]
struct Ring {
    inner: BlackBoxRing,
}

impl Ring {
    fn parse(&self, obj: &Bound<'_, PyAny>) -> PyResult<RingElement> {
        wire::element_from_json(&self.inner, &py_to_value(obj)?).map_err(err)
    }

    fn emit(&self, py: Python<'_>, el: &RingElement) -> PyResult<Py<PyAny>> {
        value_to_py(py, &wire::element_to_json(&self.inner, el))
    }
}

#[pymethods]
impl Ring {
    /// Integers modulo n.
    #[staticmethod]
    fn zn(n: u64) -> PyResult<Self> {
        Ok(Ring {
            inner: BlackBoxRing::zn(n).map_err(err)?,
        })
    }

    /// t x t matrices over GF(2).
    #[staticmethod]
    fn mat_f2(t: usize) -> PyResult<Self> {
        Ok(Ring {
            inner: BlackBoxRing::mat_f2(t).map_err(err)?,
        })
    }

    /// Any ring from its spec, e.g. {"type": "Product", "factors": [...]}.
    #[staticmethod]
    fn from_spec(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        let kind = wire::from_value(py_to_value(spec)?).map_err(err)?;
        Ok(Ring {
            inner: BlackBoxRing::new(kind).map_err(err)?,
        })
    }

    fn spec(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        value_to_py(
            py,
            &serde_json::to_value(self.inner.kind()).expect("serializable"),
        )
    }

    fn width_bits(&self) -> usize {
        self.inner.kind().width_bits()
    }

    fn zero(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        self.emit(py, &self.inner.zero())
    }

    /// a + b (one addition query).
    fn add(
        &self,
        py: Python<'_>,
        a: &Bound<'_, PyAny>,
        b: &Bound<'_, PyAny>,
    ) -> PyResult<Py<PyAny>> {
        let out = self
            .inner
            .add(&self.parse(a)?, &self.parse(b)?)
            .map_err(err)?;
        self.emit(py, &out)
    }

    /// a * b (one multiplication query).
    fn mul(
        &self,
        py: Python<'_>,
        a: &Bound<'_, PyAny>,
        b: &Bound<'_, PyAny>,
    ) -> PyResult<Py<PyAny>> {
        let out = self
            .inner
            .mul(&self.parse(a)?, &self.parse(b)?)
            .map_err(err)?;
        self.emit(py, &out)
    }

    /// -a (one negation query).
    fn neg(&self, py: Python<'_>, a: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
        let out = self.inner.neg(&self.parse(a)?).map_err(err)?;
        self.emit(py, &out)
    }

    /// a - b (fused negate-and-add: one charged access).
    fn sub(
        &self,
        py: Python<'_>,
        a: &Bound<'_, PyAny>,
        b: &Bound<'_, PyAny>,
    ) -> PyResult<Py<PyAny>> {
        let out = self
            .inner
            .sub(&self.parse(a)?, &self.parse(b)?)
            .map_err(err)?;
        self.emit(py, &out)
    }

    fn is_zero(&self, a: &Bound<'_, PyAny>) -> PyResult<bool> {
        Ok(self.inner.is_zero(&self.parse(a)?))
    }

    fn eq(&self, a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<bool> {
        Ok(self.parse(a)? == self.parse(b)?)
    }

    /// Current query counters.
    fn ledger(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        value_to_py(
            py,
            &serde_json::to_value(self.inner.ledger_snapshot()).expect("serializable"),
        )
    }
}

/// A polynomial over a ring, in commuting or noncommuting variables.
#[pyclass]
struct Polynomial {
    inner: MultilinearPolynomial,
}

#[pymethods]
impl Polynomial {
    /// x1*x2 - x2*x1.
    #[staticmethod]
    fn commutator() -> Self {
        Polynomial {
            inner: MultilinearPolynomial::commutator(),
        }
    }

    /// Parse the wire format ({"m": ..., "mode": ..., "terms": [...]});
    /// constants are parsed against `ring`.
    #[staticmethod]
    fn from_json(ring: &Ring, obj: &Bound<'_, PyAny>) -> PyResult<Self> {
        let inner = wire::polynomial_from_json(&ring.inner, &py_to_value(obj)?).map_err(err)?;
        Ok(Polynomial { inner })
    }

    fn to_json(&self, py: Python<'_>, ring: &Ring) -> PyResult<Py<PyAny>> {
        value_to_py(py, &wire::polynomial_to_json(&ring.inner, &self.inner))
    }

    #[getter]
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    #[getter]
    fn is_multilinear(&self) -> bool {
        self.inner.is_multilinear()
    }

    /// Evaluate at a point (one f-eval query on the ring's ledger).
    fn evaluate(
        &self,
        py: Python<'_>,
        ring: &Ring,
        point: &Bound<'_, PyList>,
    ) -> PyResult<Py<PyAny>> {
        let point: Vec<RingElement> = point
            .iter()
            .map(|item| ring.parse(&item))
            .collect::<PyResult<_>>()?;
        let out = self.inner.evaluate(&ring.inner, &point).map_err(err)?;
        ring.emit(py, &out)
    }
}

// ---------------------------------------------------------------------------
// Instance plumbing shared by the tester functions
// ---------------------------------------------------------------------------

fn build_mit(
    ring_spec: &Bound<'_, PyAny>,
    generators: &Bound<'_, PyAny>,
    polynomial: &Bound<'_, PyAny>,
) -> PyResult<wire::MitInstance> {
    let bundle = json!({
        "ring": py_to_value(ring_spec)?,
        "generators": py_to_value(generators)?,
        "polynomial": py_to_value(polynomial)?,
    });
    wire::mit_instance_from_json(&bundle).map_err(err)
}

fn verdict_value(mit: &wire::MitInstance, v: &testers::TestVerdict) -> Value {
    json!({
        "verdict": v.outcome,
        "witness": v.witness.as_ref().map(|w| {
            w.iter().map(|e| wire::element_to_json(&mit.ring, e)).collect::<Vec<_>>()
        }),
        "ledger_delta": v.ledger_delta,
    })
}

// ---------------------------------------------------------------------------
// Tester functions
// ---------------------------------------------------------------------------

/// Deterministic sweep of all k^m generator tuples.
#[pyfunction]
fn deterministic_test(
    py: Python<'_>,
    ring_spec: &Bound<'_, PyAny>,
    generators: &Bound<'_, PyAny>,
    polynomial: &Bound<'_, PyAny>,
) -> PyResult<Py<PyAny>> {
    let mit = build_mit(ring_spec, generators, polynomial)?;
    let v = testers::deterministic_test(&mit.polynomial, &mit.ring, &mit.basis).map_err(err)?;
    value_to_py(py, &verdict_value(&mit, &v))
}

/// Randomized subsum tester.
#[allow(clippy::too_many_arguments)]
#[pyfunction]
#[pyo3(signature = (ring_spec, generators, polynomial, seed = 0, failure_bound = 0.01, ell = None, trials = None))]
fn randomized_test(
    py: Python<'_>,
    ring_spec: &Bound<'_, PyAny>,
    generators: &Bound<'_, PyAny>,
    polynomial: &Bound<'_, PyAny>,
    seed: u64,
    failure_bound: f64,
    ell: Option<usize>,
    trials: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let mit = build_mit(ring_spec, generators, polynomial)?;
    let cfg = testers::SamplerConfig {
        ell,
        trials,
        seed,
        failure_bound,
    };
    let v = testers::randomized_test(&mit.polynomial, &mit.ring, &mit.basis, &cfg).map_err(err)?;
    value_to_py(py, &verdict_value(&mit, &v))
}

/// Classical walk search for a violating point.
#[pyfunction]
#[pyo3(signature = (ring_spec, generators, polynomial, ell = None, max_steps = 10_000, seed = 0))]
fn classical_walk_search(
    py: Python<'_>,
    ring_spec: &Bound<'_, PyAny>,
    generators: &Bound<'_, PyAny>,
    polynomial: &Bound<'_, PyAny>,
    ell: Option<usize>,
    max_steps: u64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let mit = build_mit(ring_spec, generators, polynomial)?;
    let ell = ell.unwrap_or_else(|| (mit.basis.k() / 2).max(1));
    let mut walk_rng = rng::from_seed(seed);
    let out = walk::classical_search(
        &mit.polynomial,
        &mit.ring,
        &mit.basis,
        ell,
        max_steps,
        &mut walk_rng,
    )
    .map_err(err)?;
    value_to_py(py, &serde_json::to_value(&out).expect("serializable"))
}

/// Brute-force vanishing set of one coordinate (0-based) with its coset
/// structure.
#[pyfunction]
fn verify_vanishing_coset(
    py: Python<'_>,
    ring_spec: &Bound<'_, PyAny>,
    generators: &Bound<'_, PyAny>,
    polynomial: &Bound<'_, PyAny>,
    coordinate: usize,
) -> PyResult<Py<PyAny>> {
    let mit = build_mit(ring_spec, generators, polynomial)?;
    let rep = testers::verify_coset_lemma(
        &mit.polynomial,
        &mit.ring,
        &mit.basis,
        coordinate,
        DEFAULT_SPAN_BOUND,
    )
    .map_err(err)?;
    let out = json!({
        "coordinate": rep.coordinate,
        "span_size": rep.span_size,
        "vanishing_set": rep.vanishing_set.iter()
            .map(|e| wire::element_to_json(&mit.ring, e)).collect::<Vec<_>>(),
        "is_coset": rep.is_coset,
        "size_bound_holds": rep.size_bound_holds,
    });
    value_to_py(py, &out)
}

/// Exact fraction of nonzero evaluations over all m-tuples of size-l subsums.
#[pyfunction]
fn exhaustive_nonzero_fraction(
    py: Python<'_>,
    ring_spec: &Bound<'_, PyAny>,
    generators: &Bound<'_, PyAny>,
    polynomial: &Bound<'_, PyAny>,
    ell: usize,
) -> PyResult<Py<PyAny>> {
    let mit = build_mit(ring_spec, generators, polynomial)?;
    let rep = testers::exhaustive_nonzero_fraction(
        &mit.polynomial,
        &mit.ring,
        &mit.basis,
        ell,
        testers::DEFAULT_ENUMERATION_CAP,
    )
    .map_err(err)?;
    let out = json!({
        "ell": rep.ell,
        "nonzero": rep.nonzero as u64,
        "tuples_total": rep.tuples_total as u64,
        "fraction": frac_value(&rep.fraction),
        "bound": frac_value(&rep.bound),
        "holds": rep.holds,
    });
    value_to_py(py, &out)
}

// ---------------------------------------------------------------------------
// Walk and cost model
// ---------------------------------------------------------------------------

/// Exact and numeric spectral gap of the Johnson walk J(k, l).
#[pyfunction]
fn spectral_gap(py: Python<'_>, k: usize, ell: usize) -> PyResult<Py<PyAny>> {
    let g = walk::spectral_gap(k, ell, walk::DEFAULT_MATRIX_CAP).map_err(err)?;
    value_to_py(py, &serde_json::to_value(g).expect("serializable"))
}

/// Optimized walk parameters l* and alpha* with the integer-scan cross-check.
#[pyfunction]
fn optimize_parameters(py: Python<'_>, k: usize, m: usize) -> PyResult<Py<PyAny>> {
    let opt = quantum::optimize_parameters(k, m).map_err(err)?;
    value_to_py(py, &serde_json::to_value(&opt).expect("serializable"))
}

/// Both displayed forms of the walk-search query bound.
#[pyfunction]
fn subset_walk_query_bound(
    py: Python<'_>,
    k: usize,
    m: usize,
    ell: usize,
    alpha: f64,
) -> PyResult<Py<PyAny>> {
    let b = quantum::subset_walk_query_bound(k, m, ell, alpha).map_err(err)?;
    value_to_py(py, &serde_json::to_value(b).expect("serializable"))
}

/// S + (U + C)/sqrt(delta * eps).
#[pyfunction]
fn walk_search_cost(
    setup: f64,
    update: f64,
    checking: f64,
    delta: f64,
    epsilon: f64,
) -> PyResult<f64> {
    quantum::walk_search_cost(&quantum::CostInputs {
        setup,
        update,
        checking,
        delta,
        epsilon,
    })
    .map_err(err)
}

/// Fidelity-drop detection on the quantized Johnson walk.
#[pyfunction]
#[pyo3(signature = (k, ell, marked, c = quantum::SZEGEDY_DETECTION_C, epsilon = None))]
fn szegedy_detect(
    py: Python<'_>,
    k: usize,
    ell: usize,
    marked: Vec<usize>,
    c: f64,
    epsilon: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let p = walk::johnson_transition_matrix(k, ell, walk::DEFAULT_MATRIX_CAP).map_err(err)?;
    let out = quantum::szegedy_detect(&p, &marked, c, epsilon, quantum::DEFAULT_PAIR_DIM_CAP)
        .map_err(err)?;
    value_to_py(py, &serde_json::to_value(&out).expect("serializable"))
}

// ---------------------------------------------------------------------------
// Reduction
// ---------------------------------------------------------------------------

fn split_instance(k: usize, m: usize, f: Vec<usize>) -> PyResult<SplitCollisionInstance> {
    SplitCollisionInstance::new(k, m, f).map_err(err)
}

/// Compile a split-collision table into an identity-testing instance
/// (ring spec + generator literals + polynomial).
#[pyfunction]
fn reduce_instance(py: Python<'_>, k: usize, m: usize, f: Vec<usize>) -> PyResult<Py<PyAny>> {
    let inst = split_instance(k, m, f)?;
    let out = reduction::build_instance(&inst, ClashRule::IntervalMarkWins).map_err(err)?;
    value_to_py(py, &wire::reduction_to_mit_json(&out))
}

/// Compare the compiled instance's verdict against the brute-force
/// predicates.
#[pyfunction]
#[pyo3(signature = (k, m, f, span_check = false))]
fn verify_reduction(
    py: Python<'_>,
    k: usize,
    m: usize,
    f: Vec<usize>,
    span_check: bool,
) -> PyResult<Py<PyAny>> {
    let inst = split_instance(k, m, f)?;
    let rep = reduction::verify_equivalence(
        &inst,
        ClashRule::IntervalMarkWins,
        span_check,
        testers::DEFAULT_ENUMERATION_CAP,
    )
    .map_err(err)?;
    value_to_py(py, &serde_json::to_value(&rep).expect("serializable"))
}

/// Exactly one preimage in each interval.
#[pyfunction]
fn has_split_collision(k: usize, m: usize, f: Vec<usize>) -> PyResult<bool> {
    Ok(reduction::has_split_collision(&split_instance(k, m, f)?))
}

/// At least one preimage in each interval.
#[pyfunction]
fn has_covering_collision(k: usize, m: usize, f: Vec<usize>) -> PyResult<bool> {
    Ok(reduction::has_covering_collision(&split_instance(k, m, f)?))
}

/// Random equal-partition lift of a function table.
#[pyfunction]
#[pyo3(signature = (f, m, seed = 0))]
fn random_partition_lift(
    py: Python<'_>,
    f: Vec<usize>,
    m: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let mut walk_rng = rng::from_seed(seed);
    let lifted = reduction::random_partition_lift(&f, m, &mut walk_rng).map_err(err)?;
    value_to_py(py, &serde_json::to_value(&lifted).expect("serializable"))
}

#[pymodule]
fn mlit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Ring>()?;
    m.add_class::<Polynomial>()?;
    m.add_function(wrap_pyfunction!(deterministic_test, m)?)?;
    m.add_function(wrap_pyfunction!(randomized_test, m)?)?;
    m.add_function(wrap_pyfunction!(classical_walk_search, m)?)?;
    m.add_function(wrap_pyfunction!(verify_vanishing_coset, m)?)?;
    m.add_function(wrap_pyfunction!(exhaustive_nonzero_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_gap, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(subset_walk_query_bound, m)?)?;
    m.add_function(wrap_pyfunction!(walk_search_cost, m)?)?;
    m.add_function(wrap_pyfunction!(szegedy_detect, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_instance, m)?)?;
    m.add_function(wrap_pyfunction!(verify_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(has_split_collision, m)?)?;
    m.add_function(wrap_pyfunction!(has_covering_collision, m)?)?;
    m.add_function(wrap_pyfunction!(random_partition_lift, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
