#!/usr/bin/env python3
"""Smoke test for the mlit_py extension module.

Builds the cdylib with cargo if needed, copies it next to this script under
the importable name, then drives the main types and operations end to end.

Run from anywhere:  python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

HERE = Path(__file__).resolve().parent
WORKSPACE = HERE.parent


def ensure_module() -> None:
    """Build mlit-py and expose it as python/mlit_py.so."""
    subprocess.run(
        ["cargo", "build", "--release", "-p", "mlit-py"],
        cwd=WORKSPACE,
        check=True,
    )
    built = WORKSPACE / "target" / "release" / "libmlit_py.so"
    if not built.exists():  # e.g. macOS
        built = WORKSPACE / "target" / "release" / "libmlit_py.dylib"
    target = HERE / "mlit_py.so"
    shutil.copy2(built, target)
    sys.path.insert(0, str(HERE))


def check(name: str, condition: bool) -> None:
    status = "ok" if condition else "FAIL"
    print(f"  {name}: {status}")
    if not condition:
        raise SystemExit(f"smoke test failed at: {name}")


def main() -> None:
    ensure_module()
    import mlit_py as m

    print(f"mlit_py {m.__version__}")

    # --- ring arithmetic and the query ledger ---
    z6 = m.Ring.zn(6)
    check("Z_6: 4 + 5 = 3", z6.add(4, 5) == 3)
    check("Z_6: 4 * 5 = 2", z6.mul(4, 5) == 2)
    check("Z_6: -4 = 2", z6.neg(4) == 2)
    led = z6.ledger()
    check("ledger counts 1 add, 1 mul, 1 neg", (led["add_count"], led["mul_count"], led["neg_count"]) == (1, 1, 1))

    m2 = m.Ring.mat_f2(2)
    e11, e12 = "1000", "0100"
    check("M_2(F_2): E11*E12 = E12", m2.mul(e11, e12) == e12)
    check("M_2(F_2): E12*E11 = 0", m2.is_zero(m2.mul(e12, e11)))

    prod = m.Ring.from_spec({"type": "Product", "factors": [{"type": "Zn", "n": 6}, {"type": "MatF2", "t": 2}]})
    check("product ring works componentwise", prod.mul([4, e11], [5, e12]) == [2, e12])

    # --- polynomials and testers ---
    commutator = m.Polynomial.commutator()
    check("commutator arity 2, multilinear", commutator.arity == 2 and commutator.is_multilinear)
    check("commutator vanishes on Z_6", z6.is_zero(commutator.evaluate(z6, [4, 5])))
    check("commutator detects E11, E12", commutator.evaluate(m2, [e11, e12]) == e12)

    z6_spec = {"type": "Zn", "n": 6}
    m2_spec = {"type": "MatF2", "t": 2}
    commutator_json = commutator.to_json(z6)
    m2_gens = ["0000", "1000", "0100", "0010", "0001"]

    det = m.deterministic_test(z6_spec, [0, 1], commutator_json)
    check("deterministic test: identity over Z_6 in k^m = 4 evals",
          det["verdict"] == "IdentityConsistent" and det["ledger_delta"]["f_eval_count"] == 4)

    det = m.deterministic_test(m2_spec, m2_gens, commutator_json)
    check("deterministic test: violated over M_2(F_2) in 25 evals",
          det["verdict"] == "Violated" and det["ledger_delta"]["f_eval_count"] == 25)

    rand = m.randomized_test(m2_spec, m2_gens, commutator_json, seed=7, failure_bound=0.01)
    check("randomized test finds a witness", rand["verdict"] == "Violated" and rand["witness"] is not None)

    frac = m.exhaustive_nonzero_fraction(m2_spec, m2_gens, commutator_json, 2)
    check("marked fraction 66/100 at l = 2",
          Fraction(frac["fraction"]["num"], frac["fraction"]["den"]) == Fraction(66, 100))

    coset = m.verify_vanishing_coset(z6_spec, [0, 1],
                                     {"m": 1, "mode": "commuting",
                                      "terms": [{"sign": 1, "atoms": [{"const": 3}, {"var": 1}]}]},
                                     0)
    check("vanishing set of 3x over Z_6 is {0,2,4}",
          coset["vanishing_set"] == [0, 2, 4] and coset["is_coset"] and coset["size_bound_holds"])

    # --- walks and the cost model ---
    search = m.classical_walk_search(m2_spec, m2_gens, commutator_json, ell=2, seed=3)
    check("walk search hits a marked state", search["hit_step"] is not None)

    gap = m.spectral_gap(6, 2)
    check("J(6,2) gap 0.75 exact == numeric",
          abs(gap["delta_exact"] - 0.75) < 1e-12 and abs(gap["delta_numeric"] - 0.75) < 1e-9)

    check("walk-search cost point value", abs(m.walk_search_cost(2, 3, 1, 0.25, 0.04) - 42.0) < 1e-12)

    opt = m.optimize_parameters(1000, 2)
    check("l* = 100, alpha* = 3/ln(1000) at k=1000, m=2",
          opt["ell_star"] == 100 and abs(opt["alpha_star"] - 3 / math.log(1000)) < 1e-12 and opt["feasible"])

    sz = m.szegedy_detect(6, 2, [0])
    check("quantized walk: marked vertex drops fidelity below 0.9",
          sz["min_fidelity"] <= 0.9 and sz["unitarity_defect"] <= 1e-10)
    sz_empty = m.szegedy_detect(6, 2, [], epsilon=1 / 15)
    check("quantized walk: empty marked set keeps fidelity 1",
          all(abs(f - 1.0) <= 1e-9 for f in sz_empty["fidelities"]))

    # --- reduction pipeline ---
    check("split collision ground truth", m.has_split_collision(4, 2, [2, 1, 2, 4]))
    check("collision inside one interval is not split", not m.has_split_collision(4, 2, [2, 2, 3, 4]))

    reduced = m.reduce_instance(4, 2, [2, 1, 2, 4])
    check("reduction emits a product-of-matrix-rings instance",
          reduced["ring"]["type"] == "Product" and len(reduced["generators"]) == 4)
    det = m.deterministic_test(reduced["ring"], reduced["generators"], reduced["polynomial"])
    check("compiled instance violates the identity", det["verdict"] == "Violated")

    rep = m.verify_reduction(4, 2, [2, 1, 2, 4], span_check=True)
    check("reduction verdict matches brute force",
          rep["matches_covering"] and rep["matches_exact"] and rep["generator_equals_span"])

    lifted = m.random_partition_lift([1, 1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12], 2, seed=11)
    check("lift returns a well-formed instance",
          lifted["k"] == 12 and lifted["m"] == 2 and sorted(lifted["f"]) == sorted([1, 1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]))

    print("smoke test passed")


if __name__ == "__main__":
    main()
