"""Acceptance criteria; each test prints one PASS/FAIL line."""

import itertools
import math
import time

import numpy as np
import pytest

from chen_holonomy.cobar import Truncation, verify_cobar_identities
from chen_holonomy.coalgebra import check_coalgebra
from chen_holonomy.connection import multiplicativity_check, transport_pair, twisted_residual
from chen_holonomy.forms import PolynomialForm, coordinate_form, euclidean
from chen_holonomy.holonomy import hol3, lemma_battery
from chen_holonomy.iterated import QuadratureSpec, stokes_residual
from chen_holonomy.presets import line_path, preset, wrap3_path

QUAD = QuadratureSpec(8, 4)
BUNDLED = ["abelian", "signature:d=2", "signature:d=3", "winding:m=2", "winding:m=3", "gauss:m=2,n=4", "gauss:m=3,n=4"]


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def signature_battery():
    start = time.perf_counter()
    entries = lemma_battery(preset("signature:d=3"), 2024, QUAD, Truncation(4, 6))
    return {e["lemma"]: e for e in entries}, time.perf_counter() - start


def entry_ok(entry, tol):
    return entry["instances"] > 0 and entry["max_residual"] <= tol and entry["tolerance"] <= tol


def test_1_algebraic_exactness(report):
    start = time.perf_counter()
    results = {}
    for name in BUNDLED:
        spec = preset(name).coalgebra
        results[name] = check_coalgebra(spec).passed and verify_cobar_identities(spec, Truncation(4, 6))["pass"]
    elapsed = time.perf_counter() - start
    ok = all(results.values()) and elapsed < 5
    report(1, ok, f"d^2 = 0 and derivation law exact on {len(results)} coalgebras, {elapsed:.2f}s (< 5s)")


def test_2_signature_oracle(report):
    start = time.perf_counter()
    pre = preset("signature:d=3")
    v = np.array([0.7, -1.1, 0.4])
    got = transport_pair(pre.connection, line_path(v), QUAD, Truncation(4, 6))
    worst = 0.0
    for k in range(5):
        for idx in itertools.product(range(3), repeat=k):
            w = tuple(f"e{i + 1}" for i in idx)
            expected = float(np.prod(v[list(idx)])) / math.factorial(k)
            worst = max(worst, abs(float(got.terms.get(w, 0.0)) - expected))
    extra = max((abs(float(c)) for w, c in got.terms.items() if len(w) > 4), default=0.0)
    rng = np.random.default_rng(2)
    fam = pre.random_paths(rng)
    chen = 0.0
    for _ in range(20):
        e = fam.edge()
        chen = max(chen, multiplicativity_check(pre.connection, fam.path1(e), fam.path1(fam.edge(p0=e[1])), QUAD, Truncation(4, 6)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and extra == 0.0 and chen <= 1e-8 and elapsed < 30
    report(2, ok, f"exp error {worst:.2e} (<= 1e-10), Chen max {chen:.2e} over 20 pairs (<= 1e-8), {elapsed:.2f}s (< 30s)")


def test_3_winding_oracle(report):
    pre = preset("winding:m=2")
    worst = 0.0
    for w in (1, 2, 3):
        got = transport_pair(pre.connection, pre.paths[f"full-twist:w={w}"], QUAD)
        for k in range(5):
            worst = max(worst, abs(float(got.terms.get(("e",) * k, 0.0)) - w**k / math.factorial(k)))
    report(3, worst <= 1e-7, f"full-twist [e]^k coefficients vs w^k/k!, max error {worst:.2e} (<= 1e-7)")


def test_4_invariance_battery(report, signature_battery):
    entries, _ = signature_battery
    rank1 = entries["rank1-reparametrization-invariance"]
    lam = entries["laminated-cylinder-invariance"]
    rank2 = entries["rank2-difference-in-quotient"]
    ok = rank1["instances"] >= 20 and entry_ok(rank1, 1e-8) and entry_ok(lam, 1e-8) and entry_ok(rank2, 1e-6)
    report(4, ok, f"rank-1 {rank1['max_residual']:.2e} x{rank1['instances']}, laminated {lam['max_residual']:.2e}, rank-2 mod quotient {rank2['max_residual']:.2e}")


def test_5_functoriality_battery(report, signature_battery):
    entries, _ = signature_battery
    wanted = {
        "hol2-vertical-additivity": 1e-8,
        "hol2-horizontal-expression-lower": 1e-6,
        "hol2-horizontal-expression-upper": 1e-6,
        "hol3-upward-additivity": 1e-8,
        "hol3-vertical-additivity": 1e-8,
        "whisker2-product-law": 1e-7,
        "whisker3-product-law": 1e-7,
        "c2-horizontal-two-expressions": 1e-6,
    }
    bad = [name for name, tol in wanted.items() if not entry_ok(entries[name], tol)]
    worst = max(entries[name]["max_residual"] for name in wanted)
    report(5, not bad, f"{len(wanted) - len(bad)}/{len(wanted)} laws within tolerance, largest residual {worst:.2e}" + (f", failing {bad}" if bad else ""))


def x_dy(dim, i, j):
    powers = [0] * dim
    powers[i] = 1
    return PolynomialForm(euclidean(dim), 1, {(j,): [(1.0, powers)]})


def test_6_stokes(report):
    rng = np.random.default_rng(6)
    worst = 0.0
    sig = preset("signature:d=3")
    fam = sig.random_paths(rng)
    forms = [[x_dy(3, 0, 1)], [coordinate_form(3, 2)], [x_dy(3, 0, 1), x_dy(3, 1, 2)], [coordinate_form(3, 0), x_dy(3, 2, 0)]]
    for _ in range(2):
        e0 = fam.edge()
        g = fam.path2(fam.bubble(e0, fam.edge(e0[0], e0[1])))
        for f in forms:
            worst = max(worst, stokes_residual(f, g, QUAD))
    wind = preset("winding:m=2")
    fam = wind.random_paths(rng)
    dtheta = wind.connection.terms[0].form
    e0 = fam.edge()
    g = fam.path2(fam.bubble(e0, fam.edge(e0[0], e0[1])))
    for f in ([dtheta], [dtheta, dtheta]):
        worst = max(worst, stokes_residual(f, g, QUAD))
    report(6, worst <= 5e-6, f"Stokes residual max {worst:.2e} over k in (1, 2) families (<= 5e-6)")


def test_7_twisted_residuals(report):
    rng = np.random.default_rng(7)
    res = {}
    for name in ("signature:d=3", "winding:m=2", "gauss:m=2,n=4"):
        pre = preset(name)
        res[name] = twisted_residual(pre.connection, pre.sample_points(rng, 50))
    ok = res["signature:d=3"] == 0.0 and res["winding:m=2"] <= 1e-8 and res["gauss:m=2,n=4"] <= 1e-6
    report(7, ok, ", ".join(f"{k} {v:.2e}" for k, v in res.items()))


def test_8_wrap_witness(report):
    start = time.perf_counter()
    pre = preset("gauss:m=2,n=4")
    errors = []
    for w in (0, 1, 2):
        M = hol3(pre.connection, wrap3_path(w), QUAD)
        errors.append(abs(float(M.raw.terms.get(("c12",), 0.0)) - w))
    pre3 = preset("gauss:m=3,n=4")
    M = hol3(pre3.connection, wrap3_path(1, 3), QUAD)
    local = max(abs(float(M.raw.terms.get(("c12",), 0.0)) - 1.0), abs(float(M.raw.terms.get(("c13",), 0.0))), abs(float(M.raw.terms.get(("c23",), 0.0))))
    elapsed = time.perf_counter() - start
    ok = max(errors) <= 2e-4 and local <= 2e-4 and elapsed < 120
    report(8, ok, f"wrap counts 0,1,2 errors {', '.join(f'{e:.1e}' for e in errors)}, m=3 locality {local:.1e} (<= 2e-4), {elapsed:.2f}s (< 120s)")
