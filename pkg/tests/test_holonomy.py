from fractions import Fraction

import numpy as np
import pytest

from chen_holonomy.cobar import CobarElement, Truncation, cobar_differential, enumerate_words, unit, word, zero
from chen_holonomy.coalgebra import make_coalgebra
from chen_holonomy.connection import empty_connection
from chen_holonomy.holonomy import (
    CompositionError,
    DegreeMismatchError,
    battery_passed,
    c1_compose,
    c2_horizontal,
    c2_vertical,
    c2_whisker,
    c3_upward,
    c3_whisker,
    hol1,
    hol2,
    hol3,
    lemma_battery,
    quotient_reduce,
    quotient_space,
)
from chen_holonomy.paths import PathError, RawMap, constant_path, make_sitting, horizontal2, lam_horizontal_lower, upward3, vertical2


def random_product(spec, rng, trunc):
    """Random rational element of the span of products of two degree-1 words."""
    ones = enumerate_words(spec, 1, trunc.l_max)
    total = CobarElement(spec, {}, trunc)
    for _ in range(6):
        a, b = (ones[int(i)] for i in rng.integers(0, len(ones), size=2))
        if len(a) + len(b) > trunc.l_max:
            continue
        coeff = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))
        total = total + word(spec, a, coeff, trunc) * word(spec, b, Fraction(1), trunc)
    return total


def test_boundaries_of_products_reduce_to_zero(presets, rng):
    spec = presets("signature:d=3").coalgebra
    trunc = Truncation(4, 6)
    Q = quotient_space(spec, 2, trunc)
    assert Q.rank > 0
    for _ in range(10):
        x = cobar_differential(random_product(spec, rng, trunc))
        assert quotient_reduce(x, Q).max_abs() <= 1e-10


def test_trivial_structure_quotient_is_zero(presets):
    assert quotient_space(presets("abelian").coalgebra, 2).rank == 0
    spec = make_coalgebra({"e": 1, "f": 2})
    Q = quotient_space(spec, 2)
    assert Q.rank == 0
    x = word(spec, ("f",), Fraction(3, 2)) + word(spec, ("e", "f"), Fraction(-1, 3))
    assert quotient_reduce(x, Q).terms == {("f",): 1.5, ("e", "f"): -1 / 3}


def test_reduce_is_idempotent(presets, rng):
    spec = presets("signature:d=3").coalgebra
    Q = quotient_space(spec, 2)
    for _ in range(50):
        v = rng.normal(size=len(Q.words))
        x = Q.element(v)
        once = Q.reduce(x)
        assert (Q.reduce(once) - once).max_abs() <= 1e-12


def test_quotient_equality_is_consistent(presets, rng):
    spec = presets("signature:d=3").coalgebra
    Q = quotient_space(spec, 2)
    x = Q.element(rng.normal(size=len(Q.words)))
    y = x + cobar_differential(random_product(spec, rng, Q.truncation)).to_float()
    assert (Q.reduce(x) - Q.reduce(y)).max_abs() <= 1e-10
    assert Q.reduce(x - y).max_abs() <= 1e-10


def test_degree_mismatch(presets):
    spec = presets("signature:d=3").coalgebra
    Q = quotient_space(spec, 2)
    with pytest.raises(DegreeMismatchError):
        Q.reduce(word(spec, ("e1", "e2")))


def test_level3_quotient_contains_boundaries(presets, rng):
    spec = presets("signature:d=3").coalgebra
    Q = quotient_space(spec, 3)
    twos = enumerate_words(spec, 2, 4)
    ones = enumerate_words(spec, 1, 4)
    a = ones[int(rng.integers(len(ones)))][:1]
    b = [w for w in twos if len(w) <= 3][int(rng.integers(5))]
    x = cobar_differential(word(spec, a) * word(spec, b))
    assert Q.reduce(x.to_float()).max_abs() <= 1e-10


def test_hol1_constant_and_composition(presets, rng):
    pre = presets("signature:d=3")
    conn = pre.connection
    assert hol1(conn, constant_path(np.zeros(3))).terms == {(): 1.0}
    fam = pre.random_paths(rng)
    with pytest.raises(PathError):
        hol1(conn, fam.path2(fam.bubble(*[fam.edge()] * 2)))


def test_hol2_constant_is_zero(presets):
    pre = presets("signature:d=3")
    M = hol2(pre.connection, constant_path(np.zeros(3), 2))
    assert M.value.max_abs() == 0.0 and M.boundary_ok


def test_gauss_hol2_is_zero(presets, rng):
    pre = presets("gauss:m=2,n=4")
    fam = pre.random_paths(rng)
    e0 = fam.edge()
    M = hol2(pre.connection, fam.path2(fam.bubble(e0, fam.edge(e0[0], e0[1]))))
    assert M.raw.max_abs() == 0.0


def test_boundary_coherence_and_vertical(presets, rng):
    pre = presets("signature:d=3")
    conn = pre.connection
    fam = pre.random_paths(rng)
    e0 = fam.edge()
    e1 = fam.edge(e0[0], e0[1])
    e2 = fam.edge(e0[0], e0[1])
    g, h = fam.path2(fam.bubble(e0, e1)), fam.path2(fam.bubble(e1, e2))
    M, N = hol2(conn, g), hol2(conn, h)
    assert M.boundary_ok and N.boundary_ok
    V = c2_vertical(M, N)
    assert (hol2(conn, vertical2(g, h)).raw - V.raw).max_abs() <= 1e-8
    with pytest.raises(CompositionError):
        c2_vertical(N, M)


def test_horizontal_expressions_agree(presets, rng):
    pre = presets("signature:d=3")
    conn = pre.connection
    fam = pre.random_paths(rng)
    e0 = fam.edge()
    g = fam.path2(fam.bubble(e0, fam.edge(e0[0], e0[1])))
    f0 = fam.edge(p0=e0[1])
    h = fam.path2(fam.bubble(f0, fam.edge(f0[0], f0[1])))
    M, N = hol2(conn, g), hol2(conn, h)
    composite, gap = c2_horizontal(M, N)
    assert gap <= 1e-6
    assert hol2(conn, horizontal2(g, h)).class_distance(composite) <= 1e-6
    lam = hol3(conn, lam_horizontal_lower(g, h))
    assert (lam.raw - (M.raw * N.source + M.target * N.raw)).max_abs() <= 1e-7


def test_identities_are_neutral(presets, rng):
    pre = presets("signature:d=3")
    conn = pre.connection
    fam = pre.random_paths(rng)
    e0 = fam.edge()
    g = fam.path2(fam.bubble(e0, fam.edge(e0[0], e0[1])))
    M = hol2(conn, g)
    one = unit(pre.coalgebra).to_float()
    m = hol1(conn, fam.path1(e0))
    assert (c1_compose(one, m) - m).max_abs() == 0.0
    assert (c2_whisker(one, M).raw - M.raw).max_abs() == 0.0
    ident = hol2(conn, constant_path(e0[1], 2))
    assert ident.raw.max_abs() == 0.0
    assert zero(pre.coalgebra).max_abs() == 0.0


def test_hol3_levels(presets, rng):
    pre = presets("signature:d=3")
    conn = pre.connection
    fam = pre.random_paths(rng)
    e0 = fam.edge()
    b0 = fam.bubble(e0, fam.edge(e0[0], e0[1]))
    b1 = fam.bubble(b0["e0"], b0["e1"])
    b2 = fam.bubble(b0["e0"], b0["e1"])
    J, K = fam.path3(fam.sheet(b0, b1)), fam.path3(fam.sheet(b1, b2))
    A, B = hol3(conn, J), hol3(conn, K)
    assert A.boundary_ok and B.boundary_ok
    assert A.source.quotient is None
    U = c3_upward(A, B)
    assert (hol3(conn, upward3(J, K)).raw - U.raw).max_abs() <= 1e-8
    with pytest.raises(CompositionError):
        c3_upward(B, A)
    gamma = fam.path1(fam.edge(p1=e0[0]))
    m = hol1(conn, gamma)
    W = c3_whisker(m, A)
    assert W.boundary_residual <= 1e-6


def test_hol3_rejects_bad_3path(presets):
    pre = presets("signature:d=3")

    bad = make_sitting(RawMap(3, 3, lambda u: np.c_[u[:, 0] * u[:, 1] * (1 - u[:, 1]) * u[:, 2] * (1 - u[:, 2]) + u[:, 0] * u[:, 2] * (1 - u[:, 2]), 0 * u[:, 0], u[:, 2]]))
    with pytest.raises(PathError, match="good 3-path"):
        hol3(pre.connection, bad)


def test_empty_connection_battery_is_exactly_zero(presets):
    pre = presets("signature:d=3")
    conn = empty_connection(pre.coalgebra, pre.connection.ambient)
    report = lemma_battery(pre, 3, connection=conn, instances={"hol1": 3, "hol2": 1, "hol3": 1})
    assert report
    for entry in report:
        assert entry["max_residual"] == 0.0, entry["lemma"]


def test_signature_battery_level1(presets):
    report = lemma_battery(presets("signature:d=3"), 42, levels=(1,))
    assert battery_passed(report)
    assert all(e["max_residual"] <= 1e-8 for e in report)


def test_gauss_battery_level3(presets):
    report = lemma_battery(presets("gauss:m=2,n=4"), 5, levels=(3,), instances={"hol3": 1})
    assert battery_passed(report)
    assert all(e["max_residual"] <= 1e-5 for e in report if not e["informational"])


def test_report_shape(presets):
    report = lemma_battery(presets("abelian"), 1, levels=(1,))
    for entry in report:
        assert {"lemma", "instances", "max_residual", "tolerance", "pass"} <= set(entry)
