import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chen_holonomy.coalgebra import (
    CoalgebraError,
    check_coalgebra,
    dump_coalgebra,
    format_rational,
    load_coalgebra,
    make_coalgebra,
    parse_rational,
)
from chen_holonomy.presets import Generator, exterior_coalgebra
from chen_holonomy.forms import constant_form

ABELIAN = {
    "basis": [{"id": "e", "degree": 1}],
    "differential": [],
    "coproduct": [],
}


def test_abelian_is_valid():
    spec = load_coalgebra(json.dumps(ABELIAN))
    assert spec.ids == ("e",)
    assert check_coalgebra(spec).passed


def test_degree_bookkeeping_example_is_valid():
    spec = make_coalgebra({"a": 1, "b": 1, "c": 2}, coproduct={"c": {("a", "b"): 1}})
    assert check_coalgebra(spec).passed


def test_d_squared_violation_names_element():
    with pytest.raises(CoalgebraError) as err:
        make_coalgebra({"f": 1, "e": 2, "c": 3}, differential={"c": {"e": 1}, "e": {"f": 1}})
    assert "∂² ≠ 0 at c" in err.value.violations


def test_chord_generator_m2_n4_passes():
    spec = make_coalgebra({"c12": 3})
    report = check_coalgebra(spec)
    assert report.passed
    assert all(entry["pass"] for entry in report.to_dict()["invariants"])


def test_coassociativity_failure_names_generator():
    good, _ = exterior_coalgebra([Generator(g, 1, constant_form(3, {(0,): 1.0})) for g in ("x", "y", "z")])
    data = json.loads(dump_coalgebra(good))
    # perturb one coefficient of the degree-3 generator
    for entry in data["coproduct"]:
        if entry["from"] == "x^y^z":
            entry["terms"][0]["coeff"] = "2/1"
    spec = load_coalgebra(json.dumps(data), validate=False)
    report = check_coalgebra(spec)
    failed = {e.invariant: e.failures for e in report.entries if not e.passed}
    assert failed == {"coassociativity of Δ̄": ["coassociativity fails at x^y^z"]}


def test_co_leibniz_violation():
    spec = make_coalgebra(
        {"a": 1, "b": 1, "c": 2, "d": 3},
        differential={"d": {"c": 1}},
        coproduct={"c": {("a", "b"): 1}},
        validate=False,
    )
    report = check_coalgebra(spec)
    assert "co-Leibniz fails at d" in report.violations


def test_nontrivial_differential_with_coproduct():
    spec = make_coalgebra({"a": 1, "b": 1, "c": 2}, differential={"c": {"a": 1, "b": -1}}, coproduct={"c": {("a", "b"): 1}})
    assert check_coalgebra(spec).passed


def test_degree_violations():
    with pytest.raises(CoalgebraError, match="outside"):
        make_coalgebra({"e": 0})
    with pytest.raises(CoalgebraError, match="outside"):
        make_coalgebra({"e": 9})
    assert make_coalgebra({"e": 9}, degree_cap=10).degree("e") == 9
    spec = make_coalgebra({"a": 1, "c": 3}, differential={"c": {"a": 1}}, validate=False)
    assert not check_coalgebra(spec).passed


def test_unknown_reference_rejected():
    data = {"basis": [{"id": "e", "degree": 1}], "differential": [{"from": "e", "terms": [{"to": "zz", "coeff": "1/1"}]}], "coproduct": []}
    with pytest.raises(CoalgebraError):
        load_coalgebra(json.dumps(data))


def test_parse_error_is_reported():
    with pytest.raises((CoalgebraError, ValueError)):
        load_coalgebra("{not json")


def test_rationals():
    assert parse_rational("3/6") == Fraction(1, 2)
    assert parse_rational(2) == Fraction(2)
    assert format_rational(Fraction(-2, 4)) == "-1/2"
    assert format_rational(Fraction(3)) == "3/1"


def test_order_independent_validation():
    a = make_coalgebra({"a": 1, "b": 1, "c": 2}, coproduct={"c": {("a", "b"): 1}})
    b = make_coalgebra({"c": 2, "b": 1, "a": 1}, coproduct={"c": {("a", "b"): 1}})
    assert a == b
    assert check_coalgebra(a).to_dict() == check_coalgebra(b).to_dict()


odd_degrees = st.lists(st.sampled_from([1, 3]), min_size=1, max_size=4)


@settings(max_examples=25, deadline=None)
@given(odd_degrees)
def test_exterior_coalgebras_round_trip_bit_exact(degrees):
    gens = [Generator(f"g{k}", d, constant_form(4, {(0,): 1.0})) for k, d in enumerate(degrees)]
    spec, _ = exterior_coalgebra(gens)
    assert check_coalgebra(spec).passed
    text = dump_coalgebra(spec)
    again = load_coalgebra(text)
    assert again == spec
    assert dump_coalgebra(again) == text
