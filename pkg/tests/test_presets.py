import math

import numpy as np
import pytest

from chen_holonomy.coalgebra import check_coalgebra
from chen_holonomy.cobar import Truncation, verify_cobar_identities
from chen_holonomy.connection import transport_pair, twisted_residual
from chen_holonomy.holonomy import hol3
from chen_holonomy.paths import check_sitting, is_good_3path
from chen_holonomy.presets import PresetError, chord_count, parse_preset_name, preset, wrap3_path

NAMES = ["abelian", "signature:d=2", "signature:d=3", "winding:m=2", "winding:m=3", "gauss:m=2,n=4", "gauss:m=3,n=4"]


def degree_oracle(path, n=24, h=1e-6):
    """Degree of the relative direction map, by Gauss-Legendre on the pulled-back S^3 volume."""
    x, wts = np.polynomial.legendre.leggauss(n)
    x, wts = (x + 1) / 2, wts / 2
    grid = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)
    weight = np.einsum("i,j,k->ijk", wts, wts, wts).ravel()

    def direction(u):
        p = path.raw.evaluate(u)
        d = p[:, 0:4] - p[:, 4:8]
        return d / np.linalg.norm(d, axis=1, keepdims=True)

    cols = [direction(grid)]
    for k in range(3):
        step = np.zeros(3)
        step[k] = h
        cols.append((direction(grid + step) - direction(grid - step)) / (2 * h))
    return float(np.sum(weight * np.linalg.det(np.stack(cols, axis=2))) / (2 * math.pi**2))


@pytest.mark.parametrize("name", NAMES)
def test_preset_coalgebras_are_valid(presets, name):
    spec = presets(name).coalgebra
    assert check_coalgebra(spec).passed
    assert verify_cobar_identities(spec, Truncation(3, 4))["pass"]


def test_signature_generators(presets):
    spec = presets("signature:d=3").coalgebra
    assert [b.id for b in spec.basis if b.degree == 1] == ["e1", "e2", "e3"]


def test_chord_counts(presets):
    for m in (2, 3, 4):
        assert chord_count(m) == m * (m - 1) // 2
    spec = presets("gauss:m=3,n=4").coalgebra
    assert sorted(b.id for b in spec.basis if b.degree == 3) == ["c12", "c13", "c23"]
    assert [b.id for b in presets("gauss:m=2,n=4").coalgebra.basis] == ["c12"]


@pytest.mark.parametrize("name,tol", [("abelian", 0.0), ("signature:d=3", 0.0), ("winding:m=2", 1e-8), ("winding:m=3", 1e-8), ("gauss:m=2,n=4", 1e-6), ("gauss:m=3,n=4", 1e-6)])
def test_twisted_residual_within_preset_tolerance(presets, rng, name, tol):
    pre = presets(name)
    assert pre.tolerance == tol
    assert twisted_residual(pre.connection, pre.sample_points(rng, 50)) <= tol


def test_full_twist_coefficient(presets):
    pre = presets("winding:m=2")
    got = transport_pair(pre.connection, pre.paths["full-twist:w=1"])
    assert abs(float(got.terms[("e",)]) - 1.0) <= 1e-7


def test_braid_generator_half_twist(presets):
    pre = presets("winding:m=3")
    got = transport_pair(pre.connection, pre.paths["braid-generator"])
    assert abs(float(got.terms[("e12",)]) - 0.5) <= 1e-7


@pytest.mark.parametrize("w", [0, 1, 2])
def test_wrap3_degree_oracle(w):
    path = wrap3_path(w)
    assert is_good_3path(path)
    assert check_sitting(path) <= 1e-12
    assert abs(degree_oracle(path) - w) <= 1e-8


@pytest.mark.parametrize("w,tol", [(0, 1e-4), (1, 1e-4), (2, 2e-4)])
def test_wrap3_holonomy_matches_degree(presets, w, tol):
    pre = presets("gauss:m=2,n=4")
    M = hol3(pre.connection, pre.paths[f"wrap3:w={w}"])
    assert abs(float(M.raw.terms.get(("c12",), 0.0)) - w) <= tol
    if w == 0:
        assert M.raw.max_abs() == 0.0


def test_locality_three_points(presets):
    pre = presets("gauss:m=3,n=4")
    M = hol3(pre.connection, wrap3_path(1, 3))
    assert abs(float(M.raw.terms.get(("c12",), 0.0)) - 1.0) <= 1e-4
    for chord in ("c13", "c23"):
        assert abs(float(M.raw.terms.get((chord,), 0.0))) <= 1e-4


@pytest.mark.parametrize("bad", ["nope", "signature:d=0", "gauss:m=2,n=3", "winding:m=1", "signature:x=2", "gauss:m=1,n=4"])
def test_bad_names(bad):
    with pytest.raises(PresetError):
        preset(bad)


def test_parse_name():
    assert parse_preset_name("gauss:m=3,n=4")[0] == "gauss"
