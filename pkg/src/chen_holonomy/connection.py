"""Formal power series connections and their transport pairing."""

from __future__ import annotations

import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cobar import (
    DEFAULT_TRUNCATION,
    CobarElement,
    Truncation,
    cobar_differential,
    cobar_from_dict,
    word,
    word_degree,
)
from .coalgebra import CoalgebraSpec, coalgebra_from_dict, load_coalgebra
from .forms import AmbientSpace, DifferentialForm, form_from_name, wedge
from .iterated import PairingGrid, QuadratureSpec, _assignment_sign, _mask, as_plot
from .paths import NPath, compose1

THREADS_ENV = "CHEN_HOLONOMY_THREADS"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


class ConnectionSpecError(ValueError):
    pass


@dataclass(frozen=True)
class ConnectionTerm:
    form: DifferentialForm
    element: CobarElement


class Connection:
    """``ω = Σ ω_i ⊗ c_i`` with each ``c_i`` homogeneous of degree ``deg ω_i - 1``.

    The cobar degree of a word is the sum of ``deg c - 1`` over its letters,
    so for a single letter ``[c]`` the form degree equals the coalgebra
    degree of ``c``.
    """

    def __init__(self, coalgebra: CoalgebraSpec, terms: Sequence, ambient: AmbientSpace, name: str = "connection"):
        self.coalgebra = coalgebra
        self.ambient = ambient
        self.name = name
        clean = []
        for item in terms:
            form, element = (item.form, item.element) if isinstance(item, ConnectionTerm) else item
            if form.dim != ambient.dim:
                raise ConnectionSpecError(f"form {form.name} lives on R^{form.dim}, ambient is {ambient.name}")
            for w in element.terms:
                if word_degree(coalgebra, w) != form.degree - 1:
                    raise ConnectionSpecError(
                        f"form {form.name} of degree {form.degree} paired with word of cobar degree {word_degree(coalgebra, w)}"
                    )
            if element:
                clean.append(ConnectionTerm(form, element))
        self.terms = tuple(clean)

    def epsilon(self) -> "Connection":
        return Connection(self.coalgebra, [(t.form.epsilon(), t.element) for t in self.terms], self.ambient, self.name)

    def __repr__(self):
        return f"<Connection {self.name}: {len(self.terms)} terms on {self.ambient.name}>"


def empty_connection(coalgebra: CoalgebraSpec, ambient: AmbientSpace) -> Connection:
    return Connection(coalgebra, [], ambient, "empty")


def _accumulate(store: dict, w, array):
    if w in store:
        store[w] = store[w] + array
    else:
        store[w] = array


def twisted_terms(conn: Connection, points, truncation: Truncation = DEFAULT_TRUNCATION, step: float = 1e-5) -> dict:
    """Coefficient arrays of ``d_Ω ω + dω - ε(ω)∧ω`` word by word.

    Each word ``w`` carries a form of degree ``deg w + 2``, returned as an
    array of shape (N, C(d, deg w + 2)).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    conn.ambient.check(pts, "twisted cochain check")
    out: dict = {}
    for term in conn.terms:
        el = term.element.retruncate(truncation).to_float()
        coef = term.form.coefficients(pts)
        for w, c in cobar_differential(el).terms.items():
            _accumulate(out, w, c * coef)
        dcoef = term.form.exterior_derivative(step).coefficients(pts)
        for w, c in el.terms.items():
            _accumulate(out, w, c * dcoef)
    for left in conn.terms:
        eps_form = left.form.epsilon()
        for right in conn.terms:
            prod = (left.element.retruncate(truncation) * right.element.retruncate(truncation)).to_float()
            if not prod:
                continue
            coef = wedge(eps_form, right.form).coefficients(pts)
            for w, c in prod.terms.items():
                _accumulate(out, w, -c * coef)
    return out


def twisted_residual(conn: Connection, points, truncation: Truncation = DEFAULT_TRUNCATION, step: float = 1e-5) -> float:
    """Max absolute coefficient of ``d_Ω ω + dω - ε(ω)∧ω`` over points, components and words."""
    terms = twisted_terms(conn, points, truncation, step)
    return max((float(np.max(np.abs(a))) if a.size else 0.0 for a in terms.values()), default=0.0)


def _letters(conn: Connection, truncation: Truncation):
    letters = []
    for term in conn.terms:
        el = term.element.retruncate(truncation).to_float()
        if el:
            letters.append((term.form, tuple(el.terms.items()), term.form.degree - 1, min(len(w) for w in el.terms)))
    return letters


def transport_pair(
    conn: Connection,
    plot,
    quad: QuadratureSpec = QuadratureSpec(),
    truncation: Truncation = DEFAULT_TRUNCATION,
) -> CobarElement:
    """``⟨T_ω, φ⟩ = Σ ⟨∫ω_{i1}…ω_{ik}, φ⟩ c_{i1}⋯c_{ik}``, truncated.

    Index tuples are enumerated depth first; the time-ordered integrals of a
    tuple reuse the cumulative integral of its prefix.  Tuples failing the
    degree gate are never integrated.  The unit term is included iff the
    plot is a point-plot (1-path).
    """
    plot = as_plot(plot)
    m = plot.m
    spec = conn.coalgebra
    if plot.path.dim != conn.ambient.dim:
        raise ConnectionSpecError("path and connection live in different ambient dimensions")
    result: dict = {(): 1.0} if m == 0 else {}
    letters = _letters(conn, truncation)
    if not letters or m > truncation.d_max:
        return CobarElement(spec, result, truncation)
    grid = PairingGrid(plot, quad)
    full = (1 << m) - 1
    branches = []
    for i, (form, _, p, _) in enumerate(letters):
        for block in itertools.combinations(range(m), p):
            grid.factor(form, block)
            branches.append((i, block))

    def extend(prefix, element_terms):
        out = {}
        for w1, c1 in prefix.items():
            for w2, c2 in element_terms:
                if len(w1) + len(w2) <= truncation.l_max:
                    w = w1 + w2
                    out[w] = out.get(w, 0.0) + c1 * c2
        return out

    def walk(prev, used, sign, prefix, store):
        shortest = min(len(w) for w in prefix)
        for form, terms, p, min_len in letters:
            if shortest + min_len > truncation.l_max:
                continue
            free = [b for b in range(m) if not used >> b & 1]
            for block in itertools.combinations(free, p):
                step(prev, used, sign, prefix, store, form, terms, block)

    def step(prev, used, sign, prefix, store, form, terms, block):
        f = grid.factor(form, block)
        g = f if prev is None else prev * f
        new_used = used | _mask(block)
        new_sign = sign * _assignment_sign(used, block)
        new_prefix = extend(prefix, terms)
        if not new_prefix:
            return
        if new_used == full:
            total = new_sign * grid.total(g)
            for w, c in new_prefix.items():
                store[w] = store.get(w, 0.0) + total * c
        walk(grid.cumulative(g), new_used, new_sign, new_prefix, store)

    def run_branch(branch):
        i, block = branch
        form, terms, _, _ = letters[i]
        store: dict = {}
        step(None, 0, 1, {(): 1.0}, store, form, terms, block)
        return store

    threads = thread_count()
    if threads > 1 and len(branches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stores = list(pool.map(run_branch, branches))
    else:
        stores = [run_branch(b) for b in branches]
    for store in stores:
        for w, c in store.items():
            result[w] = result.get(w, 0.0) + c
    element = CobarElement(spec, result, truncation)
    bad = [w for w in element.terms if word_degree(spec, w) != m]
    if bad:
        raise AssertionError(f"degree coherence violated by words {bad[:3]}")
    return element


def transport_pair_with_error(conn, plot, quad=QuadratureSpec(), truncation=DEFAULT_TRUNCATION):
    """Value plus the refinement estimate ``max |T(P) - T(P/2)|``."""
    value = transport_pair(conn, plot, quad, truncation)
    if quad.P < 2:
        return value, float("nan")
    coarse = transport_pair(conn, plot, quad.coarsened(), truncation)
    return value, (value - coarse).max_abs()


def multiplicativity_check(conn, gamma: NPath, delta: NPath, quad=QuadratureSpec(), truncation=DEFAULT_TRUNCATION) -> float:
    """Max coefficient discrepancy between ``⟨T, γ∘δ⟩`` and ``⟨T, γ⟩⟨T, δ⟩``."""
    joint = transport_pair(conn, compose1(gamma, delta), quad, truncation)
    split = transport_pair(conn, gamma, quad, truncation) * transport_pair(conn, delta, quad, truncation)
    return (joint - split).max_abs()


def connection_from_dict(data: dict, base_dir: Path | None = None) -> Connection:
    """Connection spec: ``{"coalgebra": <object or file>, "terms": [{"form": name, "cobar": word or map}]}``.

    A ``{"preset": "signature:d=3"}`` object is also accepted.
    """
    if "preset" in data:
        from .presets import preset

        return preset(data["preset"]).connection
    source = data["coalgebra"]
    if isinstance(source, str):
        path = Path(source)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        spec = load_coalgebra(path.read_text())
    else:
        spec = coalgebra_from_dict(source)
    trunc = DEFAULT_TRUNCATION
    terms = []
    ambient = None
    for entry in data["terms"]:
        form = form_from_name(entry["form"])
        ambient = ambient or form.ambient
        cobar = entry["cobar"]
        if isinstance(cobar, str):
            element = word(spec, cobar, truncation=trunc)
        else:
            element = cobar_from_dict(spec, {"terms": cobar, "truncation": {"L_max": trunc.l_max, "D_max": trunc.d_max}})
        terms.append((form, element))
    if ambient is None:
        raise ConnectionSpecError("connection spec without terms needs a preset")
    return Connection(spec, terms, ambient, data.get("name", "connection"))


def load_connection(text: str, base_dir: Path | None = None) -> Connection:
    return connection_from_dict(json.loads(text), base_dir)
