"""Iterated-integral pairings over cubical plots.

A plot is an n-path read as a map ``U = [0,1]^m -> paths`` with ``m = n - 1``
(the last coordinate is the path direction).  The pairing of
``∫ω_1…ω_k`` with a plot integrates the pulled-back top form over
``Δ^k × U``; it is zero unless ``Σ deg ω_i - k = m``.

Orientation convention: each factor i receives the path tangent at ``t_i``
followed by its block ``X_i`` of plot directions.  The contribution of an
assignment of plot directions is signed by the permutation taking the
concatenation ``X_1 … X_k`` to ascending order.

Two quadrature routes are provided.  ``nested`` (default) evaluates the
time-ordered integrals by the recursion ``F_j(t) = ∫_0^t F_{j-1} f_j`` with a
spectral cumulative-integration matrix on every Gauss-Legendre panel, which
shares work across all words of a connection.  ``collapsed`` maps the cube
onto the simplex by ``t_k = u_k, t_{k-1} = u_k u_{k-1}, …`` with Jacobian
``Π u_i^{i-1}`` and integrates one tuple at a time; it serves as an
independent cross-check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre

from .forms import DifferentialForm, wedge
from .paths import NPath


class QuadratureBudgetError(RuntimeError):
    """The requested quadrature would exceed the evaluation budget."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule: ``q`` nodes per panel, ``P`` panels per axis."""

    q: int = 8
    P: int = 4
    mode: str = "nested"
    budget: int = 20_000_000

    def __post_init__(self):
        if self.q < 2 or self.P < 1:
            raise ValueError("quadrature needs q >= 2 and P >= 1")
        if self.mode not in ("nested", "collapsed"):
            raise ValueError("mode must be 'nested' or 'collapsed'")

    def coarsened(self) -> "QuadratureSpec":
        return QuadratureSpec(self.q, max(1, self.P // 2), self.mode, self.budget)


@lru_cache(maxsize=None)
def _panel_rule(q: int):
    """Nodes, weights and cumulative-integration matrix on [0, 1]."""
    x, w = legendre.leggauss(q)
    nodes = (x + 1) / 2
    weights = w / 2
    vander = legendre.legvander(x, q - 1)
    inv = np.linalg.inv(vander)
    cum = np.empty((q, q))
    for k in range(q):
        e = np.zeros(q)
        e[k] = 1
        anti = legendre.legint(e, lbnd=-1)
        cum[:, k] = legendre.legval(x, anti) / 2
    return nodes, weights, cum @ inv


@lru_cache(maxsize=None)
def composite_rule(q: int, P: int):
    """Composite nodes/weights on [0, 1] plus the per-panel cumulative matrix."""
    nodes, weights, cum = _panel_rule(q)
    h = 1.0 / P
    starts = np.arange(P) * h
    all_nodes = (starts[:, None] + h * nodes[None, :]).ravel()
    all_weights = np.tile(h * weights, P)
    return all_nodes, all_weights, cum * h


def cumulative_integral(values: np.ndarray, q: int, P: int) -> np.ndarray:
    """``F(t_i) = ∫_0^{t_i} f`` at the composite nodes, along the last axis."""
    _, weights, cum = composite_rule(q, P)
    shape = values.shape
    panels = values.reshape(shape[:-1] + (P, q))
    within = panels @ cum.T
    totals = panels @ weights[:q]
    offsets = np.cumsum(totals, axis=-1) - totals
    return (within + offsets[..., None]).reshape(shape)


class Plot:
    """An n-path read as a plot ``[0,1]^(n-1) -> path space``."""

    def __init__(self, path: NPath):
        if path.arity - 1 not in (0, 1, 2):
            raise ValueError("plots have domain dimension 0, 1 or 2")
        self.path = path
        self.m = path.arity - 1


def as_plot(obj) -> Plot:
    return obj if isinstance(obj, Plot) else Plot(obj)


def _assignment_sign(used: int, block: Sequence[int]) -> int:
    inversions = sum(1 for x in block for s in range(32) if used >> s & 1 and s > x)
    return -1 if inversions % 2 else 1


def _mask(block):
    out = 0
    for x in block:
        out |= 1 << x
    return out


class PairingGrid:
    """Quadrature grid on ``U × [0,1]`` with the plot's chart evaluated once."""

    def __init__(self, plot: Plot, quad: QuadratureSpec):
        self.plot = plot
        self.quad = quad
        self.m = plot.m
        nodes, weights, _ = composite_rule(quad.q, quad.P)
        self.nt = len(nodes)
        if self.m:
            grids = np.meshgrid(*([nodes] * self.m), indexing="ij")
            xs = np.stack([g.ravel() for g in grids], axis=1)
            wx = np.prod(np.meshgrid(*([weights] * self.m), indexing="ij"), axis=0).ravel()
        else:
            xs = np.zeros((1, 0))
            wx = np.ones(1)
        self.nx = len(xs)
        if self.nx * self.nt > quad.budget:
            raise QuadratureBudgetError(f"{self.nx * self.nt} evaluation points exceed the budget {quad.budget}")
        pts = np.concatenate([np.repeat(xs, self.nt, axis=0), np.tile(nodes, self.nx)[:, None]], axis=1)
        values, jac = plot.path.chart(pts)
        plot.path.ambient.check(values, "pairing quadrature")
        self.points = values
        self.jac = jac
        self.wx = wx
        self.wt = weights
        self._cache: dict = {}

    def factor(self, form: DifferentialForm, block: tuple) -> np.ndarray:
        """``ω(∂_t, ∂_{x_b} for b in block)`` on the grid, shape (nx, nt)."""
        key = (id(form), block)
        if key not in self._cache:
            cols = [self.m] + list(block)
            vectors = np.transpose(self.jac[:, :, cols], (0, 2, 1))
            vals = form.apply(self.points, vectors)
            self._cache[key] = (form, vals.reshape(self.nx, self.nt))
        return self._cache[key][1]

    def cumulative(self, values):
        return cumulative_integral(values, self.quad.q, self.quad.P)

    def total(self, values) -> float:
        return float(self.wx @ (values @ self.wt))


def _nested_tuple(grid: PairingGrid, forms: Sequence[DifferentialForm]) -> float:
    m = grid.m
    full = (1 << m) - 1
    result = 0.0

    def walk(i, prev, used, sign):
        nonlocal result
        p = forms[i].degree - 1
        free = [b for b in range(m) if not used >> b & 1]
        for block in itertools.combinations(free, p):
            f = grid.factor(forms[i], block)
            g = f if prev is None else prev * f
            new_used = used | _mask(block)
            new_sign = sign * _assignment_sign(used, block)
            if i == len(forms) - 1:
                if new_used == full:
                    result += new_sign * grid.total(g)
            else:
                walk(i + 1, grid.cumulative(g), new_used, new_sign)

    walk(0, None, 0, 1)
    return result


def _simplex_points(k: int, q: int, P: int):
    nodes, weights, _ = composite_rule(q, P)
    grids = np.meshgrid(*([nodes] * k), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.meshgrid(*([weights] * k), indexing="ij"), axis=0).ravel()
    t = np.empty_like(u)
    t[:, k - 1] = u[:, k - 1]
    for i in range(k - 2, -1, -1):
        t[:, i] = t[:, i + 1] * u[:, i]
    jac = np.ones(len(u))
    for i in range(k):
        jac *= u[:, i] ** i
    return t, w * jac


def _collapsed_tuple(plot: Plot, forms: Sequence[DifferentialForm], quad: QuadratureSpec) -> float:
    k, m = len(forms), plot.m
    nodes, weights, _ = composite_rule(quad.q, quad.P)
    tpts, tw = _simplex_points(k, quad.q, quad.P)
    if m:
        grids = np.meshgrid(*([nodes] * m), indexing="ij")
        xs = np.stack([g.ravel() for g in grids], axis=1)
        wx = np.prod(np.meshgrid(*([weights] * m), indexing="ij"), axis=0).ravel()
    else:
        xs, wx = np.zeros((1, 0)), np.ones(1)
    count = len(tpts) * len(xs) * k
    if count > quad.budget:
        raise QuadratureBudgetError(f"{count} evaluations exceed the budget {quad.budget}")
    weight = (wx[:, None] * tw[None, :]).ravel()
    evals = []
    for i in range(k):
        pts = np.concatenate([np.repeat(xs, len(tpts), axis=0), np.tile(tpts[:, i], len(xs))[:, None]], axis=1)
        vals, jac = plot.path.chart(pts)
        plot.path.ambient.check(vals, "pairing quadrature")
        evals.append((vals, jac))
    total = 0.0
    degrees = [f.degree - 1 for f in forms]

    def assign(i, used, sign, acc):
        nonlocal total
        if i == k:
            if used == (1 << m) - 1:
                total += sign * float(weight @ acc)
            return
        free = [b for b in range(m) if not used >> b & 1]
        for block in itertools.combinations(free, degrees[i]):
            vals, jac = evals[i]
            vectors = np.transpose(jac[:, :, [m] + list(block)], (0, 2, 1))
            f = forms[i].apply(vals, vectors)
            assign(i + 1, used | _mask(block), sign * _assignment_sign(used, block), acc * f)

    assign(0, 0, 1, np.ones(len(weight)))
    return total


def degree_gate(forms: Sequence[DifferentialForm], m: int) -> bool:
    return sum(f.degree for f in forms) - len(forms) == m


def iterated_integral(forms: Sequence[DifferentialForm], plot, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Pairing ``⟨∫ω_1…ω_k, plot⟩``.

    Returns ``δ_0^m`` for k = 0 and exactly 0 when ``Σ deg - k != m``.
    """
    plot = as_plot(plot)
    forms = list(forms)
    if any(f.degree < 1 for f in forms):
        raise ValueError("iterated integrals need forms of positive degree")
    if not forms:
        return 1.0 if plot.m == 0 else 0.0
    if not degree_gate(forms, plot.m):
        return 0.0
    if quad.mode == "collapsed":
        return _collapsed_tuple(plot, forms, quad)
    return _nested_tuple(PairingGrid(plot, quad), forms)


def iterated_integral_with_error(forms, plot, quad: QuadratureSpec = QuadratureSpec()):
    """Value and the refinement estimate ``|I(P) - I(P/2)|``."""
    value = iterated_integral(forms, plot, quad)
    if quad.P < 2:
        return value, float("nan")
    return value, abs(value - iterated_integral(forms, plot, quad.coarsened()))


def _boundary_pairing(forms, path: NPath, quad) -> float:
    """∫_U dη for η = (∫ω…)_φ, computed as the oriented sum over faces of U."""
    m = path.arity - 1
    if m == 1:
        return iterated_integral(forms, path.restrict(0, 1.0), quad) - iterated_integral(forms, path.restrict(0, 0.0), quad)
    if m == 2:
        total = 0.0
        for axis, sign in ((0, 1), (1, -1)):
            total += sign * (
                iterated_integral(forms, path.restrict(axis, 1.0), quad)
                - iterated_integral(forms, path.restrict(axis, 0.0), quad)
            )
        return total
    raise ValueError("boundary pairing needs a plot of dimension 1 or 2")


def stokes_sides(forms: Sequence[DifferentialForm], path: NPath, quad: QuadratureSpec = QuadratureSpec(), step: float = 1e-5):
    """Both sides of the derivative formula for iterated integrals paired with a plot.

    The left side is ``⟨d∫ω_1…ω_k, φ⟩`` via Stokes on the cube; the right side
    is ``Σ (-1)^{ν_{i-1}+1} ⟨∫…dω_i…, φ⟩ + Σ (-1)^{ν_i+1} ⟨∫…(ω_i∧ω_{i+1})…, φ⟩``
    with ``ν_i = deg ω_1 + … + deg ω_i - i``.
    """
    forms = list(forms)
    k = len(forms)
    nu = [0]
    for f in forms:
        nu.append(nu[-1] + f.degree - 1)
    left = _boundary_pairing(forms, path, quad)
    right = 0.0
    for i in range(k):
        d_i = forms[i].exterior_derivative(step)
        right += (-1) ** (nu[i] + 1) * iterated_integral(forms[:i] + [d_i] + forms[i + 1:], path, quad)
    for i in range(k - 1):
        merged = wedge(forms[i], forms[i + 1])
        right += (-1) ** (nu[i + 1] + 1) * iterated_integral(forms[:i] + [merged] + forms[i + 2:], path, quad)
    return left, right


def stokes_residual(forms, path: NPath, quad: QuadratureSpec = QuadratureSpec(), step: float = 1e-5) -> float:
    left, right = stokes_sides(forms, path, quad, step)
    return abs(left - right)
