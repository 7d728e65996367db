"""Bundled coalgebras, connections and path families.

Every preset is built from a family of closed forms of odd degree whose
pointwise products are the only relations needed.  The coalgebra has one
basis element ``c_A`` per nonempty set ``A`` of generators (up to the degree
cap), paired with the ordered wedge ``ω_A`` of the generator forms, and

    Δ̄ c_A = Σ_{A = B ⊔ C, B, C ≠ ∅} sgn(B, C) c_B ⊗ c_C,

where ``sgn(B, C)`` is the sign of the shuffle putting ``B`` then ``C`` in
order.  With this choice ``d_Ω ω + dω = ε(ω) ∧ ω`` holds identically, because
``ω_B ∧ ω_C = sgn(B, C) ω_A`` and products of a generator with itself vanish.
For a single generator the coalgebra is the one-generator coalgebra with
``∂ = 0`` and ``Δ̄ = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .cobar import DEFAULT_TRUNCATION, word
from .coalgebra import DEFAULT_DEGREE_CAP, CoalgebraSpec, make_coalgebra
from .connection import Connection
from .forms import (
    AmbientSpace,
    DifferentialForm,
    configuration_space,
    coordinate_form,
    euclidean,
    gauss_form,
    permutation_sign,
    wedge,
)
from .paths import DEFAULT_MARGIN, NPath, RawMap, make_sitting


class PresetError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    id: str
    degree: int
    form: DifferentialForm


def exterior_coalgebra(generators: Sequence[Generator], degree_cap: int = DEFAULT_DEGREE_CAP):
    """Coalgebra on products of odd generators together with the product forms.

    Returns the coalgebra and a list of ``(id, form)`` pairs in basis order.
    """
    for g in generators:
        if g.degree % 2 == 0:
            raise PresetError(f"generator {g.id} must have odd degree")
    index = {g.id: k for k, g in enumerate(generators)}
    subsets = []
    for size in range(1, len(generators) + 1):
        for A in combinations(generators, size):
            if sum(g.degree for g in A) <= degree_cap:
                subsets.append(A)

    def name(A):
        return "^".join(g.id for g in A)

    degrees = {name(A): sum(g.degree for g in A) for A in subsets}
    coproduct = {}
    for A in subsets:
        if len(A) < 2:
            continue
        terms = {}
        for k in range(1, len(A)):
            for B in combinations(A, k):
                C = tuple(g for g in A if g not in B)
                sign = permutation_sign([index[g.id] for g in B + C])
                terms[(name(B), name(C))] = Fraction(sign)
        coproduct[name(A)] = terms
    spec = make_coalgebra(degrees, {}, coproduct, degree_cap=degree_cap)
    forms = []
    for A in subsets:
        form = A[0].form
        for g in A[1:]:
            form = wedge(form, g.form)
        forms.append((name(A), form))
    return spec, forms


# ---------------------------------------------------------------- path families


def line_path(v, start=None, eps: float = DEFAULT_MARGIN, ambient: AmbientSpace | None = None) -> NPath:
    """Straight line from ``start`` (default 0) to ``start + v``."""
    v = np.asarray(v, dtype=float)
    p0 = np.zeros_like(v) if start is None else np.asarray(start, dtype=float)
    raw = RawMap(1, len(v), lambda u: p0 + u[:, :1] * v, lambda u: np.broadcast_to(v[None, :, None], (len(u), len(v), 1)))
    return make_sitting(raw, eps, ambient)


def circle_loop(w: int = 1, radius: float = 1.0, center=(0.0, 0.0), eps: float = DEFAULT_MARGIN) -> NPath:
    """Loop around ``center`` in the plane with winding number ``w``."""
    c = np.asarray(center, dtype=float)

    def evaluate(u):
        th = 2 * np.pi * w * u[:, 0]
        return c + radius * np.stack([np.cos(th), np.sin(th)], axis=1)

    def jacobian(u):
        th = 2 * np.pi * w * u[:, 0]
        k = 2 * np.pi * w * radius
        return np.stack([-k * np.sin(th), k * np.cos(th)], axis=1)[:, :, None]

    return make_sitting(RawMap(1, 2, evaluate, jacobian), eps)


def full_twist_loop(w: int = 1, radius: float = 1.0, eps: float = DEFAULT_MARGIN) -> NPath:
    """Two points in the plane rotating w full turns about their midpoint; a loop in Conf(2, R^2)."""

    def evaluate(u):
        th = 2 * np.pi * w * u[:, 0]
        x1 = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        return np.concatenate([x1, -x1], axis=1)

    def jacobian(u):
        th = 2 * np.pi * w * u[:, 0]
        k = 2 * np.pi * w * radius
        d1 = k * np.stack([-np.sin(th), np.cos(th)], axis=1)
        return np.concatenate([d1, -d1], axis=1)[:, :, None]

    return make_sitting(RawMap(1, 4, evaluate, jacobian), eps, configuration_space(2, 2))


def braid_generator(m: int = 2, i: int = 0, half_twists: int = 1, eps: float = DEFAULT_MARGIN) -> NPath:
    """Points at (k, 0); strands i and i+1 exchange by half turns about their midpoint."""
    if not 0 <= i < m - 1:
        raise PresetError("braid generator index out of range")
    base = np.zeros((m, 2))
    base[:, 0] = np.arange(m)
    mid = i + 0.5

    def evaluate(u):
        th = np.pi * half_twists * u[:, 0]
        pts = np.broadcast_to(base, (len(u), m, 2)).copy()
        pts[:, i, 0] = mid - 0.5 * np.cos(th)
        pts[:, i, 1] = -0.5 * np.sin(th)
        pts[:, i + 1, 0] = mid + 0.5 * np.cos(th)
        pts[:, i + 1, 1] = 0.5 * np.sin(th)
        return pts.reshape(len(u), 2 * m)

    return make_sitting(RawMap(1, 2 * m, evaluate), eps, configuration_space(m, 2))


def _sphere_point(a, b, c):
    sa, sb = np.sin(a), np.sin(b)
    return np.stack([np.cos(a), sa * np.cos(b), sa * sb * np.cos(c), sa * sb * np.sin(c)], axis=1)


def _sphere_partials(a, b, c):
    sa, ca, sb, cb, sc, cc = np.sin(a), np.cos(a), np.sin(b), np.cos(b), np.sin(c), np.cos(c)
    da = np.stack([-sa, ca * cb, ca * sb * cc, ca * sb * sc], axis=1)
    db = np.stack([np.zeros_like(a), -sa * sb, sa * cb * cc, sa * cb * sc], axis=1)
    dc = np.stack([np.zeros_like(a), np.zeros_like(a), -sa * sb * sc, sa * sb * cc], axis=1)
    return da, db, dc


FAR_POINT = (5.0, 0.0, 0.0, 0.0)


def wrap3_path(w: int = 1, m: int = 2, eps: float = DEFAULT_MARGIN) -> NPath:
    """Good 3-path in Conf(m, R^4) whose relative direction x_1 - x_2 covers S^3 w times.

    Point 2 sits at the origin and point 1 moves on the unit sphere with polar
    angle pi*t (t the path coordinate), second angle pi*s and azimuth
    -2 pi w r; further points stay at ``(5 + k, 0, 0, 0)``.
    """
    if w < 0:
        raise PresetError("wrap count must be nonnegative")
    if m < 2:
        raise PresetError("wrap3_path needs at least two points")
    extra = [np.array(FAR_POINT) + np.array([k, 0.0, 0.0, 0.0]) for k in range(m - 2)]

    def evaluate(u):
        r, s, t = u[:, 0], u[:, 1], u[:, 2]
        x1 = _sphere_point(np.pi * t, np.pi * s, -2 * np.pi * w * r)
        parts = [x1, np.zeros_like(x1)] + [np.broadcast_to(e, x1.shape) for e in extra]
        return np.concatenate(parts, axis=1)

    def jacobian(u):
        r, s, t = u[:, 0], u[:, 1], u[:, 2]
        da, db, dc = _sphere_partials(np.pi * t, np.pi * s, -2 * np.pi * w * r)
        jac = np.zeros((len(u), 4 * m, 3))
        jac[:, :4, 0] = -2 * np.pi * w * dc
        jac[:, :4, 1] = np.pi * db
        jac[:, :4, 2] = np.pi * da
        return jac

    return make_sitting(RawMap(3, 4 * m, evaluate, jacobian), eps, configuration_space(m, 4))


# ---------------------------------------------------------------- random families


class RandomPaths:
    """Random polynomial n-paths sharing faces exactly so compositions are legal.

    Edges are triples ``(p0, p1, F)`` giving ``(1-t) p0 + t p1 + t(1-t) F(t)``;
    2-paths interpolate two edges in s plus a bubble ``s(1-s) G(s, t)``;
    3-paths interpolate two 2-path bubbles in r plus ``r(1-r) H`` inside an
    ``s(1-s)`` envelope, so they are good 3-paths.
    """

    def __init__(self, rng: np.random.Generator, base: Callable, amplitude: float, ambient: AmbientSpace, degree: int = 3, eps: float = DEFAULT_MARGIN):
        self.rng = rng
        self.base = base
        self.amp = amplitude
        self.ambient = ambient
        self.deg = degree
        self.eps = eps
        self.d = ambient.dim

    def point(self):
        return self.base(self.rng)

    def poly(self, arity):
        return self.amp * self.rng.uniform(-1, 1, size=(self.d,) + (self.deg,) * arity)

    def edge(self, p0=None, p1=None):
        p0 = self.point() if p0 is None else p0
        p1 = self.point() if p1 is None else p1
        return (p0, p1, self.poly(1))

    def bubble(self, e0, e1):
        return {"e0": e0, "e1": e1, "G": self.poly(2)}

    @staticmethod
    def _pw(x, k):
        return x[:, None] ** np.arange(k)

    def _edge_eval(self, e, t):
        p0, p1, F = e
        return np.einsum("da,na->nd", F, self._pw(t, F.shape[1]))

    def _raw1(self, e):
        p0, p1, F = e

        def evaluate(u):
            t = u[:, 0]
            return (1 - t)[:, None] * p0 + t[:, None] * p1 + (t * (1 - t))[:, None] * self._edge_eval(e, t)

        return RawMap(1, self.d, evaluate)

    def path1(self, e) -> NPath:
        return make_sitting(self._raw1(e), self.eps, self.ambient)

    def _bubble_eval(self, b, s, t):
        inner = (1 - s)[:, None] * self._edge_eval(b["e0"], t) + s[:, None] * self._edge_eval(b["e1"], t)
        G = b["G"]
        return inner + (s * (1 - s))[:, None] * np.einsum("dab,na,nb->nd", G, self._pw(s, G.shape[1]), self._pw(t, G.shape[2]))

    def path2(self, b) -> NPath:
        p0, p1, _ = b["e0"]

        def evaluate(u):
            s, t = u[:, 0], u[:, 1]
            return (1 - t)[:, None] * p0 + t[:, None] * p1 + (t * (1 - t))[:, None] * self._bubble_eval(b, s, t)

        return make_sitting(RawMap(2, self.d, evaluate), self.eps, self.ambient)

    def sheet(self, b0, b1):
        """3-path data between 2-path bubbles ``b0`` (r=0) and ``b1`` (r=1) sharing edges."""
        return {"b0": b0, "b1": b1, "H": self.poly(3)}

    def path3(self, sh) -> NPath:
        b0, b1, H = sh["b0"], sh["b1"], sh["H"]
        p0, p1, _ = b0["e0"]

        def evaluate(u):
            r, s, t = u[:, 0], u[:, 1], u[:, 2]
            edges = (1 - s)[:, None] * self._edge_eval(b0["e0"], t) + s[:, None] * self._edge_eval(b0["e1"], t)
            g0 = self._bubble_eval(b0, s, t) - edges
            g1 = self._bubble_eval(b1, s, t) - edges
            h = np.einsum("dabc,na,nb,nc->nd", H, self._pw(r, H.shape[1]), self._pw(s, H.shape[2]), self._pw(t, H.shape[3]))
            inner = edges + (1 - r)[:, None] * g0 + r[:, None] * g1 + (r * (1 - r) * s * (1 - s))[:, None] * h
            return (1 - t)[:, None] * p0 + t[:, None] * p1 + (t * (1 - t))[:, None] * inner

        return make_sitting(RawMap(3, self.d, evaluate), self.eps, self.ambient)


# ---------------------------------------------------------------- presets


@dataclass
class Preset:
    name: str
    coalgebra: CoalgebraSpec
    connection: Connection
    tolerance: float
    sampler: Callable
    base_point: Callable
    amplitude: float
    paths: dict = field(default_factory=dict)

    def sample_points(self, rng: np.random.Generator, count: int = 50) -> np.ndarray:
        return np.array([self.sampler(rng) for _ in range(count)])

    def random_paths(self, rng: np.random.Generator) -> RandomPaths:
        return RandomPaths(rng, self.base_point, self.amplitude, self.connection.ambient)


def _connection(spec, forms, ambient, name, truncation=DEFAULT_TRUNCATION):
    terms = [(form, word(spec, (ident,), truncation=truncation)) for ident, form in forms if spec.degree(ident) - 1 <= truncation.d_max]
    return Connection(spec, terms, ambient, name)


def signature_preset(d: int = 3) -> Preset:
    if d < 1:
        raise PresetError("signature preset needs d >= 1")
    ambient = euclidean(d)
    gens = [Generator(f"e{i + 1}", 1, coordinate_form(d, i, ambient)) for i in range(d)]
    spec, forms = exterior_coalgebra(gens)
    conn = _connection(spec, forms, ambient, f"signature:d={d}")
    return Preset(
        f"signature:d={d}",
        spec,
        conn,
        0.0,
        lambda rng: rng.normal(size=d),
        lambda rng: rng.uniform(-1, 1, size=d),
        0.5,
        {"line": line_path(np.arange(1, d + 1) / d)},
    )


def abelian_preset() -> Preset:
    ambient = euclidean(1)
    spec, forms = exterior_coalgebra([Generator("e", 1, coordinate_form(1, 0, ambient))])
    conn = _connection(spec, forms, ambient, "abelian")
    return Preset("abelian", spec, conn, 0.0, lambda rng: rng.normal(size=1), lambda rng: rng.uniform(-1, 1, size=1), 0.5, {"line": line_path([1.0])})


def _conf_base(m, n, spacing):
    centers = np.zeros((m, n))
    centers[:, 0] = spacing * (np.arange(m) - (m - 1) / 2)

    def base(rng):
        return (centers + 0.25 * rng.uniform(-1, 1, size=(m, n))).ravel()

    def sampler(rng):
        while True:
            p = rng.normal(size=(m, n)) * spacing
            dists = [np.linalg.norm(p[a] - p[b]) for a, b in combinations(range(m), 2)]
            if min(dists) > 0.2 * spacing:
                return p.ravel()

    return base, sampler


def winding_preset(m: int = 2) -> Preset:
    if m < 2:
        raise PresetError("winding preset needs m >= 2")
    ambient = configuration_space(m, 2)
    gens = []
    for i, j in combinations(range(m), 2):
        ident = "e" if m == 2 else f"e{i + 1}{j + 1}"
        form = gauss_form(2, i, j, m, normalize=True)
        form.ambient = ambient
        gens.append(Generator(ident, 1, form))
    spec, forms = exterior_coalgebra(gens)
    conn = _connection(spec, forms, ambient, f"winding:m={m}")
    base, sampler = _conf_base(m, 2, 2.0)
    paths = {f"full-twist:w={w}": full_twist_loop(w) for w in (1, 2, 3)} if m == 2 else {"braid-generator": braid_generator(m)}
    return Preset(f"winding:m={m}", spec, conn, 1e-8, sampler, base, 0.15, paths)


def gauss_preset(m: int = 2, n: int = 4) -> Preset:
    if n != 4:
        raise PresetError("the gauss preset is fixed to n = 4")
    if m < 2:
        raise PresetError("gauss preset needs m >= 2")
    ambient = configuration_space(m, n)
    gens = []
    for i, j in combinations(range(m), 2):
        form = gauss_form(n, i, j, m, normalize=True)
        form.ambient = ambient
        gens.append(Generator(f"c{i + 1}{j + 1}", n - 1, form))
    spec, forms = exterior_coalgebra(gens)
    conn = _connection(spec, forms, ambient, f"gauss:m={m},n={n}")
    base, sampler = _conf_base(m, n, 2.0)
    paths = {f"wrap3:w={w}": wrap3_path(w, m) for w in (0, 1, 2)}
    return Preset(f"gauss:m={m},n={n}", spec, conn, 1e-6, sampler, base, 0.15, paths)


def parse_preset_name(text: str):
    name, _, rest = text.strip().partition(":")
    params = {}
    if rest:
        for part in rest.split(","):
            if "=" not in part:
                raise PresetError(f"invalid preset parameter {part!r}")
            k, v = part.split("=", 1)
            try:
                params[k.strip()] = int(v)
            except ValueError as exc:
                raise PresetError(f"preset parameter {k} must be an integer") from exc
    return name, params


def preset(text: str) -> Preset:
    """Look up ``signature:d=D``, ``winding:m=M``, ``gauss:m=M,n=4`` or ``abelian``."""
    name, params = parse_preset_name(text)
    allowed = {"signature": {"d"}, "winding": {"m"}, "gauss": {"m", "n"}, "abelian": set()}
    if name not in allowed:
        raise PresetError(f"unknown preset {name!r}")
    extra = set(params) - allowed[name]
    if extra:
        raise PresetError(f"unknown parameters {sorted(extra)} for preset {name}")
    if name == "signature":
        return signature_preset(params.get("d", 3))
    if name == "winding":
        return winding_preset(params.get("m", 2))
    if name == "gauss":
        return gauss_preset(params.get("m", 2), params.get("n", 4))
    return abelian_preset()


def chord_count(m: int) -> int:
    return math.comb(m, 2)
