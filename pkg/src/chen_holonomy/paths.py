"""n-paths with sitting instants and their compositions.

An :class:`NPath` is a smooth map ``[0,1]^n -> R^d`` whose last coordinate is
the path direction.  Besides the true geometry (``evaluate``/``jacobian``)
every path exposes a *quadrature chart*: a reparametrization of the cube that
leaves all iterated-integral pairings unchanged but removes the flat sitting
transitions, so Gauss-Legendre rules see smooth, often polynomial,
integrands.

A chart is always of the form ``(x, t) -> path(psi(x), tau(x, t))`` with psi a
product of monotone maps of the plot coordinates and tau monotone in t.  The
``chart_key`` identifies psi; two paths can be glued along t inside a chart
only when their keys agree (``"*"`` marks paths constant in the plot
coordinates, which agree with anything).
"""

from __future__ import annotations

import itertools
from typing import Callable

import numpy as np

from .forms import AmbientSpace, euclidean

DEFAULT_MARGIN = 0.1
SEAM_TOLERANCE = 1e-12
WILDCARD = "*"
IDENTITY = ("id",)


class PathError(ValueError):
    """Invalid path construction (mismatched seams, bad margin, ...)."""


# ---------------------------------------------------------------- flattening


def _flat_exp(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """Return h(x) and h'(x) for the exp(-1/x) transition, 0 for x<=0 and 1 for x>=1."""
    x = np.asarray(x, dtype=float)
    a, b = _flat_exp(x), _flat_exp(1.0 - x)
    total = a + b
    h = a / total
    da = np.zeros_like(x)
    db = np.zeros_like(x)
    pos = x > 0
    da[pos] = a[pos] / x[pos] ** 2
    pos = x < 1
    db[pos] = -b[pos] / (1.0 - x[pos]) ** 2
    dh = (da * b - a * db) / total ** 2
    return h, dh


def flatten(t, eps: float = DEFAULT_MARGIN):
    """The sitting reparametrization rho_eps and its derivative.

    rho is 0 on [0, eps], 1 on [1 - eps, 1] and a smooth exp(-1/x) transition
    in between.
    """
    width = 1.0 - 2.0 * eps
    h, dh = smooth_step((np.asarray(t, dtype=float) - eps) / width)
    return h, dh / width


def _check_margin(eps):
    if not 0.0 < eps < 0.5:
        raise PathError(f"sitting margin {eps} must lie in (0, 1/2)")


# ---------------------------------------------------------------- raw maps


class RawMap:
    """Smooth map [0,1]^n -> R^d with a vectorized Jacobian (N, d, n).

    When ``jacobian`` is omitted central differences with step 1e-6 are used.
    """

    def __init__(self, arity: int, dim: int, evaluate: Callable, jacobian: Callable | None = None):
        self.arity = arity
        self.dim = dim
        self._evaluate = evaluate
        self._jacobian = jacobian

    def evaluate(self, u):
        return np.asarray(self._evaluate(u), dtype=float).reshape(len(u), self.dim)

    def jacobian(self, u):
        if self._jacobian is not None:
            return np.asarray(self._jacobian(u), dtype=float).reshape(len(u), self.dim, self.arity)
        h = 1e-6
        out = np.empty((len(u), self.dim, self.arity))
        for k in range(self.arity):
            e = np.zeros(self.arity)
            e[k] = h
            out[:, :, k] = (self.evaluate(u + e) - self.evaluate(u - e)) / (2 * h)
        return out

    def precompose(self, inner: "RawMap") -> "RawMap":
        """``self ∘ inner`` where ``inner`` maps the cube to itself."""
        if inner.dim != self.arity:
            raise PathError("reparametrization dimension mismatch")

        def evaluate(u):
            return self.evaluate(inner.evaluate(u))

        def jacobian(u):
            return np.einsum("ndk,nkj->ndj", self.jacobian(inner.evaluate(u)), inner.jacobian(u))

        return RawMap(inner.arity, self.dim, evaluate, jacobian)


class PolynomialMap(RawMap):
    """Tensor-product polynomial map; ``coeffs`` has shape (d, k_1, ..., k_n)."""

    def __init__(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim < 2:
            raise PathError("polynomial coefficients need shape (d, k_1, ..., k_n)")
        self.coeffs = coeffs
        super().__init__(coeffs.ndim - 1, coeffs.shape[0], self._eval, self._jac)

    def _powers(self, u):
        # list over axes of (N, k_i) power tables and their derivatives
        pows, dpows = [], []
        for i, k in enumerate(self.coeffs.shape[1:]):
            e = np.arange(k)
            x = u[:, i:i + 1]
            pows.append(x ** e)
            de = np.zeros((len(u), k))
            if k > 1:
                de[:, 1:] = e[1:] * x ** (e[1:] - 1)
            dpows.append(de)
        return pows, dpows

    def _eval(self, u):
        pows, _ = self._powers(u)
        letters = "abcdefgh"[: len(pows)]
        spec = "D" + letters + "," + ",".join("x" + c for c in letters) + "->xD"
        return np.einsum(spec, self.coeffs, *pows)

    def _jac(self, u):
        pows, dpows = self._powers(u)
        letters = "abcdefgh"[: len(pows)]
        spec = "D" + letters + "," + ",".join("x" + c for c in letters) + "->xD"
        cols = []
        for i in range(len(pows)):
            tabs = [dpows[j] if j == i else pows[j] for j in range(len(pows))]
            cols.append(np.einsum(spec, self.coeffs, *tabs))
        return np.stack(cols, axis=2)


# ---------------------------------------------------------------- n-paths


def _merge_keys(a, b):
    if a == WILDCARD:
        return b
    if b == WILDCARD or a == b:
        return a
    return None


class NPath:
    """Base class for smooth maps [0,1]^n -> ambient with sitting instants."""

    arity: int
    ambient: AmbientSpace
    eps: float

    def evaluate(self, pts) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, pts) -> np.ndarray:
        raise NotImplementedError

    @property
    def chart_key(self):
        raise NotImplementedError

    def chart(self, pts, x_identity: bool = False):
        """Values and Jacobian (N, d), (N, d, n) of the quadrature chart."""
        raise NotImplementedError

    @property
    def dim(self) -> int:
        return self.ambient.dim

    def __call__(self, *coords):
        pts = np.asarray(coords, dtype=float).reshape(1, self.arity)
        return self.evaluate(pts)[0]

    def restrict(self, axis: int, value: float) -> "NPath":
        """Fix plot coordinate ``axis`` (0-based, not the path axis) at ``value``."""
        return Restricted(self, axis, value)

    def _pts(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[1] != self.arity:
            raise ValueError(f"expected points in [0,1]^{self.arity}")
        return pts


class SittingPath(NPath):
    """A raw smooth map precomposed with rho_eps in every coordinate."""

    def __init__(self, raw: RawMap, eps: float = DEFAULT_MARGIN, ambient: AmbientSpace | None = None):
        _check_margin(eps)
        self.raw = raw
        self.arity = raw.arity
        self.eps = eps
        self.ambient = ambient or euclidean(raw.dim)
        if self.ambient.dim != raw.dim:
            raise PathError("ambient dimension does not match the raw map")

    def evaluate(self, pts):
        rho, _ = flatten(self._pts(pts), self.eps)
        return self.raw.evaluate(rho)

    def jacobian(self, pts):
        rho, drho = flatten(self._pts(pts), self.eps)
        return self.raw.jacobian(rho) * drho[:, None, :]

    @property
    def chart_key(self):
        return () if self.arity == 1 else ("rho", self.eps)

    def chart(self, pts, x_identity=False):
        pts = self._pts(pts)
        if not x_identity or self.arity == 1:
            return self.raw.evaluate(pts), self.raw.jacobian(pts)
        u = pts.copy()
        scale = np.ones_like(u)
        u[:, :-1], scale[:, :-1] = flatten(pts[:, :-1], self.eps)
        return self.raw.evaluate(u), self.raw.jacobian(u) * scale[:, None, :]


def make_sitting(raw, eps: float = DEFAULT_MARGIN, ambient: AmbientSpace | None = None) -> SittingPath:
    """Precompose a raw smooth map with the flattening rho_eps in every coordinate."""
    _check_margin(eps)
    if not isinstance(raw, RawMap):
        raise TypeError("make_sitting expects a RawMap")
    return SittingPath(raw, eps, ambient)


class ConstantPath(NPath):
    def __init__(self, point, arity: int = 1, ambient: AmbientSpace | None = None, eps: float = 0.25):
        self.point = np.asarray(point, dtype=float).ravel()
        self.arity = arity
        self.eps = eps
        self.ambient = ambient or euclidean(len(self.point))

    def evaluate(self, pts):
        pts = self._pts(pts)
        return np.broadcast_to(self.point, (len(pts), len(self.point))).copy()

    def jacobian(self, pts):
        return np.zeros((len(self._pts(pts)), len(self.point), self.arity))

    @property
    def chart_key(self):
        return () if self.arity == 1 else WILDCARD

    def chart(self, pts, x_identity=False):
        return self.evaluate(pts), self.jacobian(pts)


def constant_path(point, arity: int = 1, ambient: AmbientSpace | None = None) -> ConstantPath:
    return ConstantPath(point, arity, ambient)


class Lifted(NPath):
    """A k-path viewed as an n-path constant in the leading n-k coordinates."""

    def __init__(self, base: NPath, arity: int):
        if arity < base.arity:
            raise PathError("cannot lift to a smaller arity")
        self.base = base
        self.arity = arity
        self.eps = base.eps
        self.ambient = base.ambient
        self._skip = arity - base.arity

    def evaluate(self, pts):
        return self.base.evaluate(self._pts(pts)[:, self._skip:])

    def jacobian(self, pts):
        pts = self._pts(pts)
        out = np.zeros((len(pts), self.dim, self.arity))
        out[:, :, self._skip:] = self.base.jacobian(pts[:, self._skip:])
        return out

    @property
    def chart_key(self):
        if self.base.arity == 1:
            return WILDCARD
        return ("lift", self._skip, self.base.chart_key)

    def chart(self, pts, x_identity=False):
        pts = self._pts(pts)
        val, jac = self.base.chart(pts[:, self._skip:], x_identity)
        out = np.zeros((len(pts), self.dim, self.arity))
        out[:, :, self._skip:] = jac
        return val, out


def lift_constant(base: NPath, arity: int) -> Lifted:
    return Lifted(base, arity)


class Glued(NPath):
    """Concatenation of two n-paths along ``axis`` with the seam at 1/2."""

    def __init__(self, first: NPath, second: NPath, axis: int):
        if first.arity != second.arity:
            raise PathError("cannot glue paths of different arity")
        if first.dim != second.dim:
            raise PathError("cannot glue paths in different ambient spaces")
        self.first, self.second, self.axis = first, second, axis
        self.arity = first.arity
        self.ambient = first.ambient
        self.eps = min(first.eps, second.eps) / 2

    def _split(self, pts):
        pts = self._pts(pts)
        lower = pts[:, self.axis] <= 0.5
        a = pts[lower].copy()
        a[:, self.axis] = 2 * a[:, self.axis]
        b = pts[~lower].copy()
        b[:, self.axis] = 2 * b[:, self.axis] - 1
        return pts, lower, a, b

    def _combine(self, pts, lower, va, vb, shape):
        out = np.empty((len(pts),) + shape)
        out[lower] = va
        out[~lower] = vb
        return out

    def evaluate(self, pts):
        pts, lower, a, b = self._split(pts)
        return self._combine(pts, lower, self.first.evaluate(a), self.second.evaluate(b), (self.dim,))

    def jacobian(self, pts):
        pts, lower, a, b = self._split(pts)
        out = self._combine(pts, lower, self.first.jacobian(a), self.second.jacobian(b), (self.dim, self.arity))
        out[:, :, self.axis] *= 2
        return out

    @property
    def _path_glue(self):
        return self.axis == self.arity - 1

    @property
    def chart_key(self):
        if self._path_glue:
            merged = _merge_keys(self.first.chart_key, self.second.chart_key)
            return IDENTITY if merged is None else merged
        return ("cat", self.axis, self.first.chart_key, self.second.chart_key)

    def chart(self, pts, x_identity=False):
        if self._path_glue and not x_identity:
            x_identity = _merge_keys(self.first.chart_key, self.second.chart_key) is None
        pts, lower, a, b = self._split(pts)
        va, ja = self.first.chart(a, x_identity)
        vb, jb = self.second.chart(b, x_identity)
        val = self._combine(pts, lower, va, vb, (self.dim,))
        jac = self._combine(pts, lower, ja, jb, (self.dim, self.arity))
        jac[:, :, self.axis] *= 2
        return val, jac


class Restricted(NPath):
    """The (n-1)-path obtained by fixing one plot coordinate."""

    def __init__(self, parent: NPath, axis: int, value: float):
        if not 0 <= axis < parent.arity - 1:
            raise PathError("only plot coordinates (not the path axis) can be restricted")
        self.parent, self.axis, self.value = parent, axis, float(value)
        self.arity = parent.arity - 1
        self.ambient = parent.ambient
        self.eps = parent.eps
        self._face = self.value in (0.0, 1.0)

    def _full(self, pts):
        pts = self._pts(pts)
        return np.insert(pts, self.axis, self.value, axis=1)

    def evaluate(self, pts):
        return self.parent.evaluate(self._full(pts))

    def jacobian(self, pts):
        return np.delete(self.parent.jacobian(self._full(pts)), self.axis, axis=2)

    @property
    def chart_key(self):
        if self.arity == 1:
            return ()
        if self._face:
            return ("face", self.axis, self.value, self.parent.chart_key)
        return IDENTITY

    def chart(self, pts, x_identity=False):
        val, jac = self.parent.chart(self._full(pts), x_identity or not self._face)
        return val, np.delete(jac, self.axis, axis=2)


class Reparametrized(NPath):
    """``path`` precomposed with a monotone endpoint-fixing map on one axis."""

    def __init__(self, path: NPath, axis: int, phi: Callable, dphi: Callable, tag: str = "phi"):
        self.path, self.axis = path, axis
        self.phi, self.dphi, self.tag = phi, dphi, tag
        self.arity = path.arity
        self.ambient = path.ambient
        self.eps = path.eps

    def _map(self, pts):
        pts = self._pts(pts)
        u = pts.copy()
        u[:, self.axis] = self.phi(pts[:, self.axis])
        return u, self.dphi(pts[:, self.axis])

    def evaluate(self, pts):
        return self.path.evaluate(self._map(pts)[0])

    def jacobian(self, pts):
        u, d = self._map(pts)
        jac = self.path.jacobian(u)
        jac[:, :, self.axis] *= d[:, None]
        return jac

    @property
    def chart_key(self):
        if self.axis == self.arity - 1:
            return self.path.chart_key
        return ("reparam", self.axis, self.tag, id(self.phi), self.path.chart_key)

    def chart(self, pts, x_identity=False):
        u, d = self._map(pts)
        val, jac = self.path.chart(u, x_identity)
        jac[:, :, self.axis] *= d[:, None]
        return val, jac


# ---------------------------------------------------------------- checks


def _seam_error(kind, a, b):
    return PathError(f"{kind} mismatch: {np.array2string(np.asarray(a), precision=12)} vs {np.array2string(np.asarray(b), precision=12)}")


def _probe(k: int, n: int = 33):
    """Tensor grid of n^k points in [0,1]^k."""
    grid = np.linspace(0.0, 1.0, n)
    if k == 0:
        return np.zeros((1, 0))
    return np.array(list(itertools.product(grid, repeat=k)))


def _check_equal(kind, va, vb, tol=SEAM_TOLERANCE):
    diff = np.max(np.abs(va - vb), axis=1)
    if np.any(diff > tol):
        k = int(np.argmax(diff))
        raise _seam_error(kind, va[k], vb[k])


def _face_values(path: NPath, axis: int, value: float, n: int = 17):
    probe = _probe(path.arity - 1, n)
    pts = np.insert(probe, axis, value, axis=1)
    return path.evaluate(pts)


# ---------------------------------------------------------------- compositions


def compose1(first: NPath, second: NPath) -> NPath:
    """Speed-doubled concatenation of 1-paths."""
    if first.arity != 1 or second.arity != 1:
        raise PathError("compose1 expects 1-paths")
    a, b = first(1.0), second(0.0)
    if np.max(np.abs(a - b)) > SEAM_TOLERANCE:
        raise _seam_error("endpoint", a, b)
    return Glued(first, second, 0)


def vertical2(g: NPath, h: NPath) -> NPath:
    """``(g·h)(s,t)``: g(2s,t) for s <= 1/2, h(2s-1,t) otherwise."""
    if g.arity != 2 or h.arity != 2:
        raise PathError("vertical2 expects 2-paths")
    _check_equal("seam", _face_values(g, 0, 1.0), _face_values(h, 0, 0.0))
    return Glued(g, h, 0)


def horizontal2(h1: NPath, h2: NPath) -> NPath:
    """``(h1∘h2)(s,t)``: h1(s,2t) for t <= 1/2, h2(s,2t-1) otherwise."""
    if h1.arity != 2 or h2.arity != 2:
        raise PathError("horizontal2 expects 2-paths")
    _check_equal("seam", _face_values(h1, 1, 1.0), _face_values(h2, 1, 0.0))
    return Glued(h1, h2, 1)


def _path_lift(gamma: NPath, arity: int) -> NPath:
    return lift_constant(gamma, arity)


def lam_horizontal_lower(h1: NPath, h2: NPath) -> NPath:
    """``(h1∘h2(0,-))·(h1(1,-)∘h2)``."""
    _check_equal("seam", _face_values(h1, 1, 1.0), _face_values(h2, 1, 0.0))
    top = Glued(h1, _path_lift(h2.restrict(0, 0.0), 2), 1)
    bottom = Glued(_path_lift(h1.restrict(0, 1.0), 2), h2, 1)
    return Glued(top, bottom, 0)


def lam_horizontal_upper(h1: NPath, h2: NPath) -> NPath:
    """``(h1(0,-)∘h2)·(h1∘h2(1,-))``."""
    _check_equal("seam", _face_values(h1, 1, 1.0), _face_values(h2, 1, 0.0))
    top = Glued(_path_lift(h1.restrict(0, 0.0), 2), h2, 1)
    bottom = Glued(h1, _path_lift(h2.restrict(0, 1.0), 2), 1)
    return Glued(top, bottom, 0)


def _whisker(gamma: NPath, path: NPath, side: str, arity: int) -> NPath:
    if gamma.arity != 1 or path.arity != arity:
        raise PathError(f"whiskering expects a 1-path and a {arity}-path")
    if side == "left":
        _check_equal("whisker", np.broadcast_to(gamma(1.0), (1, gamma.dim)), _face_values(path, arity - 1, 0.0))
        return Glued(_path_lift(gamma, arity), path, arity - 1)
    if side == "right":
        _check_equal("whisker", _face_values(path, arity - 1, 1.0), np.broadcast_to(gamma(0.0), (1, gamma.dim)))
        return Glued(path, _path_lift(gamma, arity), arity - 1)
    raise PathError("side must be 'left' or 'right'")


def whisker2(gamma: NPath, g: NPath, side: str = "left") -> NPath:
    """Left: γ∘g (γ(2t) then g(s,2t-1)); right: g∘γ."""
    return _whisker(gamma, g, side, 2)


def whisker3(gamma: NPath, J: NPath, side: str = "left") -> NPath:
    return _whisker(gamma, J, side, 3)


def upward3(J: NPath, K: NPath) -> NPath:
    """``J∗K(r,s,t)``: J(2r,s,t) for r <= 1/2, K(2r-1,s,t) otherwise."""
    if J.arity != 3 or K.arity != 3:
        raise PathError("upward3 expects 3-paths")
    _check_equal("seam", _face_values(J, 0, 1.0), _face_values(K, 0, 0.0))
    return Glued(J, K, 0)


def vertical3(J: NPath, K: NPath) -> NPath:
    """``J·K(r,s,t)``: J(r,2s,t) for s <= 1/2, K(r,2s-1,t) otherwise."""
    if J.arity != 3 or K.arity != 3:
        raise PathError("vertical3 expects 3-paths")
    _check_equal("seam", _face_values(J, 1, 1.0), _face_values(K, 1, 0.0))
    return Glued(J, K, 1)


def lam_horizontal3(J: NPath, Jp: NPath) -> NPath:
    """Horizontal composite of good 3-paths: (J∘J'(0,0,-))·(J(0,1,-)∘J')."""
    top = whisker3(Jp.restrict(0, 0.0).restrict(0, 0.0), J, "right")
    bottom = whisker3(J.restrict(0, 0.0).restrict(0, 1.0), Jp, "left")
    return vertical3(top, bottom)


def lam_horizontal3_upper(J: NPath, Jp: NPath) -> NPath:
    """Other horizontal composite: (J(0,0,-)∘J')·(J∘J'(0,1,-))."""
    top = whisker3(J.restrict(0, 0.0).restrict(0, 0.0), Jp, "left")
    bottom = whisker3(Jp.restrict(0, 0.0).restrict(0, 1.0), J, "right")
    return vertical3(top, bottom)


# ---------------------------------------------------------------- witnesses


def _check_endpoint_fixing(phi):
    ends = phi(np.array([0.0, 1.0]))
    if abs(ends[0]) > 1e-12 or abs(ends[1] - 1.0) > 1e-12:
        raise PathError(f"reparametrization must fix endpoints, got phi(0)={ends[0]}, phi(1)={ends[1]}")
    grid = phi(np.linspace(0, 1, 257))
    if np.any(np.diff(grid) < -1e-12):
        raise PathError("reparametrization must be nondecreasing")


def reparametrize1(gamma: NPath, phi: Callable, dphi: Callable):
    """Rank-1 homotopy witness: returns ``(gamma, gamma∘phi)``."""
    _check_endpoint_fixing(phi)
    return gamma, Reparametrized(gamma, gamma.arity - 1, phi, dphi)


def cylinder_laminated(g: NPath, phi: Callable, dphi: Callable, axis: int = 0):
    """Laminated rank-2 witness: reparametrize the s (axis 0) or t (axis 1) axis of a 2-path."""
    if g.arity != 2:
        raise PathError("cylinder_laminated expects a 2-path")
    _check_endpoint_fixing(phi)
    return g, Reparametrized(g, axis, phi, dphi)


def _cube_warp(arity: int, warp: Callable, dwarp: Callable, axis: int) -> RawMap:
    """Map of the cube moving coordinate ``axis`` by a warp depending on all coordinates."""

    def evaluate(u):
        out = u.copy()
        out[:, axis] = warp(u)
        return out

    def jacobian(u):
        jac = np.broadcast_to(np.eye(arity), (len(u), arity, arity)).copy()
        jac[:, axis, :] = dwarp(u)
        return jac

    return RawMap(arity, arity, evaluate, jacobian)


def _precompose_path(path: NPath, inner: RawMap) -> NPath:
    if not isinstance(path, SittingPath):
        raise PathError("raw-level witnesses need a path built by make_sitting")
    return SittingPath(path.raw.precompose(inner), path.eps, path.ambient)


def rank2_witness(g: NPath, amplitude: float = 0.3):
    """Rank-2 (non-laminated) witness: warp s by an amount depending on t.

    The connecting homotopy factors through the 2-dimensional domain of g and
    fixes the faces s=0, s=1, so it has rank < 3.
    """
    a = amplitude

    def warp(u):
        s, t = u[:, 0], u[:, 1]
        return s + a * s * (1 - s) * np.sin(np.pi * t)

    def dwarp(u):
        s, t = u[:, 0], u[:, 1]
        return np.stack([1 + a * (1 - 2 * s) * np.sin(np.pi * t), a * s * (1 - s) * np.pi * np.cos(np.pi * t)], axis=1)

    return g, _precompose_path(g, _cube_warp(2, warp, dwarp, 0))


def pad3(J: NPath, amplitude: float = 0.3):
    """Rank-3 witness: warp r by an amount depending on s and t."""
    a = amplitude

    def warp(u):
        r, s, t = u[:, 0], u[:, 1], u[:, 2]
        return r + a * r * (1 - r) * np.sin(np.pi * t) * np.cos(np.pi * s)

    def dwarp(u):
        r, s, t = u[:, 0], u[:, 1], u[:, 2]
        st, ct = np.sin(np.pi * t), np.cos(np.pi * t)
        cs, ss = np.cos(np.pi * s), np.sin(np.pi * s)
        return np.stack(
            [
                1 + a * (1 - 2 * r) * st * cs,
                -a * r * (1 - r) * np.pi * st * ss,
                a * r * (1 - r) * np.pi * ct * cs,
            ],
            axis=1,
        )

    return J, _precompose_path(J, _cube_warp(3, warp, dwarp, 0))


def smoothstep(t):
    t = np.asarray(t, dtype=float)
    return t * t * (3 - 2 * t)


def smoothstep_cubed():
    """Threefold composite of the cubic smoothstep and its derivative."""

    def phi(t):
        return smoothstep(smoothstep(smoothstep(t)))

    def dphi(t):
        a = smoothstep(t)
        b = smoothstep(a)
        return 6 * b * (1 - b) * 6 * a * (1 - a) * 6 * t * (1 - t)

    return phi, dphi


def sine_warp(a: float):
    """Monotone map t + a sin(pi t)/pi for |a| < 1, and its derivative."""
    if abs(a) >= 1:
        raise PathError("sine warp needs |a| < 1")
    return (lambda t: t + a * np.sin(np.pi * t) / np.pi), (lambda t: 1 + a * np.cos(np.pi * t))


# ---------------------------------------------------------------- invariants


def check_sitting(path: NPath, samples: int = 5) -> float:
    """Largest variation inside the declared margins along each axis."""
    n = path.arity
    eps = path.eps
    base = _probe(n - 1, samples) if n > 1 else np.zeros((1, 0))
    worst = 0.0
    inner = np.array([0.0, 0.25 * eps, 0.5 * eps, 0.99 * eps])
    for axis in range(n):
        for ends in (inner, 1.0 - inner):
            pts = np.repeat(base, len(ends), axis=0)
            col = np.tile(ends, len(base))
            full = np.insert(pts, axis, col, axis=1)
            vals = path.evaluate(full).reshape(len(base), len(ends), -1)
            worst = max(worst, float(np.max(np.abs(vals - vals[:, :1]))))
    return worst


def check_face_collapse(path: NPath, samples: int = 9) -> float:
    """Spread of the images of the faces t=0 and t=1."""
    worst = 0.0
    for value in (0.0, 1.0):
        vals = _face_values(path, path.arity - 1, value, samples)
        worst = max(worst, float(np.max(np.abs(vals - vals[:1]))))
    return worst


def seam_jump(path: NPath, axis: int, probe: int = 101) -> float:
    """Largest jump across the seam at 1/2 along ``axis``.

    The other coordinates run over a ``probe``-point grid (per axis, capped
    so the sample stays small for 3-paths).
    """
    per_axis = probe if path.arity <= 2 else 21
    base = _probe(path.arity - 1, per_axis)
    left = np.insert(base, axis, 0.5, axis=1)
    right = np.insert(base, axis, np.nextafter(0.5, 1.0), axis=1)
    return float(np.max(np.abs(path.evaluate(left) - path.evaluate(right))))


def is_good_3path(J: NPath, grid: int = 9, tol: float = 1e-10) -> bool:
    """J(r,0,t) and J(r,1,t) independent of r on a grid^3 sample."""
    if J.arity != 3:
        return False
    pts = np.linspace(0, 1, grid)
    for s in (0.0, 1.0):
        sample = np.array([[r, s, t] for r in pts for t in pts])
        vals = J.evaluate(sample).reshape(grid, grid, -1)
        if np.max(np.abs(vals - vals[:1])) > tol:
            return False
    return True
