"""Differential forms on open subsets of R^d.

A degree-p form is stored through a vectorized coefficient evaluator on the
basis ``dx_I`` of strictly increasing multi-indices ``I`` (0-based, in
``itertools.combinations`` order).  Forms may carry analytic partial
derivatives; otherwise central differences are used.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np

DEFAULT_STEP = 1e-5


class MembershipError(ValueError):
    """A point left the open set on which a form or path lives."""


class AmbientSpace:
    """Open subset of R^d given by a vectorized membership predicate."""

    def __init__(self, dim: int, contains: Callable[[np.ndarray], np.ndarray] | None = None, name: str | None = None):
        if not 1 <= dim <= 64:
            raise ValueError("ambient dimension must be in [1, 64]")
        self.dim = dim
        self._contains = contains
        self.name = name or f"R^{dim}"

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.all(np.isfinite(pts), axis=1)
        if self._contains is not None:
            ok &= self._contains(pts)
        return ok

    def check(self, points, context: str = "") -> None:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ok = self.contains(pts)
        if not np.all(ok):
            bad = pts[np.argmin(ok)]
            where = f" during {context}" if context else ""
            raise MembershipError(f"point {np.array2string(bad, precision=6)} is outside {self.name}{where}")

    def __repr__(self):
        return f"AmbientSpace({self.name})"


def euclidean(dim: int) -> AmbientSpace:
    return AmbientSpace(dim, None, f"R^{dim}")


def punctured_plane(min_radius: float = 0.0) -> AmbientSpace:
    return AmbientSpace(2, lambda p: np.hypot(p[:, 0], p[:, 1]) > min_radius, "R^2 minus origin")


def configuration_space(m: int, n: int, min_separation: float = 0.0) -> AmbientSpace:
    """Conf(m, R^n): m pairwise distinct points, flattened point-major."""

    def contains(p):
        pts = p.reshape(len(p), m, n)
        ok = np.ones(len(p), dtype=bool)
        for a, b in combinations(range(m), 2):
            ok &= np.linalg.norm(pts[:, a] - pts[:, b], axis=1) > min_separation
        return ok

    space = AmbientSpace(m * n, contains, f"Conf({m}, R^{n})")
    space.points, space.point_dim = m, n
    return space


@lru_cache(maxsize=None)
def multi_indices(dim: int, degree: int) -> tuple:
    return tuple(combinations(range(dim), degree))


@lru_cache(maxsize=None)
def _index_lookup(dim: int, degree: int) -> dict:
    return {I: k for k, I in enumerate(multi_indices(dim, degree))}


def permutation_sign(seq: Sequence[int]) -> int:
    sign = 1
    seq = list(seq)
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                sign = -sign
            elif seq[a] == seq[b]:
                return 0
    return sign


@lru_cache(maxsize=None)
def _derivative_table(dim: int, degree: int):
    """Rows (target, source, coordinate, sign) for d of a degree-p form."""
    lookup = _index_lookup(dim, degree)
    rows = []
    for t, J in enumerate(multi_indices(dim, degree + 1)):
        for a, k in enumerate(J):
            rest = J[:a] + J[a + 1:]
            rows.append((t, lookup[rest], k, -1 if a % 2 else 1))
    return np.array(rows, dtype=int).reshape(-1, 4)


@lru_cache(maxsize=None)
def _wedge_table(dim: int, p: int, q: int):
    """Rows (target, left, right, sign) with dx_I ^ dx_J = sign dx_K."""
    lp, lq = _index_lookup(dim, p), _index_lookup(dim, q)
    rows = []
    for t, K in enumerate(multi_indices(dim, p + q)):
        for I in combinations(K, p):
            J = tuple(k for k in K if k not in I)
            rows.append((t, lp[I], lq[J], permutation_sign(I + J)))
    return np.array(rows, dtype=int).reshape(-1, 4)


class DifferentialForm:
    """Degree-p form on an open subset of R^d.

    Parameters
    ----------
    ambient : AmbientSpace
    degree : int
    coefficients : callable
        ``(N, d) -> (N, C(d, p))`` coefficient evaluator.
    partials : callable, optional
        ``(N, d) -> (N, C(d, p), d)`` analytic partial derivatives.
    name : str
    """

    def __init__(self, ambient: AmbientSpace, degree: int, coefficients, partials=None, name: str = "form"):
        if degree < 0:
            raise ValueError("form degree must be nonnegative")
        self.ambient = ambient
        self.dim = ambient.dim
        self.degree = degree
        self._coefficients = coefficients
        self._partials = partials
        self.name = name

    @property
    def components(self) -> tuple:
        return multi_indices(self.dim, self.degree)

    @property
    def has_analytic_derivative(self) -> bool:
        return self._partials is not None

    def _points(self, points, context):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {pts.shape[1]}")
        self.ambient.check(pts, context)
        return pts

    def coefficients(self, points) -> np.ndarray:
        pts = self._points(points, f"evaluation of {self.name}")
        return np.asarray(self._coefficients(pts), dtype=float).reshape(len(pts), len(self.components))

    def partials(self, points, step: float = DEFAULT_STEP) -> np.ndarray:
        pts = self._points(points, f"differentiation of {self.name}")
        if self._partials is not None:
            return np.asarray(self._partials(pts), dtype=float).reshape(len(pts), len(self.components), self.dim)
        out = np.empty((len(pts), len(self.components), self.dim))
        for k in range(self.dim):
            shift = np.zeros(self.dim)
            shift[k] = step
            plus, minus = pts + shift, pts - shift
            self.ambient.check(plus, f"finite-difference stencil of {self.name}")
            self.ambient.check(minus, f"finite-difference stencil of {self.name}")
            out[:, :, k] = (self._coefficients(plus) - self._coefficients(minus)) / (2 * step)
        return out

    def apply(self, points, vectors) -> np.ndarray:
        """Evaluate on tangent vectors; ``vectors`` has shape (N, p, d)."""
        coef = self.coefficients(points)
        return _apply_coefficients(coef, np.asarray(vectors, dtype=float), self.dim, self.degree)

    def exterior_derivative(self, step: float = DEFAULT_STEP) -> "DifferentialForm":
        table = _derivative_table(self.dim, self.degree)
        ntarget = len(multi_indices(self.dim, self.degree + 1))

        def coefficients(pts):
            grad = self.partials(pts, step)
            out = np.zeros((len(pts), ntarget))
            if len(table):
                np.add.at(out.T, table[:, 0], table[:, 3, None] * grad[:, table[:, 1], table[:, 2]].T)
            return out

        return DifferentialForm(self.ambient, self.degree + 1, coefficients, None, f"d({self.name})")

    def epsilon(self) -> "DifferentialForm":
        """The involution multiplying a degree-p form by (-1)^p."""
        return self.scale(-1.0 if self.degree % 2 else 1.0)

    def scale(self, factor: float) -> "DifferentialForm":
        partials = None
        if self._partials is not None:
            partials = lambda p: factor * self._partials(p)
        return DifferentialForm(self.ambient, self.degree, lambda p: factor * self._coefficients(p), partials, f"{factor}*{self.name}")

    def __add__(self, other: "DifferentialForm") -> "DifferentialForm":
        if other.degree != self.degree or other.dim != self.dim:
            raise ValueError("cannot add forms of different degree or dimension")
        partials = None
        if self._partials is not None and other._partials is not None:
            partials = lambda p: self._partials(p) + other._partials(p)
        return DifferentialForm(
            self.ambient, self.degree, lambda p: self._coefficients(p) + other._coefficients(p), partials, f"({self.name}+{other.name})"
        )

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} degree={self.degree} on {self.ambient.name}>"


def _apply_coefficients(coef, vectors, dim, degree):
    n = len(coef)
    if degree == 0:
        return coef[:, 0].copy()
    if degree == 1:
        return np.einsum("nc,nc->n", coef, vectors[:, 0, :])
    idx = np.array(multi_indices(dim, degree))
    if len(idx) == 0:
        return np.zeros(n)
    sub = vectors[:, :, idx]  # (N, p, C, p)
    dets = np.linalg.det(np.transpose(sub, (0, 2, 1, 3)))
    return np.einsum("nc,nc->n", coef, dets)


def zero_form(ambient: AmbientSpace, degree: int) -> "PolynomialForm":
    return PolynomialForm(ambient, degree, {})


def wedge(omega: DifferentialForm, psi: DifferentialForm) -> DifferentialForm:
    """Exterior product with shuffle signs; overflow gives the zero form of degree p+q."""
    if omega.dim != psi.dim:
        raise ValueError("wedge of forms on different ambient dimensions")
    p, q = omega.degree, psi.degree
    if isinstance(omega, PolynomialForm) and isinstance(psi, PolynomialForm):
        return omega.wedge(psi)
    table = _wedge_table(omega.dim, p, q)
    ntarget = len(multi_indices(omega.dim, p + q))

    def coefficients(pts):
        a, b = omega._coefficients(pts), psi._coefficients(pts)
        out = np.zeros((len(pts), ntarget))
        if len(table):
            np.add.at(out.T, table[:, 0], (table[:, 3] * (a[:, table[:, 1]] * b[:, table[:, 2]])).T)
        return out

    partials = None
    if omega._partials is not None and psi._partials is not None:

        def product_partials(pts):
            a, b = omega._coefficients(pts), psi._coefficients(pts)
            da, db = omega._partials(pts), psi._partials(pts)
            out = np.zeros((len(pts), ntarget, omega.dim))
            if len(table):
                l, r, s = table[:, 1], table[:, 2], table[:, 3]
                terms = s[None, :, None] * (da[:, l, :] * b[:, r, None] + a[:, l, None] * db[:, r, :])
                np.add.at(out.transpose(1, 0, 2), table[:, 0], terms.transpose(1, 0, 2))
            return out

        partials = product_partials

    return DifferentialForm(omega.ambient, p + q, coefficients, partials, f"{omega.name}^{psi.name}")


def exterior_derivative(omega: DifferentialForm, step: float = DEFAULT_STEP) -> DifferentialForm:
    return omega.exterior_derivative(step)


class SmoothMap:
    """Vectorized smooth map R^k -> R^d with a Jacobian evaluator ``(N, d, k)``."""

    def __init__(self, source_dim: int, target_dim: int, evaluate, jacobian):
        self.source_dim = source_dim
        self.target_dim = target_dim
        self.evaluate = evaluate
        self.jacobian = jacobian


def pullback(omega: DifferentialForm, f: SmoothMap) -> DifferentialForm:
    """Pull a form back along a smooth map; coefficients are sums of Jacobian minors."""
    k, p = f.source_dim, omega.degree
    if f.target_dim != omega.dim:
        raise ValueError("map target dimension does not match the form")
    source = euclidean(k)
    if p > k:
        return zero_form(source, p)
    src_idx = np.array(multi_indices(omega.dim, p)).reshape(-1, p)
    dst_idx = np.array(multi_indices(k, p)).reshape(-1, p)

    def coefficients(u):
        x = f.evaluate(u)
        omega.ambient.check(x, f"pullback of {omega.name}")
        coef = omega._coefficients(x)
        if p == 0:
            return coef
        jac = f.jacobian(u)  # (N, d, k)
        minors = jac[:, src_idx][:, :, :, dst_idx]  # (N, Cs, p, Cd, p)
        dets = np.linalg.det(np.transpose(minors, (0, 1, 3, 2, 4)))
        return np.einsum("ns,nsd->nd", coef, dets)

    return DifferentialForm(source, p, coefficients, None, f"pullback({omega.name})")


class PolynomialForm(DifferentialForm):
    """Form with polynomial coefficients and an exact exterior derivative.

    ``terms`` maps a multi-index (increasing tuple) to a list of
    ``(coefficient, powers)`` monomials with ``len(powers) == dim``.
    """

    def __init__(self, ambient: AmbientSpace, degree: int, terms: Mapping, name: str = "poly"):
        dim = ambient.dim
        lookup = _index_lookup(dim, degree)
        clean: dict = {}
        for I, monos in terms.items():
            I = tuple(int(i) for i in I)
            sign = permutation_sign(I)
            if sign == 0:
                continue
            key = tuple(sorted(I))
            if key not in lookup:
                raise ValueError(f"multi-index {I} invalid for degree {degree} on R^{dim}")
            acc = clean.setdefault(key, {})
            for c, powers in monos:
                powers = tuple(int(e) for e in powers)
                if len(powers) != dim or min(powers, default=0) < 0:
                    raise ValueError(f"monomial powers {powers} invalid on R^{dim}")
                acc[powers] = acc.get(powers, 0.0) + sign * float(c)
        self.terms = {I: {e: c for e, c in m.items() if c != 0} for I, m in clean.items()}
        self.terms = {I: m for I, m in self.terms.items() if m}
        self._lookup = lookup
        super().__init__(ambient, degree, self._eval, self._eval_partials, name)

    def _eval(self, pts):
        out = np.zeros((len(pts), len(self._lookup)))
        for I, monos in self.terms.items():
            col = out[:, self._lookup[I]]
            for e, c in monos.items():
                col += c * np.prod(pts ** np.array(e), axis=1)
        return out

    def _eval_partials(self, pts):
        out = np.zeros((len(pts), len(self._lookup), self.dim))
        for I, monos in self.terms.items():
            for e, c in monos.items():
                e = np.array(e)
                for k in range(self.dim):
                    if e[k] == 0:
                        continue
                    e2 = e.copy()
                    e2[k] -= 1
                    out[:, self._lookup[I], k] += c * e[k] * np.prod(pts ** e2, axis=1)
        return out

    def apply(self, points, vectors):
        vectors = np.asarray(vectors, dtype=float)
        if self.is_constant() and self.degree >= 1:
            self._points(points, f"evaluation of {self.name}")
            total = np.zeros(len(vectors))
            for I, monos in self.terms.items():
                c = sum(monos.values())
                if self.degree == 1:
                    total += c * vectors[:, 0, I[0]]
                else:
                    total += c * np.linalg.det(vectors[:, :, list(I)])
            return total
        return super().apply(points, vectors)

    def is_constant(self) -> bool:
        return all(all(sum(e) == 0 for e in m) for m in self.terms.values())

    def exterior_derivative(self, step: float = DEFAULT_STEP) -> "PolynomialForm":
        out: dict = {}
        for I, monos in self.terms.items():
            for e, c in monos.items():
                for k in range(self.dim):
                    if e[k] == 0 or k in I:
                        continue
                    e2 = list(e)
                    e2[k] -= 1
                    out.setdefault((k,) + I, []).append((c * e[k], tuple(e2)))
        return PolynomialForm(self.ambient, self.degree + 1, out, f"d({self.name})")

    def wedge(self, other: "PolynomialForm") -> "PolynomialForm":
        out: dict = {}
        if self.degree + other.degree <= self.dim:
            for I, m1 in self.terms.items():
                for J, m2 in other.terms.items():
                    if set(I) & set(J):
                        continue
                    for e1, c1 in m1.items():
                        for e2, c2 in m2.items():
                            out.setdefault(I + J, []).append((c1 * c2, tuple(a + b for a, b in zip(e1, e2))))
        return PolynomialForm(self.ambient, self.degree + other.degree, out, f"{self.name}^{other.name}")

    def scale(self, factor: float) -> "PolynomialForm":
        return PolynomialForm(
            self.ambient, self.degree, {I: [(c * factor, e) for e, c in m.items()] for I, m in self.terms.items()}, self.name
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "terms": [
                {"index": list(I), "monomials": [{"coeff": c, "powers": list(e)} for e, c in sorted(m.items())]}
                for I, m in sorted(self.terms.items())
            ],
        }


def constant_form(dim: int, terms: Mapping[tuple, float], ambient: AmbientSpace | None = None, name: str = "const") -> PolynomialForm:
    """Constant-coefficient form ``Σ c_I dx_I``."""
    ambient = ambient or euclidean(dim)
    degree = len(next(iter(terms))) if terms else 0
    return PolynomialForm(ambient, degree, {I: [(c, (0,) * dim)] for I, c in terms.items()}, name)


def coordinate_form(dim: int, index: int, ambient: AmbientSpace | None = None) -> PolynomialForm:
    return constant_form(dim, {(index,): 1.0}, ambient, f"dx{index + 1}")


def polynomial_form_from_dict(data: Mapping, ambient: AmbientSpace | None = None) -> PolynomialForm:
    dim = int(data["dim"])
    degree = int(data["degree"])
    terms = {}
    for entry in data.get("terms", []):
        terms.setdefault(tuple(entry["index"]), []).extend(
            (float(m["coeff"]), tuple(m["powers"])) for m in entry["monomials"]
        )
    return PolynomialForm(ambient or euclidean(dim), degree, terms)


def sphere_volume(n: int) -> float:
    """Volume of the unit sphere S^{n-1} in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


class GaussForm(DifferentialForm):
    """Pullback of the S^{n-1} volume form along y/|y|, y = x_i - x_j (or y = x_i).

    Coefficients are ``(-1)^k y_k / (V |y|^n)`` on ``dy`` with index k omitted,
    where V is the sphere volume when normalized and 1 otherwise.
    """

    def __init__(self, ambient: AmbientSpace, n: int, i: int, j: int | None, normalize: bool = True, name: str | None = None):
        if n < 2:
            raise ValueError("gauss form requires n >= 2")
        if j is not None and i == j:
            raise ValueError("gauss form requires i != j")
        self.n, self.i, self.j = n, i, j
        self.volume = sphere_volume(n) if normalize else 1.0
        dim = ambient.dim
        lookup = _index_lookup(dim, n - 1)
        L = np.zeros((len(lookup), n))
        blocks = [(i, 1)] + ([(j, -1)] if j is not None else [])
        for k in range(n):
            A = [a for a in range(n) if a != k]
            for choice in np.ndindex(*([len(blocks)] * (n - 1))):
                sign = 1
                idx = []
                for a, ch in zip(A, choice):
                    block, s = blocks[ch]
                    sign *= s
                    idx.append(block * n + a)
                perm = permutation_sign(idx)
                if perm:
                    L[lookup[tuple(sorted(idx))], k] += sign * perm
        self._L = L
        super().__init__(ambient, n - 1, self._eval, self._eval_partials, name or f"gauss(n={n},i={i + 1},j={'-' if j is None else j + 1})")

    def _difference(self, pts):
        n = self.n
        y = pts[:, self.i * n:(self.i + 1) * n]
        if self.j is not None:
            y = y - pts[:, self.j * n:(self.j + 1) * n]
        return y

    def _eval(self, pts):
        y = self._difference(pts)
        r = np.linalg.norm(y, axis=1)
        signs = (-1.0) ** np.arange(self.n)
        a = signs * y / (self.volume * r[:, None] ** self.n)
        return a @ self._L.T

    def _eval_partials(self, pts):
        n = self.n
        y = self._difference(pts)
        r2 = np.einsum("ni,ni->n", y, y)
        signs = (-1.0) ** np.arange(n)
        # da_k/dy_l = (-1)^k / V * (delta_kl / r^n - n y_k y_l / r^{n+2})
        dady = np.eye(n)[None] / r2[:, None, None] ** (n / 2) - n * y[:, :, None] * y[:, None, :] / r2[:, None, None] ** (n / 2 + 1)
        dady *= signs[None, :, None] / self.volume
        out_y = np.einsum("ck,nkl->ncl", self._L, dady)
        out = np.zeros((len(pts), self._L.shape[0], self.dim))
        out[:, :, self.i * n:(self.i + 1) * n] += out_y
        if self.j is not None:
            out[:, :, self.j * n:(self.j + 1) * n] -= out_y
        return out

    def apply(self, points, vectors):
        pts = self._points(points, f"evaluation of {self.name}")
        vectors = np.asarray(vectors, dtype=float)
        n = self.n
        y = self._difference(pts)
        w = vectors[:, :, self.i * n:(self.i + 1) * n]
        if self.j is not None:
            w = w - vectors[:, :, self.j * n:(self.j + 1) * n]
        mat = np.concatenate([y[:, None, :], w], axis=1)
        r = np.linalg.norm(y, axis=1)
        return np.linalg.det(mat) / (self.volume * r ** n)


def gauss_form(n: int, i: int, j: int, m: int = 2, normalize: bool = True, min_separation: float = 0.0) -> GaussForm:
    """Gauss linking form of points i and j (0-based) on Conf(m, R^n)."""
    if i == j:
        raise ValueError("gauss form requires i != j")
    if not (0 <= i < m and 0 <= j < m):
        raise ValueError(f"point indices must lie in [0, {m})")
    return GaussForm(configuration_space(m, n, min_separation), n, i, j, normalize)


def winding_form(normalize: bool = False) -> GaussForm:
    """``(x dy - y dx)/(x^2 + y^2)`` on the punctured plane (divided by 2π when normalized)."""
    return GaussForm(punctured_plane(), 2, 0, None, normalize, "winding")


def _parse_params(text: str) -> dict:
    params = {}
    if not text:
        return params
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"parameter {part!r} must be key=value")
        key, value = part.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def form_from_name(text: str) -> DifferentialForm:
    """Registry lookup.

    Accepted names: ``winding``, ``gauss:n=4,i=1,j=2[,m=2][,normalize=1]``
    (1-based point indices), ``dx:i=1,d=3`` and ``poly:<json object>``.
    """
    name, _, rest = text.partition(":")
    name = name.strip()
    if name == "poly":
        return polynomial_form_from_dict(json.loads(rest))
    params = _parse_params(rest)
    try:
        if name == "winding":
            return winding_form(bool(int(params.get("normalize", "0"))))
        if name == "gauss":
            return gauss_form(
                int(params.get("n", 4)),
                int(params["i"]) - 1,
                int(params["j"]) - 1,
                int(params.get("m", 2)),
                bool(int(params.get("normalize", "1"))),
            )
        if name == "dx":
            return coordinate_form(int(params["d"]), int(params["i"]) - 1)
    except KeyError as exc:
        raise ValueError(f"form {text!r} is missing parameter {exc}") from exc
    raise ValueError(f"unknown form {text!r}")
