import math

import numpy as np
import pytest

from chen_holonomy.forms import (
    MembershipError,
    PolynomialForm,
    SmoothMap,
    configuration_space,
    constant_form,
    coordinate_form,
    euclidean,
    exterior_derivative,
    form_from_name,
    gauss_form,
    pullback,
    sphere_volume,
    wedge,
    winding_form,
)

R2 = euclidean(2)


def random_form(rng, dim, degree):
    """Polynomial form with random quadratic coefficients."""
    from chen_holonomy.forms import multi_indices

    terms = {}
    for I in multi_indices(dim, degree):
        monos = []
        for _ in range(3):
            powers = tuple(int(p) for p in rng.integers(0, 3, size=dim))
            monos.append((float(rng.normal()), powers))
        terms[I] = monos
    return PolynomialForm(euclidean(dim), degree, terms)


def test_dx_wedge_dy():
    w = wedge(coordinate_form(2, 0), coordinate_form(2, 1))
    assert w.coefficients([[0.3, 0.4]])[0, 0] == 1.0


def test_one_form_squares_to_zero(rng):
    pts = rng.normal(size=(100, 3))
    for _ in range(3):
        a = random_form(rng, 3, 1)
        assert np.max(np.abs(wedge(a, a).coefficients(pts))) <= 1e-12


def test_bilinear_expansion():
    s = constant_form(2, {(0,): 1.0, (1,): 1.0})
    w = wedge(s, coordinate_form(2, 1))
    assert np.allclose(w.coefficients([[1.0, 2.0]]), [[1.0]])


def test_graded_commutativity(rng):
    pts = rng.normal(size=(30, 4))
    for p, q in [(1, 1), (1, 2), (2, 2)]:
        a, b = random_form(rng, 4, p), random_form(rng, 4, q)
        lhs = wedge(a, b).coefficients(pts)
        rhs = (-1) ** (p * q) * wedge(b, a).coefficients(pts)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_wedge_overflow_is_zero():
    a = constant_form(2, {(0, 1): 1.0})
    w = wedge(a, coordinate_form(2, 0))
    assert w.degree == 3
    assert w.coefficients([[0.0, 0.0]]).size == 0


def test_d_of_x_dy_finite_difference(rng):
    x_dy = PolynomialForm(R2, 1, {(1,): [(1.0, (1, 0))]})
    fd = type(x_dy).__mro__[1]  # generic finite-difference path
    generic = fd(R2, 1, x_dy._coefficients)
    pts = rng.uniform(-1, 1, size=(50, 2))
    d = exterior_derivative(generic, 1e-5).coefficients(pts)
    assert np.max(np.abs(d - 1.0)) <= 1e-9
    assert np.all(exterior_derivative(x_dy).coefficients(pts) == 1.0)


def test_winding_form_closed(rng):
    pts = rng.uniform(0.5, 2, size=(50, 2)) * rng.choice([-1, 1], size=(50, 2))
    w = winding_form()
    assert np.max(np.abs(w.exterior_derivative().coefficients(pts))) <= 1e-6
    from chen_holonomy.forms import DifferentialForm

    fd = DifferentialForm(w.ambient, 1, w._coefficients)
    assert np.max(np.abs(fd.exterior_derivative(1e-5).coefficients(pts))) <= 1e-6


def test_constant_form_derivative_exact():
    c = constant_form(3, {(0, 2): 2.5})
    assert np.all(c.exterior_derivative().coefficients(np.ones((4, 3))) == 0.0)


def test_double_derivative(rng):
    from chen_holonomy.forms import DifferentialForm

    pts = rng.normal(size=(20, 3))
    a = random_form(rng, 3, 1)
    assert np.all(a.exterior_derivative().exterior_derivative().coefficients(pts) == 0.0)
    fd = DifferentialForm(a.ambient, 1, a._coefficients)
    assert np.max(np.abs(fd.exterior_derivative().exterior_derivative().coefficients(pts))) <= 1e-4


def test_stencil_membership_error():
    from chen_holonomy.forms import DifferentialForm

    w = winding_form()
    fd = DifferentialForm(w.ambient, 1, w._coefficients)
    with pytest.raises(MembershipError, match="outside"):
        fd.exterior_derivative(1e-5).coefficients([[1e-5, 0.0]])


def _line_map():
    return SmoothMap(1, 2, lambda u: np.concatenate([u, 0 * u], axis=1), lambda u: np.tile([[[1.0], [0.0]]], (len(u), 1, 1)))


def test_pullback_dx_along_axis():
    pb = pullback(coordinate_form(2, 0), _line_map())
    assert np.allclose(pb.coefficients(np.linspace(0, 1, 5)[:, None]), 1.0)


def test_pullback_winding_circle():
    def ev(u):
        return np.stack([np.cos(2 * np.pi * u[:, 0]), np.sin(2 * np.pi * u[:, 0])], axis=1)

    def jac(u):
        t = 2 * np.pi * u[:, 0]
        return (2 * np.pi * np.stack([-np.sin(t), np.cos(t)], axis=1))[:, :, None]

    pb = pullback(winding_form(), SmoothMap(1, 2, ev, jac))
    u = np.linspace(0, 1, 33)[:, None]
    assert np.max(np.abs(pb.coefficients(u) - 2 * np.pi)) <= 1e-10


def test_pullback_degree_drop():
    three = constant_form(3, {(0, 1, 2): 1.0})
    f = SmoothMap(2, 3, lambda u: np.concatenate([u, u[:, :1]], axis=1), lambda u: np.tile(np.array([[1.0, 0], [0, 1], [1, 0]]), (len(u), 1, 1)))
    pb = pullback(three, f)
    assert pb.degree == 3 and pb.coefficients(np.zeros((2, 2))).size == 0


def test_pullback_commutes_with_wedge(rng):
    a, b = random_form(rng, 3, 1), random_form(rng, 3, 1)
    A = rng.normal(size=(3, 2))
    f = SmoothMap(2, 3, lambda u: u @ A.T + np.sin(u[:, :1]), lambda u: A[None] + np.concatenate([np.cos(u[:, :1])[:, :, None] * np.array([[[1.0, 0.0]]]).repeat(3, 1)], axis=0))
    u = rng.uniform(size=(20, 2))
    lhs = pullback(wedge(a, b), f).coefficients(u)
    rhs = wedge(pullback(a, f), pullback(b, f)).coefficients(u)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_gauss_n2_is_winding(rng):
    g = gauss_form(2, 0, 1, m=2, normalize=False)
    pts = rng.normal(size=(20, 4))
    y = pts[:, :2] - pts[:, 2:]
    w = winding_form().coefficients(y)
    expected = np.concatenate([w, -w], axis=1)
    assert np.max(np.abs(g.coefficients(pts) - expected)) <= 1e-12


def test_gauss_closed_and_square_free(rng):
    g = gauss_form(4, 0, 1, m=2)
    pts = rng.normal(size=(30, 8))
    assert np.max(np.abs(g.exterior_derivative().coefficients(pts))) <= 1e-6
    assert np.max(np.abs(wedge(g, g).coefficients(pts))) == 0.0
    with pytest.raises(ValueError):
        gauss_form(4, 1, 1)


def test_gauss_normalized_sphere_integral():
    # integrate the normalized gauss form over the unit 3-sphere in hyperspherical angles
    from numpy.polynomial.legendre import leggauss

    x, w = leggauss(24)
    a = np.pi * (x + 1) / 2
    c = np.pi * (x + 1)
    A, B, C = np.meshgrid(a, a, c, indexing="ij")
    W = np.einsum("i,j,k->ijk", w, w, w) * (np.pi / 2) * (np.pi / 2) * np.pi
    A, B, C, W = A.ravel(), B.ravel(), C.ravel(), W.ravel()
    from chen_holonomy.presets import _sphere_partials, _sphere_point

    y = _sphere_point(A, B, C)
    da, db, dc = _sphere_partials(A, B, C)
    pts = np.concatenate([y, np.zeros_like(y)], axis=1)
    vecs = np.zeros((len(y), 3, 8))
    vecs[:, 0, :4], vecs[:, 1, :4], vecs[:, 2, :4] = da, db, dc
    total = np.sum(W * gauss_form(4, 0, 1).apply(pts, vecs))
    assert abs(total - 1.0) <= 1e-10
    assert math.isclose(sphere_volume(4), 2 * np.pi ** 2)


def test_configuration_membership():
    conf = configuration_space(2, 2)
    assert conf.contains([[0, 0, 1, 1]])[0]
    assert not conf.contains([[1, 1, 1, 1]])[0]
    with pytest.raises(MembershipError, match="Conf"):
        conf.check([[1, 1, 1, 1]], "test")


def test_registry_names():
    assert form_from_name("winding").degree == 1
    g = form_from_name("gauss:n=4,i=1,j=2")
    assert g.degree == 3 and g.dim == 8
    dx = form_from_name("dx:i=2,d=3")
    assert np.allclose(dx.coefficients([[0, 0, 0]]), [[0, 1, 0]])
    poly = form_from_name('poly:{"dim": 2, "degree": 1, "terms": [{"index": [1], "monomials": [{"coeff": 1, "powers": [1, 0]}]}]}')
    assert np.allclose(poly.coefficients([[3.0, 5.0]]), [[0.0, 3.0]])
