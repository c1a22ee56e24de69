import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncvem import polybasis as pb
from conftest import UNIT_SQUARE, polygons


def dense_square_quadrature(f, n=40):
    """Tensor Gauss rule on the unit square, independent of the polygon code."""
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return float(np.outer(w, w).ravel() @ f(pts))


@pytest.mark.parametrize("deg,nu,expected", [(2, 2, 6), (-1, 2, 0), (3, 1, 4), (0, 2, 1), (3, 2, 10)])
def test_dim_poly(deg, nu, expected):
    assert pb.dim_poly(deg, nu) == expected


def test_dim_poly_rejects_bad_input():
    with pytest.raises(ValueError):
        pb.dim_poly(-2)
    with pytest.raises(ValueError):
        pb.dim_poly(1, 3)


def test_exponents_graded_lex():
    assert pb.exponents(2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    for i, (a1, a2) in enumerate(pb.exponents(4)):
        assert pb.monomial_index(a1, a2) == i


def test_product_table_adds_exponents():
    ea, eb, e = pb.exponents(2), pb.exponents(3), pb.exponents(5)
    table = pb.product_table(2, 3)
    for i in range(len(ea)):
        for j in range(len(eb)):
            assert tuple(e[table[i, j]]) == tuple(ea[i] + eb[j])


def test_basis_sizes_and_evaluation():
    b2 = pb.MonomialBasis2D(np.array([0.5, 0.5]), np.sqrt(2.0), 3)
    assert b2.size == 10
    vals = b2.evaluate(np.array([[1.0, 0.0]]))[0]
    z = np.array([0.5, -0.5]) / np.sqrt(2.0)
    for i, (a1, a2) in enumerate(pb.exponents(3)):
        assert vals[i] == pytest.approx(z[0] ** a1 * z[1] ** a2)
    b1 = pb.MonomialBasis1D(np.zeros(2), np.array([1.0, 0.0]), 2.0, 2)
    assert b1.size == 3
    np.testing.assert_allclose(b1.evaluate(np.array([-0.5, 0.0, 0.25]))[:, 0], 1.0)


def test_gradient_matches_finite_differences():
    b = pb.MonomialBasis2D(np.array([0.2, -0.1]), 0.7, 3)
    x = np.array([[0.3, 0.4]])
    g = b.gradient(x)[0]
    eps = 1e-6
    for d in range(2):
        e = np.zeros(2)
        e[d] = eps
        fd = (b.evaluate(x + e) - b.evaluate(x - e))[0] / (2 * eps)
        np.testing.assert_allclose(g[:, d], fd, atol=1e-8)


def test_gauss_legendre_exactness():
    for n in range(1, pb.MAX_GAUSS_POINTS + 1):
        t, w = pb.gauss_legendre(n)
        assert w.sum() == pytest.approx(1.0)
        for p in range(2 * n):
            exact = 0.0 if p % 2 else 0.5 ** p / (p + 1)
            assert w @ t ** p == pytest.approx(exact, abs=1e-15)
    with pytest.raises(ValueError):
        pb.gauss_legendre(11)


def test_unit_square_monomial_integrals():
    vals = pb.integrate_monomials(UNIT_SQUARE, 2)
    assert vals[0] == pytest.approx(1.0, abs=1e-15)
    assert vals[1] == pytest.approx(0.0, abs=1e-15)
    assert vals[3] == pytest.approx(1.0 / 24.0, abs=1e-15)
    oracle = dense_square_quadrature(lambda p: ((p[:, 0] - 0.5) / np.sqrt(2)) ** 2)
    assert vals[3] == pytest.approx(oracle, rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(polygons(), st.integers(0, 6))
def test_monomial_integrals_match_triangulation(poly, degree):
    c, h = pb.polygon_centroid(poly), pb.polygon_diameter(poly)
    exact = pb.integrate_monomials(poly, degree, c, h)
    pts, wts = pb.polygon_quadrature(poly, degree)
    quad = pb.eval_monomials(pts, c, h, degree).T @ wts
    scale = pb.polygon_area(poly)
    np.testing.assert_allclose(exact, quad, rtol=1e-12, atol=1e-12 * scale)


def test_integrals_on_nonconvex_polygon():
    # L-shaped hexagon, area 3
    poly = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)
    vals = pb.integrate_monomials(poly, 0, np.zeros(2), 1.0)
    assert vals[0] == pytest.approx(3.0)
    pts, wts = pb.polygon_quadrature(poly, 4)
    assert wts.sum() == pytest.approx(3.0)
    x2 = pb.integrate_monomials(poly, 2, np.zeros(2), 1.0)[3]
    assert wts @ pts[:, 0] ** 2 == pytest.approx(x2)


def test_edge_integrate():
    assert pb.edge_integrate(0.5, [1.0]) == pytest.approx(0.5)
    assert pb.edge_integrate(1.0, [0.0, 1.0]) == pytest.approx(0.0, abs=1e-16)
    assert pb.edge_integrate(1.0, [0.0, 0.0, 1.0]) == pytest.approx(1.0 / 12.0)
    t, w = np.polynomial.legendre.leggauss(20)
    assert pb.edge_integrate(1.0, [0, 0, 1.0]) == pytest.approx(0.5 * w @ (0.5 * t) ** 2)


def test_edge_projection_examples():
    a, b = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    np.testing.assert_allclose(pb.l2_project_edge(a, b, lambda p: 3.0 + 0 * p[:, 0], 2),
                               [3.0, 0.0, 0.0], atol=1e-13)
    c = pb.l2_project_edge(a, b, lambda p: (p[:, 0] - 0.5) ** 3, 1)
    np.testing.assert_allclose(c, [0.0, 0.15], atol=1e-14)
    # weighted least squares on a 30-point Gauss rule
    x, w = np.polynomial.legendre.leggauss(30)
    s = 0.5 * x
    V = np.column_stack([np.ones_like(s), s]) * np.sqrt(w)[:, None]
    ls = np.linalg.lstsq(V, s ** 3 * np.sqrt(w), rcond=None)[0]
    np.testing.assert_allclose(c, ls, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=4), st.floats(0.1, 3.0), st.floats(0, 6.28))
def test_edge_projection_reproduces_polynomials(coeffs, length, angle):
    a = np.array([0.3, -0.2])
    tangent = np.array([np.cos(angle), np.sin(angle)])
    b = a + length * tangent
    mid = 0.5 * (a + b)

    def f(p):
        t = (p - mid) @ tangent / length
        return np.polyval(coeffs[::-1], t)

    degree = len(coeffs) - 1
    got = pb.l2_project_edge(a, b, f, degree)
    np.testing.assert_allclose(got, coeffs, atol=1e-12 * (1 + np.abs(coeffs).max()))


def test_element_projection_examples():
    c = pb.l2_project_element(UNIT_SQUARE, lambda p: np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]),
                              0, quad_degree=20)
    assert c[0] == pytest.approx(4 / np.pi ** 2, rel=1e-10)
    oracle = dense_square_quadrature(lambda p: np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]))
    assert c[0] == pytest.approx(oracle, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(polygons(), st.integers(0, 3), st.data())
def test_element_projection_reproduces_monomials(poly, degree, data):
    i = data.draw(st.integers(0, pb.dim_poly(degree) - 1))
    c, h = pb.polygon_centroid(poly), pb.polygon_diameter(poly)
    coeffs = pb.l2_project_element(poly, lambda p: pb.eval_monomials(p, c, h, degree)[:, i], degree)
    np.testing.assert_allclose(coeffs, np.eye(len(coeffs))[i], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(polygons(), st.floats(-3, 3), st.floats(-3, 3))
def test_element_projection_is_linear_and_idempotent(poly, a, b):
    c, h = pb.polygon_centroid(poly), pb.polygon_diameter(poly)
    f = lambda p: np.exp(p[:, 0]) * np.cos(p[:, 1])  # noqa: E731
    g = lambda p: np.sin(p[:, 0] + 2 * p[:, 1])  # noqa: E731
    pf = pb.l2_project_element(poly, f, 2, c, h)
    pg = pb.l2_project_element(poly, g, 2, c, h)
    pfg = pb.l2_project_element(poly, lambda p: a * f(p) + b * g(p), 2, c, h)
    np.testing.assert_allclose(pfg, a * pf + b * pg, atol=1e-10 * (1 + np.abs(pfg).max()))
    again = pb.l2_project_element(poly, lambda p: pb.eval_monomials(p, c, h, 2) @ pf, 2, c, h)
    np.testing.assert_allclose(again, pf, atol=1e-12 * (1 + np.abs(pf).max()))


def test_element_projection_error_decays_quadratically():
    f = lambda p: p[:, 0] ** 3 + p[:, 0] * p[:, 1] ** 2  # noqa: E731
    errs = []
    for s in (0.4, 0.2, 0.1):
        poly = UNIT_SQUARE * s
        c, h = pb.polygon_centroid(poly), pb.polygon_diameter(poly)
        coef = pb.l2_project_element(poly, f, 1, c, h)
        pts, wts = pb.polygon_quadrature(poly, 8)
        r = f(pts) - pb.eval_monomials(pts, c, h, 1) @ coef
        errs.append(np.sqrt(wts @ r ** 2 / (wts.sum())))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.9)


def test_triangulate_covers_area(square):
    for poly in (square, np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], float)):
        tris = pb.triangulate(poly)
        area = sum(0.5 * pb._tri_area2(*t) for t in tris)
        assert area == pytest.approx(pb.polygon_area(poly))


def test_ear_clip_rejects_clockwise():
    with pytest.raises(ValueError):
        pb.ear_clip(UNIT_SQUARE[::-1].copy() + np.array([[0, 0], [0, 0], [0.5, 0.2], [0, 0]]))


def test_gram_check():
    pb.check_gram(np.eye(3))
    with pytest.raises(pb.IllConditionedGram):
        pb.check_gram(np.diag([1.0, 1e-14]))
