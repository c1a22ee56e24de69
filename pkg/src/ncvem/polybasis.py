"""Scaled monomial bases, exact polygon integration and L2 projections.

Monomials on a cell are ``((x - x_P) / h_P) ** alpha`` with multi-indices in
graded lexicographic order::

    (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...

Edge monomials are ``t ** j`` with ``t = (x - x_S) . tau / h_S`` in
``[-1/2, 1/2]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

MAX_GAUSS_POINTS = 10
GRAM_COND_LIMIT = 1e12


class IllConditionedGram(RuntimeError):
    """Monomial Gram matrix too ill-conditioned to trust the projection."""


def dim_poly(degree: int, nu: int = 2) -> int:
    """Dimension of the polynomials of total degree <= ``degree`` in ``nu`` variables."""
    if degree < -1:
        raise ValueError("degree must be >= -1")
    if degree == -1:
        return 0
    if nu == 1:
        return degree + 1
    if nu == 2:
        return (degree + 1) * (degree + 2) // 2
    raise ValueError("only nu in {1, 2} is supported")


@lru_cache(maxsize=None)
def exponents(degree: int) -> np.ndarray:
    """Multi-indices ``(a1, a2)`` with ``a1 + a2 <= degree``, graded lex order."""
    out = [(i, d - i) for d in range(degree + 1) for i in range(d, -1, -1)]
    arr = np.array(out, dtype=int).reshape(-1, 2)
    arr.setflags(write=False)
    return arr


def monomial_index(a1: int, a2: int) -> int:
    d = a1 + a2
    return d * (d + 1) // 2 + (d - a1)


@lru_cache(maxsize=None)
def product_table(deg_a: int, deg_b: int) -> np.ndarray:
    """``T[i, j]`` = index of ``m_i * m_j`` in the basis of degree ``deg_a + deg_b``."""
    ea, eb = exponents(deg_a), exponents(deg_b)
    s = ea[:, None, :] + eb[None, :, :]
    d = s.sum(axis=2)
    table = d * (d + 1) // 2 + (d - s[..., 0])
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on ``[-1/2, 1/2]`` with weights summing to 1."""
    if not 1 <= n <= MAX_GAUSS_POINTS:
        raise ValueError(f"Gauss-Legendre tables cover 1..{MAX_GAUSS_POINTS} points")
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * x, 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_points_for_degree(degree: int) -> int:
    """Fewest Gauss-Legendre points integrating 1D polynomials of ``degree`` exactly."""
    return max(1, degree // 2 + 1)


@dataclass(frozen=True)
class MonomialBasis2D:
    center: np.ndarray
    scale: float
    degree: int

    @property
    def size(self) -> int:
        return dim_poly(self.degree, 2)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at ``points`` (n, 2), shape (n, size)."""
        return eval_monomials(points, self.center, self.scale, self.degree)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        """Gradients at ``points``, shape (n, size, 2)."""
        return grad_monomials(points, self.center, self.scale, self.degree)


@dataclass(frozen=True)
class MonomialBasis1D:
    midpoint: np.ndarray
    tangent: np.ndarray
    length: float
    degree: int

    @property
    def size(self) -> int:
        return self.degree + 1

    def local_coordinate(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points) - self.midpoint) @ self.tangent / self.length

    def points(self, t: np.ndarray) -> np.ndarray:
        return self.midpoint + np.outer(t, self.tangent) * self.length

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        return np.power.outer(np.asarray(t, dtype=float), np.arange(self.degree + 1))


def _powers(z: np.ndarray, degree: int) -> np.ndarray:
    out = np.ones(z.shape + (degree + 1,))
    for p in range(1, degree + 1):
        out[..., p] = out[..., p - 1] * z
    return out


def eval_monomials(points, center, scale, degree: int) -> np.ndarray:
    z = (np.atleast_2d(points) - center) / scale
    e = exponents(degree)
    px, py = _powers(z[:, 0], degree), _powers(z[:, 1], degree)
    return px[:, e[:, 0]] * py[:, e[:, 1]]


def grad_monomials(points, center, scale, degree: int) -> np.ndarray:
    z = (np.atleast_2d(points) - center) / scale
    e = exponents(degree)
    px, py = _powers(z[:, 0], degree), _powers(z[:, 1], degree)
    ax, ay = e[:, 0], e[:, 1]
    gx = ax * px[:, np.maximum(ax - 1, 0)] * py[:, ay] / scale
    gy = ay * px[:, ax] * py[:, np.maximum(ay - 1, 0)] / scale
    return np.stack([gx, gy], axis=-1)


# -- polygon geometry ------------------------------------------------------

def polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * area)


def polygon_diameter(vertices: np.ndarray) -> float:
    d = vertices[:, None, :] - vertices[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1).max()))


def integrate_monomials(vertices: np.ndarray, degree: int, center=None,
                        scale: float | None = None) -> np.ndarray:
    """Exact integrals of the scaled monomials of degree <= ``degree`` over a polygon.

    Uses ``int_P m = 1/(2+|a|) * sum_S (x_S - x_P).n_S int_S m ds``, which holds
    for any simple polygon (convex or not) given a counterclockwise loop.
    """
    vertices = np.asarray(vertices, dtype=float)
    if center is None:
        center = polygon_centroid(vertices)
    if scale is None:
        scale = polygon_diameter(vertices)
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    d = b - a
    normals = np.column_stack([d[:, 1], -d[:, 0]])  # length-weighted outward normal
    lever = ((a - center) * normals).sum(axis=1)  # (x - x_P).n * |S|, constant per edge
    t, w = gauss_legendre(gauss_points_for_degree(degree))
    s = t + 0.5
    pts = a[:, None, :] + s[None, :, None] * d[:, None, :]
    vals = eval_monomials(pts.reshape(-1, 2), center, scale, degree)
    vals = vals.reshape(len(a), len(t), -1)
    edge_int = np.einsum("eqm,q,e->m", vals, w, lever)
    deg = exponents(degree).sum(axis=1)
    return edge_int / (2.0 + deg)


def edge_integrate(length: float, coeffs: np.ndarray) -> float:
    """``int_S sum_j c_j t^j ds`` for a 1D coefficient vector."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = gauss_points_for_degree(max(len(coeffs) - 1, 0))
    t, w = gauss_legendre(n)
    return float(length * (w @ (np.power.outer(t, np.arange(len(coeffs))) @ coeffs)))


@lru_cache(maxsize=None)
def edge_gram(degree: int) -> np.ndarray:
    """``int_{-1/2}^{1/2} t^i t^j dt``."""
    p = np.add.outer(np.arange(degree + 1), np.arange(degree + 1))
    g = np.where(p % 2 == 0, 0.5 ** p / (p + 1.0), 0.0)
    g.setflags(write=False)
    return g


def l2_project_edge(a: np.ndarray, b: np.ndarray, f: Callable, degree: int,
                    n_quad: int | None = None) -> np.ndarray:
    """Coefficients of the L2 projection of ``f`` onto P_degree of segment ``a -> b``."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    length = float(np.hypot(*(b - a)))
    basis = MonomialBasis1D(0.5 * (a + b), (b - a) / length, length, degree)
    t, w = gauss_legendre(n_quad or min(MAX_GAUSS_POINTS, degree + 4))
    fv = np.asarray(f(basis.points(t)), dtype=float)
    rhs = basis.evaluate(t).T @ (w * fv)
    return np.linalg.solve(edge_gram(degree), rhs)


# -- area quadrature for non-polynomial integrands ---------------------------

@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss rule on the reference triangle, exact to ``degree``.

    Returns barycentric-like coordinates (n, 2) on (0,0),(1,0),(0,1) and weights
    summing to 1/2.
    """
    n = min(MAX_GAUSS_POINTS, gauss_points_for_degree(degree + 1))
    t, w = gauss_legendre(n)
    u, v = t + 0.5, t + 0.5
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(w, w) * (1.0 - U)
    pts = np.column_stack([U.ravel(), ((1.0 - U) * V).ravel()])
    wts = W.ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def _tri_area2(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _point_in_triangle(x, p, q, r) -> bool:
    return (_tri_area2(p, q, x) >= 0 and _tri_area2(q, r, x) >= 0
            and _tri_area2(r, p, x) >= 0)


def ear_clip(vertices: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate a simple counterclockwise polygon by ear clipping."""
    scale = polygon_diameter(vertices) ** 2
    idx = list(range(len(vertices)))
    tris = []
    while len(idx) > 3:
        n = len(idx)
        for i in range(n):
            ip, ic, inx = idx[i - 1], idx[i], idx[(i + 1) % n]
            p, c, q = vertices[ip], vertices[ic], vertices[inx]
            a2 = _tri_area2(p, c, q)
            if abs(a2) <= 1e-14 * scale:
                # collinear corner: drop it, contributes no area
                idx.pop(i)
                break
            if a2 < 0:
                continue
            if any(_point_in_triangle(vertices[j], p, c, q)
                   for j in idx if j not in (ip, ic, inx)):
                continue
            tris.append((ip, ic, inx))
            idx.pop(i)
            break
        else:
            raise ValueError("ear clipping failed; polygon not simple")
    tris.append(tuple(idx))
    return tris


def triangulate(vertices: np.ndarray) -> np.ndarray:
    """Triangles (m, 3, 2) covering the polygon.

    Fan from the centroid when every fan triangle is positively oriented,
    ear clipping otherwise.
    """
    vertices = np.asarray(vertices, dtype=float)
    c = polygon_centroid(vertices)
    nxt = np.roll(vertices, -1, axis=0)
    ar = (vertices[:, 0] - c[0]) * (nxt[:, 1] - c[1]) - (vertices[:, 1] - c[1]) * (nxt[:, 0] - c[0])
    if np.all(ar > 0):
        return np.stack([np.broadcast_to(c, vertices.shape), vertices, nxt], axis=1)
    tris = ear_clip(vertices)
    return np.array([[vertices[i], vertices[j], vertices[k]] for i, j, k in tris])


def polygon_quadrature(vertices: np.ndarray, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Points and weights exact for polynomials of ``degree`` on the polygon."""
    tris = triangulate(vertices)
    ref, rw = triangle_rule(degree)
    p0 = tris[:, 0, :]
    e1 = tris[:, 1, :] - p0
    e2 = tris[:, 2, :] - p0
    jac = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    pts = p0[:, None, :] + ref[None, :, 0:1] * e1[:, None, :] + ref[None, :, 1:2] * e2[:, None, :]
    wts = jac[:, None] * rw[None, :]
    return pts.reshape(-1, 2), wts.ravel()


def l2_project_element(vertices: np.ndarray, f: Callable, degree: int, center=None,
                       scale: float | None = None, quad_degree: int | None = None) -> np.ndarray:
    """Coefficients of the L2 projection of ``f`` onto P_degree of the polygon."""
    vertices = np.asarray(vertices, dtype=float)
    if center is None:
        center = polygon_centroid(vertices)
    if scale is None:
        scale = polygon_diameter(vertices)
    gram = mass_gram(integrate_monomials(vertices, 2 * degree, center, scale), degree)
    check_gram(gram)
    pts, wts = polygon_quadrature(vertices, quad_degree or 2 * degree + 2)
    rhs = eval_monomials(pts, center, scale, degree).T @ (wts * np.asarray(f(pts), dtype=float))
    return np.linalg.solve(gram, rhs)


def mass_gram(integrals: np.ndarray, degree: int) -> np.ndarray:
    """``H[a, b] = int_P m_a m_b`` from monomial integrals up to ``2 * degree``."""
    return integrals[product_table(degree, degree)]


def check_gram(gram: np.ndarray, limit: float = GRAM_COND_LIMIT) -> None:
    if np.linalg.cond(gram) > limit:
        raise IllConditionedGram(f"Gram condition number exceeds {limit:g}")
