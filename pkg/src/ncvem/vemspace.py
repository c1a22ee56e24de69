"""Local nonconforming virtual element space: dofs, interpolation, projectors.

Local dof order on a cell: for each boundary edge in loop order its ``k``
normalized moments against ``t**j`` (``t`` in the edge's global orientation),
then the ``dim P_{k-2}`` normalized interior moments.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np

from .mesh import BOUNDARY, PolygonalMesh
from .polybasis import (GRAM_COND_LIMIT, dim_poly, eval_monomials, exponents, gauss_legendre,
                        grad_monomials, integrate_monomials, mass_gram, polygon_quadrature,
                        product_table)

SUPPORTED_DEGREES = (1, 2, 3)


class UnsupportedDegree(ValueError):
    pass


class SingularProjectorSystem(RuntimeError):
    pass


def _check_degree(k: int) -> None:
    if k not in SUPPORTED_DEGREES:
        raise UnsupportedDegree(f"degree {k} not in {SUPPORTED_DEGREES}")


@dataclass(frozen=True, eq=False)
class DofMap:
    k: int
    bc: str
    edge_dofs: np.ndarray   # (E, k), -1 where eliminated by the Dirichlet condition
    cell_dofs: np.ndarray   # (N_P, dim P_{k-2})
    n_dofs: int
    boundary_mask: np.ndarray  # (n_dofs,) dofs living on boundary edges

    def local_indices(self, mesh: PolygonalMesh, c: int) -> np.ndarray:
        return np.concatenate([self.edge_dofs[mesh.cell_edges[c]].ravel(), self.cell_dofs[c]])


def dof_layout(mesh: PolygonalMesh, k: int, bc: str = "dirichlet") -> DofMap:
    _check_degree(k)
    if bc not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    boundary = mesh.boundary_edges
    active = ~boundary if bc == "dirichlet" else np.ones(mesh.n_edges, dtype=bool)
    n_active = int(active.sum())
    edge_dofs = -np.ones((mesh.n_edges, k), dtype=np.int64)
    edge_dofs[active] = np.arange(n_active * k).reshape(n_active, k)
    n_int = dim_poly(k - 2)
    start = n_active * k
    cell_dofs = start + np.arange(mesh.n_cells * n_int, dtype=np.int64).reshape(mesh.n_cells, n_int)
    n_dofs = start + mesh.n_cells * n_int
    mask = np.zeros(n_dofs, dtype=bool)
    if bc == "neumann":
        mask[edge_dofs[boundary].ravel()] = True
    for a in (edge_dofs, cell_dofs, mask):
        a.setflags(write=False)
    return DofMap(k, bc, edge_dofs, cell_dofs, n_dofs, mask)


@dataclass(frozen=True, eq=False)
class LocalElementOps:
    """Per-cell matrices of the degree-``k`` space.

    ``D`` holds the dofs of the monomials (rows dofs, columns monomials);
    ``pi_nabla`` and ``pi_zero`` map a local dof vector to monomial
    coefficients of the elliptic and L2 projections.
    """

    k: int
    vertices: np.ndarray
    center: np.ndarray
    scale: float
    area: float
    edge_midpoints: np.ndarray
    edge_tangents: np.ndarray
    edge_lengths: np.ndarray
    outward_sign: np.ndarray  # +1 if the edge normal is outward for this cell
    D: np.ndarray
    G: np.ndarray             # stiffness Gram of M_k(P)
    H: np.ndarray             # mass Gram of M_k(P)
    pi_nabla: np.ndarray
    pi_zero: np.ndarray
    monomial_integrals: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.D.shape[0]

    @cached_property
    def pi_nabla_dof(self) -> np.ndarray:
        return self.D @ self.pi_nabla

    @cached_property
    def pi_zero_dof(self) -> np.ndarray:
        return self.D @ self.pi_zero


@lru_cache(maxsize=None)
def _edge_fit(k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gauss points/weights on an edge, ``t**j`` table and the map values -> P_{k-1} coefficients."""
    t, w = gauss_legendre(k + 1)
    powers = np.power.outer(t, np.arange(k))  # (q, k)
    fit = np.linalg.pinv(powers)              # exact for P_{k-1}
    return t, w, powers, fit


def polygon_ops(vertices: np.ndarray, k: int, flips: np.ndarray | None = None) -> LocalElementOps:
    """Local operators of a standalone counterclockwise polygon.

    ``flips[i]`` reverses the arc-length orientation of edge ``i`` (from
    vertex ``i`` to ``i+1`` by default), matching a global edge orientation.
    """
    _check_degree(k)
    vertices = np.asarray(vertices, dtype=float)
    nv = len(vertices)
    flips = np.zeros(nv, dtype=bool) if flips is None else np.asarray(flips, dtype=bool)
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    d = b - a
    lengths = np.hypot(d[:, 0], d[:, 1])
    outward = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    sign = np.where(flips, -1.0, 1.0)
    tangents = sign[:, None] * d / lengths[:, None]
    mids = 0.5 * (a + b)
    return _build_ops(vertices, k, mids, tangents, lengths, outward, sign)


def local_ops(mesh: PolygonalMesh, c: int, k: int) -> LocalElementOps:
    """Local operators of cell ``c`` using the mesh's global edge orientation."""
    _check_degree(k)
    cache = mesh._cache.setdefault(("ops", k), {})
    ops = cache.get(c)
    if ops is None:
        e = mesh.cell_edges[c]
        sign = np.where(mesh.cell_edge_flips[c], -1.0, 1.0)
        outward = sign[:, None] * mesh.edge_normals[e]
        ops = _build_ops(mesh.cell_vertices(c), k, mesh.edge_midpoints[e], mesh.edge_tangents[e],
                         mesh.edge_lengths[e], outward, sign, mesh.centroids[c],
                         float(mesh.diameters[c]), float(mesh.areas[c]))
        cache[c] = ops
    return ops


def all_local_ops(mesh: PolygonalMesh, k: int) -> list[LocalElementOps]:
    return [local_ops(mesh, c, k) for c in range(mesh.n_cells)]


def _build_ops(vertices, k, mids, tangents, lengths, outward, sign,
               center=None, scale=None, area=None) -> LocalElementOps:
    from .polybasis import polygon_area, polygon_centroid, polygon_diameter

    if center is None:
        center = polygon_centroid(vertices)
        scale = polygon_diameter(vertices)
        area = polygon_area(vertices)
    ne = len(vertices)
    nm = dim_poly(k)
    n_int = dim_poly(k - 2)
    n_dofs = ne * k + n_int

    integrals = integrate_monomials(vertices, 2 * k, center, scale)
    H = mass_gram(integrals, k)

    # edge evaluations at Gauss points in the global orientation
    t, w, powers, fit = _edge_fit(k)
    pts = mids[:, None, :] + (t[None, :, None] * lengths[:, None, None]) * tangents[:, None, :]
    flat = pts.reshape(-1, 2)
    vals = eval_monomials(flat, center, scale, k).reshape(ne, len(t), nm)
    grads = grad_monomials(flat, center, scale, k).reshape(ne, len(t), nm, 2)

    D = np.empty((n_dofs, nm))
    # (1/|S|) int_S m t^j = sum_q w_q m(x_q) t_q^j
    D[:ne * k] = np.einsum("eqm,q,qj->ejm", vals, w, powers).reshape(ne * k, nm)
    if n_int:
        D[ne * k:] = integrals[product_table(k - 2, k)] / area

    # stiffness Gram
    e = exponents(k)
    ax, ay = e[:, 0], e[:, 1]
    G = np.zeros((nm, nm))
    if k >= 1:
        ptab = product_table(k - 1, k - 1)
        ix = np.array([0 if a == 0 else _idx(a - 1, b) for a, b in e])
        iy = np.array([0 if b == 0 else _idx(a, b - 1) for a, b in e])
        G = (np.outer(ax, ax) * integrals[ptab[np.ix_(ix, ix)]] +
             np.outer(ay, ay) * integrals[ptab[np.ix_(iy, iy)]]) / scale ** 2

    # right-hand side of the elliptic projection: a(v, m_b) as a map of dofs
    rhs = np.zeros((nm, n_dofs))
    dn = np.einsum("eqmx,ex->eqm", grads, outward)      # grad m . n_P at Gauss points
    coef = np.einsum("jq,eqm->emj", fit, dn)             # in the t^j edge basis
    rhs[:, :ne * k] = (coef * lengths[:, None, None]).transpose(1, 0, 2).reshape(nm, ne * k)
    if n_int:
        for bi, (b1, b2) in enumerate(e):
            if b1 >= 2:
                rhs[bi, ne * k + _idx(b1 - 2, b2)] -= area * b1 * (b1 - 1) / scale ** 2
            if b2 >= 2:
                rhs[bi, ne * k + _idx(b1, b2 - 2)] -= area * b2 * (b2 - 1) / scale ** 2

    # closure fixing the constant
    closure = np.zeros(nm)
    closure_rhs = np.zeros(n_dofs)
    if k == 1:
        closure[:] = (vals * w[None, :, None] * lengths[:, None, None]).sum(axis=(0, 1))
        closure_rhs[:ne * k:k] = lengths
    else:
        closure[:] = integrals[:nm]
        closure_rhs[ne * k] = area

    saddle = np.zeros((nm + 1, nm + 1))
    saddle[:nm, :nm] = G
    saddle[:nm, nm] = closure
    saddle[nm, :nm] = closure
    if np.linalg.cond(saddle) > GRAM_COND_LIMIT:
        raise SingularProjectorSystem("elliptic projector system is singular")
    sol = np.linalg.solve(saddle, np.vstack([rhs, closure_rhs]))
    pi_nabla = sol[:nm]

    # L2 projection via the enhancement: top moments come from the elliptic projection
    if np.linalg.cond(H) > GRAM_COND_LIMIT:
        raise SingularProjectorSystem("mass Gram matrix is singular")
    moments = H @ pi_nabla
    if n_int:
        moments[:n_int] = 0.0
        moments[:n_int, ne * k:] = area * np.eye(n_int)
    pi_zero = np.linalg.solve(H, moments)

    arrays = [vertices, mids, tangents, lengths, sign, D, G, H, pi_nabla, pi_zero, integrals]
    for arr in arrays:
        arr.setflags(write=False)
    return LocalElementOps(k, vertices, np.asarray(center), float(scale), float(area), mids,
                           tangents, lengths, sign, D, G, H, pi_nabla, pi_zero, integrals)


def _idx(a1: int, a2: int) -> int:
    deg = a1 + a2
    return deg * (deg + 1) // 2 + (deg - a1)


# -- interpolation --------------------------------------------------------------

def local_interpolant(ops: LocalElementOps, f: Callable, extra_degree: int = 6) -> np.ndarray:
    """Local dof vector of ``f``: normalized edge and interior moments."""
    k = ops.k
    t, w = gauss_legendre(min(10, k + extra_degree // 2 + 1))
    pts = ops.edge_midpoints[:, None, :] + (t[None, :, None] * ops.edge_lengths[:, None, None]) \
        * ops.edge_tangents[:, None, :]
    fv = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(len(ops.edge_lengths), len(t))
    edge = np.einsum("eq,q,qj->ej", fv, w, np.power.outer(t, np.arange(k))).ravel()
    n_int = dim_poly(k - 2)
    if not n_int:
        return edge
    qp, qw = polygon_quadrature(ops.vertices, k - 2 + extra_degree)
    mon = eval_monomials(qp, ops.center, ops.scale, k - 2)
    interior = mon.T @ (qw * np.asarray(f(qp), dtype=float)) / ops.area
    return np.concatenate([edge, interior])


def interpolate(mesh: PolygonalMesh, k: int, bc: str, f: Callable,
                dofmap: DofMap | None = None) -> np.ndarray:
    """Global dof vector of ``f``; eliminated Dirichlet moments are dropped."""
    dofmap = dofmap or dof_layout(mesh, k, bc)
    out = np.zeros(dofmap.n_dofs)
    for c in range(mesh.n_cells):
        idx = dofmap.local_indices(mesh, c)
        vals = local_interpolant(local_ops(mesh, c, k), f)
        keep = idx >= 0
        out[idx[keep]] = vals[keep]
    return out


def localize(dofmap: DofMap, mesh: PolygonalMesh, c: int, dofvec: np.ndarray) -> np.ndarray:
    idx = dofmap.local_indices(mesh, c)
    return np.where(idx >= 0, dofvec[np.maximum(idx, 0)], 0.0)
