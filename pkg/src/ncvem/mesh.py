"""Polygonal meshes: construction, validation, JSON I/O and regularity report."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .polybasis import polygon_area, polygon_centroid, polygon_diameter

BOUNDARY = -1
AREA_TOL = 1e-14

DOMAIN_AREA = {"unit_square": 1.0, "lshape": 3.0}


class MeshError(ValueError):
    pass


class DegenerateCell(MeshError):
    pass


class NonManifoldEdge(MeshError):
    pass


class DuplicateVertexInLoop(MeshError):
    pass


class ClockwiseCell(MeshError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PolygonalMesh:
    """Immutable polygonal mesh with derived edge and cell geometry.

    Each edge is stored as ``(a, b)`` in the order traversed by its lower-index
    cell (``edge_cells[e, 0]``), so ``edge_normals`` point from the lower to the
    higher cell index and outward on the boundary. The arc-length coordinate of
    every edge runs from ``a`` to ``b``.
    """

    vertices: np.ndarray
    cells: tuple[np.ndarray, ...]
    domain: str | None
    edges: np.ndarray            # (E, 2) vertex ids
    edge_cells: np.ndarray       # (E, 2) left cell, right cell or BOUNDARY
    edge_normals: np.ndarray     # (E, 2)
    edge_tangents: np.ndarray    # (E, 2)
    edge_midpoints: np.ndarray   # (E, 2)
    edge_lengths: np.ndarray     # (E,)
    cell_edges: tuple[np.ndarray, ...]
    cell_edge_flips: tuple[np.ndarray, ...]
    centroids: np.ndarray
    diameters: np.ndarray
    areas: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @property
    def boundary_edges(self) -> np.ndarray:
        return self.edge_cells[:, 1] == BOUNDARY

    def cell_vertices(self, c: int) -> np.ndarray:
        return self.vertices[self.cells[c]]

    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "cells": [loop.tolist() for loop in self.cells],
            "domain": self.domain,
        }

    def fingerprint(self) -> bytes:
        parts = [self.vertices.tobytes()] + [c.tobytes() for c in self.cells]
        return b"|".join(parts)


def _is_simple(poly: np.ndarray) -> bool:
    n = len(poly)
    if n == 3:
        return True

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for j in range(i + 2, n):
            if (j + 1) % n == i:
                continue
            c, d = poly[j], poly[(j + 1) % n]
            o1, o2 = orient(a, b, c), orient(a, b, d)
            o3, o4 = orient(c, d, a), orient(c, d, b)
            if o1 * o2 < 0 and o3 * o4 < 0:
                return False
    return True


def build_mesh(vertices, cells, domain: str | None = None) -> PolygonalMesh:
    """Validate a vertex/cell description and derive edges and geometry."""
    verts = np.array(vertices, dtype=float).reshape(-1, 2)
    loops = []
    for c, loop in enumerate(cells):
        loop = np.asarray(loop, dtype=np.int64)
        if loop.ndim != 1 or len(loop) < 3:
            raise DegenerateCell(f"cell {c} has fewer than 3 vertices")
        if loop.min() < 0 or loop.max() >= len(verts):
            raise MeshError(f"cell {c} references a vertex out of range")
        if len(np.unique(loop)) != len(loop):
            raise DuplicateVertexInLoop(f"cell {c} visits a vertex twice")
        loops.append(_frozen(loop))

    n_cells = len(loops)
    centroids = np.empty((n_cells, 2))
    diameters = np.empty(n_cells)
    areas = np.empty(n_cells)
    for c, loop in enumerate(loops):
        poly = verts[loop]
        area = polygon_area(poly)
        diam = polygon_diameter(poly)
        if abs(area) < AREA_TOL * diam ** 2:
            raise DegenerateCell(f"cell {c} has near-zero area")
        if area < 0:
            raise ClockwiseCell(f"cell {c} is oriented clockwise")
        if not _is_simple(poly):
            raise DegenerateCell(f"cell {c} is self-intersecting")
        centroids[c] = polygon_centroid(poly)
        diameters[c] = diam
        areas[c] = area

    edge_id: dict[tuple[int, int], int] = {}
    edges, edge_cells = [], []
    cell_edges, cell_flips = [], []
    for c, loop in enumerate(loops):
        nxt = np.roll(loop, -1)
        ids = np.empty(len(loop), dtype=np.int64)
        flips = np.zeros(len(loop), dtype=bool)
        for i, (a, b) in enumerate(zip(loop.tolist(), nxt.tolist())):
            key = (a, b) if a < b else (b, a)
            e = edge_id.get(key)
            if e is None:
                e = len(edges)
                edge_id[key] = e
                edges.append((a, b))
                edge_cells.append([c, BOUNDARY])
            else:
                if edge_cells[e][1] != BOUNDARY:
                    raise NonManifoldEdge(f"edge {key} shared by more than two cells")
                if edges[e] != (b, a):
                    raise NonManifoldEdge(f"edge {key} traversed twice in the same direction")
                edge_cells[e][1] = c
                flips[i] = True
            ids[i] = e
        cell_edges.append(_frozen(ids))
        cell_flips.append(_frozen(flips))

    edges_arr = np.array(edges, dtype=np.int64).reshape(-1, 2)
    d = verts[edges_arr[:, 1]] - verts[edges_arr[:, 0]]
    lengths = np.hypot(d[:, 0], d[:, 1])
    tangents = d / lengths[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    midpoints = 0.5 * (verts[edges_arr[:, 0]] + verts[edges_arr[:, 1]])

    return PolygonalMesh(
        vertices=_frozen(verts),
        cells=tuple(loops),
        domain=domain,
        edges=_frozen(edges_arr),
        edge_cells=_frozen(np.array(edge_cells, dtype=np.int64).reshape(-1, 2)),
        edge_normals=_frozen(normals),
        edge_tangents=_frozen(tangents),
        edge_midpoints=_frozen(midpoints),
        edge_lengths=_frozen(lengths),
        cell_edges=tuple(cell_edges),
        cell_edge_flips=tuple(cell_flips),
        centroids=_frozen(centroids),
        diameters=_frozen(diameters),
        areas=_frozen(areas),
    )


def save_mesh(mesh: PolygonalMesh, path) -> None:
    Path(path).write_text(json.dumps(mesh.to_dict()))


def load_mesh(path) -> PolygonalMesh:
    data = json.loads(Path(path).read_text())
    return build_mesh(data["vertices"], data["cells"], data.get("domain"))


# -- regularity -------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    """Empirical mesh-regularity proxies; all ratios lie in (0, 1]."""

    min_inradius_ratio: float
    min_edge_ratio: float
    max_vertices: int


def kernel_inradius(poly: np.ndarray) -> float:
    """Radius of the largest disk inside the kernel of a polygon.

    The polygon is star-shaped with respect to every such disk. For a convex
    polygon this is the inscribed radius.
    """
    a = poly
    b = np.roll(poly, -1, axis=0)
    d = b - a
    length = np.hypot(d[:, 0], d[:, 1])
    n = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    # n.x + r <= n.a for every edge; maximise r
    A = np.column_stack([n, np.ones(len(poly))])
    rhs = (n * a).sum(axis=1)
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=A, b_ub=rhs,
                  bounds=[(None, None), (None, None), (0.0, None)], method="highs")
    if res.status != 0:
        return 0.0
    return float(res.x[2])


def regularity_report(mesh: PolygonalMesh) -> RegularityReport:
    radius = np.array([kernel_inradius(mesh.cell_vertices(c)) for c in range(mesh.n_cells)])
    inr = radius / mesh.diameters
    owner_h = np.where(mesh.edge_cells[:, 1] == BOUNDARY,
                       mesh.diameters[mesh.edge_cells[:, 0]],
                       np.maximum(mesh.diameters[mesh.edge_cells[:, 0]],
                                  mesh.diameters[np.maximum(mesh.edge_cells[:, 1], 0)]))
    edge_ratio = mesh.edge_lengths / owner_h
    return RegularityReport(
        min_inradius_ratio=float(inr.min()),
        min_edge_ratio=float(edge_ratio.min()),
        max_vertices=int(max(len(c) for c in mesh.cells)),
    )
