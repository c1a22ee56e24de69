"""Benchmark mesh families on the unit square and the L-shaped domain."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import shapely
from scipy.spatial import Voronoi, cKDTree

from .mesh import PolygonalMesh, build_mesh
from .polybasis import polygon_area, polygon_centroid

FAMILIES = ("hexagonal_distorted", "nonconvex_octagon", "random_quads", "voronoi_cvt")
DOMAINS = ("unit_square", "lshape")
MAX_LEVEL = 6
LLOYD_ITERATIONS = 100
OCTAGON_PUSH = 0.2
QUAD_JITTER = 0.25
MIN_EDGE_RATIO = 0.08
CORNER_RINGS = 3

_FAMILY_CODE = {name: i for i, name in enumerate(FAMILIES)}

LSHAPE = np.array([[-1.0, -1.0], [0.0, -1.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]])
UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


class UnsupportedCombination(ValueError):
    pass


def cells_per_side(level: int) -> int:
    return 4 * 2 ** level


def generate_family(family: str, level: int, domain: str = "unit_square",
                    seed: int = 0) -> PolygonalMesh:
    """Mesh of ``family`` at refinement ``level``; pure function of its arguments."""
    if family not in FAMILIES or domain not in DOMAINS:
        raise UnsupportedCombination(f"unknown family/domain {family!r}/{domain!r}")
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must lie in 0..{MAX_LEVEL}")
    if domain == "lshape" and family != "voronoi_cvt":
        raise UnsupportedCombination(f"{family} is only available on the unit square")
    return _generate(family, int(level), domain, int(seed))


@lru_cache(maxsize=64)
def _generate(family: str, level: int, domain: str, seed: int) -> PolygonalMesh:
    if family == "hexagonal_distorted":
        verts, cells = hexagonal_distorted(cells_per_side(level))
    elif family == "nonconvex_octagon":
        verts, cells = nonconvex_octagon(cells_per_side(level))
    elif family == "random_quads":
        rng = np.random.default_rng([seed, level, _FAMILY_CODE[family]])
        verts, cells = random_quads(cells_per_side(level), rng)
    else:
        rng = np.random.default_rng([seed, level, _FAMILY_CODE[family], DOMAINS.index(domain)])
        if domain == "unit_square":
            n_points = cells_per_side(level) ** 2
            boundary = UNIT_SQUARE
        else:
            n_points = 12 * 4 ** level
            boundary = LSHAPE
            spacing = np.sqrt(3.0 / n_points)
            pinned = corner_rings(np.zeros(2), 0.0, 1.5 * np.pi, spacing,
                                  min(CORNER_RINGS, level + 1))
            verts, cells = voronoi_cvt(boundary, n_points, rng, pinned=pinned)
            return build_mesh(verts, cells, domain)
        verts, cells = voronoi_cvt(boundary, n_points, rng)
    return build_mesh(verts, cells, domain)


# -- structured families ------------------------------------------------------

def tensor_grid(n: int) -> tuple[np.ndarray, list[list[int]]]:
    x = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(x, x, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    vid = lambda i, j: j * (n + 1) + i  # noqa: E731
    cells = [[vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
             for j in range(n) for i in range(n)]
    return verts, cells


def random_quads(n: int, rng: np.random.Generator):
    verts, cells = tensor_grid(n)
    h = 1.0 / n
    interior = ~(np.isclose(verts, 0.0) | np.isclose(verts, 1.0)).any(axis=1)
    shift = rng.uniform(-QUAD_JITTER * h, QUAD_JITTER * h, size=verts.shape)
    verts = verts + shift * interior[:, None]
    return verts, cells


def hexagonal_distorted(n: int):
    """Brick-wall hexagons made pointy, then pushed through a smooth map.

    Row ``r`` holds cells spanning two vertex columns, rows alternately
    offset by one column so the side cells are half bricks (quadrilaterals).
    """
    ncol = 2 * n
    dx, dy = 1.0 / ncol, 1.0 / n
    delta = dy / 6.0
    vid = lambda i, j: j * (ncol + 1) + i  # noqa: E731
    verts = np.zeros(((ncol + 1) * (n + 1), 2))
    for j in range(n + 1):
        for i in range(ncol + 1):
            y = j * dy
            if 0 < j < n:
                # bottom-mid of row j (down) or top-mid of row j-1 (up)
                y += -delta if (i - j) % 2 == 1 else delta
            verts[vid(i, j)] = (i * dx, y)
    cells = []
    for r in range(n):
        start = -(r % 2)
        for c in range(start, ncol, 2):
            lo, hi = max(c, 0), min(c + 2, ncol)
            bottom = [vid(i, r) for i in range(lo, hi + 1)]
            top = [vid(i, r + 1) for i in range(hi, lo - 1, -1)]
            cells.append(bottom + top)
    x, y = verts[:, 0], verts[:, 1]
    bump = 0.1 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
    verts = np.column_stack([x + bump, y + bump])
    return verts, cells


def nonconvex_octagon(n: int):
    """Dented-square octagons with a kite filling every interior grid edge."""
    H = 1.0 / n
    push = OCTAGON_PUSH * H
    verts: list[tuple[float, float]] = []
    index: dict = {}

    def vertex(key, xy):
        if key not in index:
            index[key] = len(verts)
            verts.append(xy)
        return index[key]

    corner = lambda i, j: vertex(("c", i, j), (i * H, j * H))  # noqa: E731

    def hmid(i, j, into):
        # midpoint of horizontal edge (i,j)-(i+1,j) pushed into the cell above (+1) or below (-1)
        if j in (0, n):
            return vertex(("h", i, j, 0), ((i + 0.5) * H, j * H))
        return vertex(("h", i, j, into), ((i + 0.5) * H, j * H + into * push))

    def vmid(i, j, into):
        # midpoint of vertical edge (i,j)-(i,j+1) pushed right (+1) or left (-1)
        if i in (0, n):
            return vertex(("v", i, j, 0), (i * H, (j + 0.5) * H))
        return vertex(("v", i, j, into), (i * H + into * push, (j + 0.5) * H))

    cells = []
    for j in range(n):
        for i in range(n):
            cells.append([corner(i, j), hmid(i, j, +1), corner(i + 1, j), vmid(i + 1, j, -1),
                          corner(i + 1, j + 1), hmid(i, j + 1, -1), corner(i, j + 1), vmid(i, j, +1)])
    for j in range(1, n):
        for i in range(n):
            cells.append([corner(i, j), hmid(i, j, -1), corner(i + 1, j), hmid(i, j, +1)])
    for j in range(n):
        for i in range(1, n):
            cells.append([corner(i, j), vmid(i, j, +1), corner(i, j + 1), vmid(i, j, -1)])
    return np.array(verts), cells


# -- centroidal Voronoi -----------------------------------------------------------

def _bounded_regions(points: np.ndarray, box: tuple[float, float, float, float],
                     check_box: bool = True):
    """Voronoi regions of ``points`` clipped to ``box`` by mirroring across its sides.

    Only points within a band of the walls are mirrored; the full mirror is the
    fallback when the band leaves a region unbounded or poking out of ``box``.
    """
    x0, y0, x1, y1 = box
    spacing = np.sqrt((x1 - x0) * (y1 - y0) / len(points))
    for band in (6.0 * spacing, np.inf):
        mirrored = [points]
        for axis, wall in ((0, x0), (0, x1), (1, y0), (1, y1)):
            near = points[np.abs(points[:, axis] - wall) < band]
            ref = near.copy()
            ref[:, axis] = 2 * wall - ref[:, axis]
            mirrored.append(ref)
        vor = Voronoi(np.vstack(mirrored))
        regions = [vor.regions[vor.point_region[i]] for i in range(len(points))]
        used = np.unique(np.concatenate([np.asarray(r) for r in regions]))
        if used.min() < 0:
            continue
        if not check_box:
            break
        vv = vor.vertices[used]
        tol = 1e-9 * max(x1 - x0, y1 - y0)
        if (vv[:, 0] > x0 - tol).all() and (vv[:, 0] < x1 + tol).all() \
                and (vv[:, 1] > y0 - tol).all() and (vv[:, 1] < y1 + tol).all():
            break
    return vor.vertices, regions


def _ragged_centroids(polys: list[np.ndarray]) -> np.ndarray:
    counts = np.array([len(p) for p in polys])
    owner = np.repeat(np.arange(len(polys)), counts)
    xy = np.vstack(polys)
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    nxt = np.arange(len(xy)) + 1
    nxt[start + counts - 1] = start
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = x[nxt], y[nxt]
    cross = x * yn - xn * y
    area = np.bincount(owner, cross)
    cx = np.bincount(owner, (x + xn) * cross) / (3.0 * area)
    cy = np.bincount(owner, (y + yn) * cross) / (3.0 * area)
    return np.column_stack([cx, cy])


def _clipped_polygons(points, domain_poly: shapely.Polygon, is_box: bool):
    x0, y0, x1, y1 = domain_poly.bounds
    vv, regions = _bounded_regions(points, (x0, y0, x1, y1), check_box=is_box)
    polys = [vv[r] for r in regions]
    if is_box:
        return polys
    counts = np.array([len(p) for p in polys])
    flat = np.vstack(polys)
    outside = ~shapely.contains_xy(domain_poly.buffer(1e-12), flat[:, 0], flat[:, 1])
    crossing = np.bincount(np.repeat(np.arange(len(polys)), counts), outside) > 0
    # a cell may also cross a reflex corner with all its vertices inside
    for corner in shapely.get_coordinates(domain_poly.exterior)[:-1]:
        d = np.hypot(*(points - corner).T)
        crossing[np.argsort(d)[:3]] = True
    for i in np.flatnonzero(crossing):
        p = shapely.intersection(shapely.Polygon(polys[i]), domain_poly)
        if p.geom_type != "Polygon":
            # largest piece only; Lloyd drives these configurations away
            p = max(getattr(p, "geoms", [p]), key=lambda g: g.area)
        p = shapely.geometry.polygon.orient(p, 1.0)
        polys[i] = np.asarray(p.exterior.coords)[:-1]
    return polys


def _ccw(poly: np.ndarray) -> np.ndarray:
    return poly if polygon_area(poly) > 0 else poly[::-1]


def corner_rings(corner: np.ndarray, start: float, opening: float, spacing: float,
                 n_rings: int) -> np.ndarray:
    """Generators on concentric rings around a domain corner.

    Ring ``j`` has radius ``(j + 1/2) * spacing`` and ``3 (j + 1)`` points at
    the midpoints of equal angular slots, so for ``opening = 3 pi / 2`` the
    innermost Voronoi cells meet at the corner and the pattern scales with
    ``spacing``.
    """
    pts = []
    for j in range(n_rings):
        m = 3 * (j + 1)
        ang = start + opening * (np.arange(m) + 0.5) / m
        pts.append(corner + (j + 0.5) * spacing * np.column_stack([np.cos(ang), np.sin(ang)]))
    return np.vstack(pts) if pts else np.empty((0, 2))


def voronoi_cvt(boundary: np.ndarray, n_points: int, rng: np.random.Generator,
                iterations: int = LLOYD_ITERATIONS, pinned: np.ndarray | None = None):
    """Lloyd-relaxed Voronoi mesh clipped to the polygon ``boundary``.

    ``pinned`` generators are kept fixed during relaxation; random generators
    are not seeded close to them.
    """
    domain = shapely.Polygon(boundary)
    is_box = len(boundary) == 4 and domain.area == shapely.envelope(domain).area
    x0, y0, x1, y1 = domain.bounds
    pinned = np.empty((0, 2)) if pinned is None else np.asarray(pinned, dtype=float)
    tree = cKDTree(pinned) if len(pinned) else None
    gap = 0.75 * np.sqrt(domain.area / n_points)
    pts = pinned
    while len(pts) < n_points:
        cand = rng.uniform([x0, y0], [x1, y1], size=(2 * n_points, 2))
        inside = shapely.contains_xy(domain, cand[:, 0], cand[:, 1])
        if tree is not None:
            inside &= tree.query(cand)[0] > gap
        pts = np.vstack([pts, cand[inside]])
    pts = pts[:n_points]
    for _ in range(iterations):
        pts = _ragged_centroids(_clipped_polygons(pts, domain, is_box))
        pts[:len(pinned)] = pinned
    polys = [_ccw(p) for p in _clipped_polygons(pts, domain, is_box)]
    verts, cells = _merge_vertices(polys, boundary)
    return collapse_short_edges(verts, cells, boundary)


def _snap_to_boundary(xy: np.ndarray, boundary: np.ndarray, tol: float) -> np.ndarray:
    out = xy.copy()
    for v in boundary:
        close = np.hypot(*(out - v).T) < tol
        out[close] = v
    xs = np.unique(boundary[:, 0])
    ys = np.unique(boundary[:, 1])
    for x in xs:
        out[np.abs(out[:, 0] - x) < tol, 0] = x
    for y in ys:
        out[np.abs(out[:, 1] - y) < tol, 1] = y
    return out


def _merge_vertices(polys, boundary, tol: float = 1e-9):
    allpts = np.vstack(polys)
    allpts = _snap_to_boundary(allpts, boundary, tol)
    key = np.round(allpts / tol).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    verts = allpts[first]
    cells, pos = [], 0
    for p in polys:
        loop = inverse[pos:pos + len(p)].tolist()
        pos += len(p)
        dedup = [v for i, v in enumerate(loop) if v != loop[i - 1]]
        cells.append(dedup)
    return verts, cells


def _on_boundary(xy: np.ndarray, boundary: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Index of the boundary side each point lies on, or -1."""
    side = np.full(len(xy), -1)
    nb = len(boundary)
    for s in range(nb):
        a, b = boundary[s], boundary[(s + 1) % nb]
        d = b - a
        L = np.hypot(*d)
        rel = xy - a
        dist = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / L
        proj = (rel @ d) / L
        hit = (dist < tol) & (proj > -tol) & (proj < L + tol) & (side < 0)
        side[hit] = s
    return side


def collapse_short_edges(verts: np.ndarray, cells: list[list[int]], boundary: np.ndarray,
                         ratio: float = MIN_EDGE_RATIO):
    """Merge edge endpoints while some edge is shorter than ``ratio`` times its cell diameter.

    Domain corners never move; a boundary vertex absorbs an interior one; two
    vertices on the same boundary side meet at their midpoint.
    """
    verts = np.array(verts, dtype=float)
    cells = [list(c) for c in cells]
    corner = np.zeros(len(verts), dtype=bool)
    for v in boundary:
        corner |= np.hypot(*(verts - v).T) < 1e-12
    side = _on_boundary(verts, boundary)

    for _ in range(50):
        candidates = []
        for c in cells:
            if len(c) <= 3:
                continue
            xy = verts[c]
            diam = np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(-1).max())
            lengths = np.hypot(*(xy - np.roll(xy, -1, axis=0)).T) / diam
            for i in np.flatnonzero(lengths < ratio):
                candidates.append((lengths[i], c[i], c[(i + 1) % len(c)]))
        if not candidates:
            break
        small = {v for c in cells if len(c) <= 3 for v in c}
        touched: set[int] = set()
        merge = {}
        for _, a, b in sorted(candidates):
            if a in touched or b in touched or (a in small and b in small):
                continue
            if corner[a] and corner[b]:
                continue
            if side[a] >= 0 and side[b] >= 0 and side[a] != side[b] and not (corner[a] or corner[b]):
                continue
            if corner[a] or (side[a] >= 0 and side[b] < 0):
                keep, drop, target = a, b, verts[a].copy()
            elif corner[b] or (side[b] >= 0 and side[a] < 0):
                keep, drop, target = b, a, verts[b].copy()
            else:
                keep, drop, target = a, b, 0.5 * (verts[a] + verts[b])
            verts[keep] = target
            merge[drop] = keep
            touched.update((a, b))
        if not merge:
            break
        new_cells = []
        for c in cells:
            c = [merge.get(v, v) for v in c]
            c = [v for i, v in enumerate(c) if v != c[i - 1]]
            new_cells.append(c)
        cells = new_cells

    used = np.unique(np.concatenate([np.asarray(c) for c in cells]))
    remap = -np.ones(len(verts), dtype=int)
    remap[used] = np.arange(len(used))
    return verts[used], [remap[c].tolist() for c in cells]
