import numpy as np
import pytest
from hypothesis import strategies as st

from ncvem.mesh import build_mesh, kernel_inradius
from ncvem.polybasis import polygon_diameter

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def grid_mesh(n: int = 2):
    """Uniform ``n x n`` quadrilateral grid of the unit square."""
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = np.array([[x, y] for y in xs for x in xs])
    vid = lambda i, j: j * (n + 1) + i  # noqa: E731
    cells = [[vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
             for j in range(n) for i in range(n)]
    return build_mesh(verts, cells, "unit_square")


def star_polygon(rng: np.random.Generator, n_min: int = 3, n_max: int = 9,
                 min_ratio: float = 0.08) -> np.ndarray:
    """Random polygon star-shaped with respect to a disk around the origin.

    Radii in [0.4, 1.0] and jittered angles give convex and nonconvex cells;
    candidates whose kernel disk is too small relative to the diameter are
    rejected.
    """
    while True:
        n = int(rng.integers(n_min, n_max + 1))
        ang = np.sort((np.arange(n) + rng.uniform(-0.3, 0.3, n)) * 2 * np.pi / n)
        rad = rng.uniform(0.4, 1.0, n)
        poly = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        poly = poly * rng.uniform(0.05, 3.0) + rng.uniform(-2, 2, 2)
        if kernel_inradius(poly) > min_ratio * polygon_diameter(poly):
            return poly


@st.composite
def polygons(draw, n_min: int = 3, n_max: int = 9):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return star_polygon(np.random.default_rng(seed), n_min, n_max)


@pytest.fixture
def square():
    return UNIT_SQUARE.copy()


@pytest.fixture
def grid2():
    return grid_mesh(2)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", None) == "call":
                lines += [v for name, v in rep.user_properties if name == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
