import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncvem import vemspace as V
from ncvem.harness import fit_rate
from ncvem.meshgen import FAMILIES, generate_family
from ncvem.polybasis import dim_poly, eval_monomials, grad_monomials, polygon_quadrature
from conftest import UNIT_SQUARE, grid_mesh, polygons

DEGREES = [1, 2, 3]
sinsin = lambda p: np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])  # noqa: E731


def test_dof_counts(grid2):
    assert V.dof_layout(grid2, 1, "dirichlet").n_dofs == 4
    assert V.dof_layout(grid2, 2, "dirichlet").n_dofs == 12
    assert V.dof_layout(grid2, 1, "neumann").n_dofs == 12
    assert V.dof_layout(grid2, 3, "neumann").n_dofs == 12 * 3 + 4 * 3


@pytest.mark.parametrize("k", DEGREES)
@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_dof_layout_is_a_bijection(k, bc):
    m = generate_family("voronoi_cvt", 0)
    dm = V.dof_layout(m, k, bc)
    n_edges = m.n_edges if bc == "neumann" else int((~m.boundary_edges).sum())
    assert dm.n_dofs == n_edges * k + m.n_cells * dim_poly(k - 2)
    used = np.concatenate([dm.edge_dofs.ravel(), dm.cell_dofs.ravel()])
    used = used[used >= 0]
    np.testing.assert_array_equal(np.sort(used), np.arange(dm.n_dofs))
    if bc == "dirichlet":
        assert np.all(dm.edge_dofs[m.boundary_edges] == -1)
    else:
        assert dm.boundary_mask.sum() == m.boundary_edges.sum() * k


def test_unsupported_degree(grid2):
    with pytest.raises(V.UnsupportedDegree):
        V.dof_layout(grid2, 4)
    with pytest.raises(V.UnsupportedDegree):
        V.polygon_ops(UNIT_SQUARE, 0)


def test_square_k1_projection_example():
    ops = V.polygon_ops(UNIT_SQUARE, 1)
    coeffs = ops.pi_nabla @ np.array([0.0, 1.0, 0.0, -1.0])
    np.testing.assert_allclose(coeffs, [0.0, 2 * np.sqrt(2), 0.0], atol=1e-14)
    # oracle: energy projection of the conforming representative 2x - 1 by dense quadrature
    pts, wts = polygon_quadrature(UNIT_SQUARE, 6)
    g = grad_monomials(pts, ops.center, ops.scale, 1)[:, 1:, :]
    lhs = np.einsum("q,qmx,qnx->mn", wts, g, g)
    rhs = np.einsum("q,qmx,x->m", wts, g, np.array([2.0, 0.0]))
    np.testing.assert_allclose(np.linalg.solve(lhs, rhs), coeffs[1:], atol=1e-13)


def test_interpolate_x_on_square():
    from ncvem.mesh import build_mesh

    m = build_mesh(UNIT_SQUARE, [[0, 1, 2, 3]])
    dofs = V.interpolate(m, 1, "neumann", lambda p: p[:, 0])
    np.testing.assert_allclose(dofs, [0.5, 1.0, 0.5, 0.0], atol=1e-15)


@pytest.mark.parametrize("k", DEGREES)
def test_interpolate_constant(k):
    m = generate_family("random_quads", 0)
    dm = V.dof_layout(m, k, "neumann")
    dofs = V.interpolate(m, k, "neumann", lambda p: np.ones(len(p)))
    np.testing.assert_allclose(dofs[dm.edge_dofs[:, 0]], 1.0, atol=1e-14)
    if k >= 2:
        np.testing.assert_allclose(dofs[dm.edge_dofs[:, 1]], 0.0, atol=1e-14)
        np.testing.assert_allclose(dofs[dm.cell_dofs[:, 0]], 1.0, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(polygons(), st.sampled_from(DEGREES))
def test_projector_identities_on_random_polygons(poly, k):
    flips = np.random.default_rng(len(poly)).random(len(poly)) < 0.5
    ops = V.polygon_ops(poly, k, flips)
    nm = dim_poly(k)
    I = np.eye(nm)
    # polynomial preservation
    np.testing.assert_allclose(ops.pi_nabla @ ops.D, I, atol=1e-11)
    np.testing.assert_allclose(ops.pi_zero @ ops.D, I, atol=1e-11)
    # idempotence in dof space
    P = ops.pi_nabla_dof
    np.testing.assert_allclose(P @ P, P, atol=1e-12 * max(1, np.abs(P).max()))
    Q = ops.pi_zero_dof
    np.testing.assert_allclose(Q @ Q, Q, atol=1e-12 * max(1, np.abs(Q).max()))
    if k <= 2:
        np.testing.assert_allclose(ops.pi_zero, ops.pi_nabla, atol=1e-12 * max(1, np.abs(ops.pi_nabla).max()))
    assert np.linalg.matrix_rank(ops.D, tol=1e-10 * np.linalg.norm(ops.D)) == nm


@settings(max_examples=30, deadline=None)
@given(polygons(), st.sampled_from(DEGREES), st.integers(0, 2 ** 31))
def test_closure_and_enhancement(poly, k, seed):
    ops = V.polygon_ops(poly, k)
    v = np.random.default_rng(seed).standard_normal(ops.n_dofs)
    coeffs = ops.pi_nabla @ v
    ne = len(poly)
    if k == 1:
        # boundary average: (1/|S|) int_S Pi v equals the edge dof on every edge sum
        lhs = (ops.D[:ne] @ coeffs) @ ops.edge_lengths
        rhs = v[:ne] @ ops.edge_lengths
    else:
        lhs = ops.monomial_integrals[:dim_poly(k)] @ coeffs
        rhs = ops.area * v[ne * k]
    assert lhs == pytest.approx(rhs, abs=1e-13 * (1 + abs(rhs)) * max(1, ops.area))
    # moments of Pi0 v against the top monomials equal those of Pi_nabla v
    top = slice(dim_poly(k - 2), dim_poly(k))
    np.testing.assert_allclose((ops.H @ (ops.pi_zero @ v))[top], (ops.H @ coeffs)[top],
                               atol=1e-12 * (1 + np.abs(ops.H @ coeffs).max()))
    # and the low moments are the interior dofs
    if k >= 2:
        np.testing.assert_allclose((ops.H @ (ops.pi_zero @ v))[:dim_poly(k - 2)] / ops.area,
                                   v[ne * k:], atol=1e-12 * (1 + np.abs(v).max()))


@pytest.mark.parametrize("family", FAMILIES)
def test_unisolvency_on_generated_meshes(family):
    m = generate_family(family, 1)
    for k in DEGREES:
        for ops in V.all_local_ops(m, k):
            assert np.linalg.matrix_rank(ops.D, tol=1e-10 * np.linalg.norm(ops.D)) == dim_poly(k)


def test_global_orientation_shares_dofs():
    """Both neighbours of an edge compute identical moments, so one global dof suffices."""
    m = generate_family("hexagonal_distorted", 0)
    f = lambda p: np.exp(p[:, 0]) * np.cos(3 * p[:, 1])  # noqa: E731
    for k in DEGREES:
        seen = {}
        for c in range(m.n_cells):
            vals = V.local_interpolant(V.local_ops(m, c, k), f)
            for i, e in enumerate(m.cell_edges[c]):
                block = vals[i * k:(i + 1) * k]
                if e in seen:
                    np.testing.assert_allclose(block, seen[e], atol=1e-14)
                seen[e] = block


@pytest.mark.parametrize("k", DEGREES)
def test_projection_of_global_polynomial(k):
    m = generate_family("nonconvex_octagon", 0)
    q = lambda p: 1 + p[:, 0] - 2 * p[:, 1] ** min(k, 2) + (k == 3) * p[:, 0] ** 3  # noqa: E731
    dm = V.dof_layout(m, k, "neumann")
    dofs = V.interpolate(m, k, "neumann", q, dm)
    for c, ops in enumerate(V.all_local_ops(m, k)):
        pts, _ = polygon_quadrature(ops.vertices, 4)
        basis = eval_monomials(pts, ops.center, ops.scale, k)
        v = V.localize(dm, m, c, dofs)
        np.testing.assert_allclose(basis @ (ops.pi_nabla @ v), q(pts), atol=1e-11)
        np.testing.assert_allclose(basis @ (ops.pi_zero @ v), q(pts), atol=1e-11)


@pytest.mark.parametrize("k", DEGREES)
def test_interpolation_error_rate(k):
    errs, hs = [], []
    for level in (1, 2, 3):
        m = generate_family("random_quads", level)
        dm = V.dof_layout(m, k, "dirichlet")
        dofs = V.interpolate(m, k, "dirichlet", sinsin, dm)
        err = 0.0
        for c, ops in enumerate(V.all_local_ops(m, k)):
            pts, wts = polygon_quadrature(ops.vertices, 2 * k + 4)
            vh = eval_monomials(pts, ops.center, ops.scale, k) @ (ops.pi_zero @ V.localize(dm, m, c, dofs))
            err += wts @ (sinsin(pts) - vh) ** 2
        errs.append(np.sqrt(err))
        hs.append(m.h)
    assert fit_rate(np.column_stack([hs, errs])) > k + 1 - 0.3
