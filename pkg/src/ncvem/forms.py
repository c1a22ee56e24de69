"""Stabilized stiffness, (non)stabilized mass, global assembly and load vectors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .mesh import BOUNDARY, PolygonalMesh
from .polybasis import gauss_legendre, l2_project_element
from .vemspace import (DofMap, LocalElementOps, all_local_ops, dof_layout, local_interpolant,
                       localize)

VARIANTS = ("nonstabilized", "stabilized")


@dataclass(frozen=True)
class StabilizationOptions:
    """How the scalar stabilization constants are picked.

    ``None`` rules follow the default recipe (mean eigenvalue for k=1, max for
    k=2,3). ``mean_over`` chooses whether zero eigenvalues enter the mean.
    ``mass_length`` is the length ``h`` in ``tau_P h^2``: the global mesh size
    or the cell diameter.
    """

    sigma_rule: str | None = None
    tau_rule: str | None = None
    mean_over: str = "all"
    mass_length: str = "global"


DEFAULT_OPTIONS = StabilizationOptions()


@dataclass(frozen=True)
class StabilizationParams:
    sigma: np.ndarray
    tau: np.ndarray


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    variant: str
    dofmap: DofMap
    params: StabilizationParams
    tau_override: float | None = None


def _pick(eigs: np.ndarray, rule: str, mean_over: str) -> float:
    if rule == "max":
        return float(eigs.max())
    if rule != "mean":
        raise ValueError(f"unknown rule {rule!r}")
    if mean_over == "nonzero":
        eigs = eigs[eigs > 1e-12 * max(eigs.max(), 1e-300)]
    return float(eigs.mean())


def _default_rule(k: int) -> str:
    return "mean" if k == 1 else "max"


def local_stiffness(ops: LocalElementOps,
                    options: StabilizationOptions = DEFAULT_OPTIONS) -> tuple[np.ndarray, float]:
    """Consistency plus scalar dof stabilization; returns ``(K, sigma_P)``."""
    cons = ops.pi_nabla.T @ ops.G @ ops.pi_nabla
    cons = 0.5 * (cons + cons.T)
    rule = options.sigma_rule or _default_rule(ops.k)
    sigma = _pick(np.linalg.eigvalsh(cons), rule, options.mean_over)
    R = np.eye(ops.n_dofs) - ops.pi_nabla_dof
    return cons + sigma * (R.T @ R), sigma


def local_mass(ops: LocalElementOps, variant: str = "nonstabilized", tau_override: float | None = None,
               h: float | None = None,
               options: StabilizationOptions = DEFAULT_OPTIONS) -> tuple[np.ndarray, float]:
    """Local mass matrix and ``tau_P`` (0 for the nonstabilized variant)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    cons = ops.pi_zero.T @ ops.H @ ops.pi_zero
    cons = 0.5 * (cons + cons.T)
    if variant == "nonstabilized":
        return cons, 0.0
    if options.mass_length == "local" or h is None:
        h = ops.scale
    rule = options.tau_rule or _default_rule(ops.k)
    tau = _pick(np.linalg.eigvalsh(cons / h ** 2), rule, options.mean_over)
    if tau_override is not None:
        tau *= tau_override
    R = np.eye(ops.n_dofs) - ops.pi_zero_dof
    return cons + tau * h ** 2 * (R.T @ R), tau


def assemble(mesh: PolygonalMesh, k: int, bc: str = "dirichlet", variant: str = "nonstabilized",
             tau_override: float | None = None,
             options: StabilizationOptions = DEFAULT_OPTIONS) -> AssembledSystem:
    dofmap = dof_layout(mesh, k, bc)
    ops = all_local_ops(mesh, k)
    rows, cols, a_vals, b_vals = [], [], [], []
    sigma = np.empty(mesh.n_cells)
    tau = np.empty(mesh.n_cells)
    for c, op in enumerate(ops):
        K, sigma[c] = local_stiffness(op, options)
        M, tau[c] = local_mass(op, variant, tau_override, mesh.h, options)
        idx = dofmap.local_indices(mesh, c)
        keep = np.flatnonzero(idx >= 0)
        g = idx[keep]
        rows.append(np.repeat(g, len(g)))
        cols.append(np.tile(g, len(g)))
        a_vals.append(K[np.ix_(keep, keep)].ravel())
        b_vals.append(M[np.ix_(keep, keep)].ravel())
    r, cc = np.concatenate(rows), np.concatenate(cols)
    n = dofmap.n_dofs
    A = sp.coo_matrix((np.concatenate(a_vals), (r, cc)), shape=(n, n)).tocsr()
    B = sp.coo_matrix((np.concatenate(b_vals), (r, cc)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    B.sum_duplicates()
    return AssembledSystem(A, B, variant, dofmap, StabilizationParams(sigma, tau), tau_override)


def rhs_source(mesh: PolygonalMesh, k: int, bc: str, variant: str, f: Callable,
               system: AssembledSystem | None = None,
               options: StabilizationOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Load vector ``b_h(f, phi_i)`` of the chosen mass variant."""
    dofmap = system.dofmap if system is not None else dof_layout(mesh, k, bc)
    tau_override = system.tau_override if system is not None else None
    out = np.zeros(dofmap.n_dofs)
    for c, op in enumerate(all_local_ops(mesh, k)):
        coeffs = l2_project_element(op.vertices, f, k, op.center, op.scale, quad_degree=2 * k + 6)
        load = op.pi_zero.T @ (op.H @ coeffs)
        if variant == "stabilized":
            _, tau = local_mass(op, variant, tau_override, mesh.h, options)
            h = op.scale if options.mass_length == "local" else mesh.h
            R = np.eye(op.n_dofs) - op.pi_zero_dof
            fi = local_interpolant(op, f)
            load = load + tau * h ** 2 * (R.T @ (R @ fi))
        idx = dofmap.local_indices(mesh, c)
        keep = idx >= 0
        np.add.at(out, idx[keep], load[keep])
    return out


def jump_moment_residual(mesh: PolygonalMesh, k: int, dofmap: DofMap, dofvec: np.ndarray) -> float:
    """Largest jump moment of the elliptic projections across interior edges.

    The virtual functions have zero jump moments by construction (one shared
    dof per edge moment); this recomputes them from the two per-cell
    polynomial traces as a debugging proxy.
    """
    ops = all_local_ops(mesh, k)
    coeffs = [op.pi_nabla @ localize(dofmap, mesh, c, dofvec) for c, op in enumerate(ops)]
    t, w = gauss_legendre(k + 1)
    from .polybasis import eval_monomials

    worst = 0.0
    for e in np.flatnonzero(mesh.edge_cells[:, 1] != BOUNDARY):
        left, right = mesh.edge_cells[e]
        pts = mesh.edge_midpoints[e] + np.outer(t * mesh.edge_lengths[e], mesh.edge_tangents[e])
        vl = eval_monomials(pts, ops[left].center, ops[left].scale, k) @ coeffs[left]
        vr = eval_monomials(pts, ops[right].center, ops[right].scale, k) @ coeffs[right]
        moments = mesh.edge_lengths[e] * (np.power.outer(t, np.arange(k)).T @ (w * (vl - vr)))
        worst = max(worst, float(np.abs(moments).max()))
    return worst
