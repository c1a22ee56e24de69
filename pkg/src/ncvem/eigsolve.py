"""Generalized symmetric eigenproblems with a possibly singular mass matrix."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import AssembledSystem
from .mesh import PolygonalMesh
from .polybasis import eval_monomials, grad_monomials, polygon_quadrature
from .vemspace import DofMap, all_local_ops, localize

DENSE_LIMIT = 1500
MU_CUT = 1e-10


class FactorizationFailure(RuntimeError):
    pass


class ConvergenceFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray   # ascending, finite only
    eigenvectors: np.ndarray  # (n, m), B-orthonormal columns
    n_discarded: int


def _dense(M) -> np.ndarray:
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)


def _is_positive_definite(A) -> bool:
    try:
        if sp.issparse(A):
            lu = spla.splu(sp.csc_matrix(A), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                           options={"SymmetricMode": True})
            d = lu.U.diagonal()
            return bool(np.all(d > 1e-13 * np.abs(d).max()))
        la.cholesky(A)
        d = np.linalg.eigvalsh(A)
        return bool(d.min() > 1e-13 * d.max())
    except (la.LinAlgError, RuntimeError):
        return False


def _default_shift(A, B) -> float:
    return float(A.diagonal().sum() / B.diagonal().sum()) * 1e-3


def solve_gevp(A, B, num_eigs: int, shift: float | None = None, method: str = "auto",
               tol: float = 0.0) -> EigenResult:
    """Smallest finite eigenpairs of ``A x = lam B x``.

    Solves the inverted problem ``B x = mu (A + s B) x`` and reports
    ``lam = 1/mu - s`` for ``mu > MU_CUT * mu_max``; zero ``mu`` modes are the
    infinite eigenvalues of a singular ``B`` and are counted, not returned.
    The shift ``s`` is zero when ``A`` is definite.
    """
    n = A.shape[0]
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError("A and B must be square and of equal order")
    if not 1 <= num_eigs <= n:
        raise ValueError("num_eigs must lie in 1..n")
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "sparse"
    if shift is None:
        shift = 0.0 if _is_positive_definite(A) else _default_shift(A, B)

    if method == "dense":
        Ad, Bd = _dense(A), _dense(B)
        try:
            mu, X = la.eigh(Bd, Ad + shift * Bd, subset_by_index=[n - num_eigs, n - 1])
        except la.LinAlgError as exc:
            raise FactorizationFailure(str(exc)) from exc
    elif method == "sparse":
        As, Bs = sp.csc_matrix(A), sp.csc_matrix(B)
        try:
            lu = spla.splu(As + shift * Bs)
        except RuntimeError as exc:
            raise FactorizationFailure(str(exc)) from exc
        # B x = mu (A + sB) x with the definite right-hand matrix as the metric
        op = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
        try:
            mu, X = spla.eigsh(Bs, k=min(num_eigs, n - 1), M=As + shift * Bs, Minv=op,
                               which="LA", tol=tol, maxiter=max(1000, 20 * n))
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceFailure(str(exc)) from exc
        order = np.argsort(mu)
        mu, X = mu[order], X[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")

    finite = mu > MU_CUT * max(mu.max(), 0.0)
    n_discarded = int((~finite).sum())
    X = X[:, finite]
    lam, X = _rayleigh_ritz(A, B, X)
    return EigenResult(lam, X, n_discarded)


def _rayleigh_ritz(A, B, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Refine a basis with the exact ``A``; returns ascending, B-orthonormal pairs."""
    if X.shape[1] == 0:
        return np.empty(0), X
    AX, BX = A @ X, B @ X
    Ar = X.T @ AX
    Br = X.T @ BX
    lam, Y = la.eigh(0.5 * (Ar + Ar.T), 0.5 * (Br + Br.T))
    return lam, X @ Y


def solve_source(system: AssembledSystem, rhs: np.ndarray) -> np.ndarray:
    """``A x = rhs`` for a definite (Dirichlet) stiffness."""
    if system.dofmap.bc != "dirichlet":
        raise ValueError("source problems need the Dirichlet stiffness")
    rhs = np.asarray(rhs, dtype=float)
    if not np.any(rhs):
        return np.zeros_like(rhs)
    try:
        x = spla.splu(sp.csc_matrix(system.A)).solve(rhs)
    except RuntimeError as exc:
        raise FactorizationFailure(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise FactorizationFailure("source solve produced non-finite values")
    res = np.linalg.norm(system.A @ x - rhs)
    if res > 1e-10 * np.linalg.norm(rhs):
        x = x + spla.splu(sp.csc_matrix(system.A)).solve(rhs - system.A @ x)
    return x


def discrete_errors(mesh: PolygonalMesh, k: int, dofmap: DofMap, dofvec: np.ndarray,
                    u_exact: Callable, grad_u_exact: Callable,
                    quad_degree: int | None = None) -> tuple[float, float]:
    """L2 error of the L2 projection and broken H1 error of the elliptic projection."""
    qd = quad_degree or 2 * k + 6
    l2 = h1 = 0.0
    for c, op in enumerate(all_local_ops(mesh, k)):
        v = localize(dofmap, mesh, c, dofvec)
        pts, wts = polygon_quadrature(op.vertices, qd)
        uh = eval_monomials(pts, op.center, op.scale, k) @ (op.pi_zero @ v)
        guh = np.einsum("qmx,m->qx", grad_monomials(pts, op.center, op.scale, k), op.pi_nabla @ v)
        l2 += wts @ (np.asarray(u_exact(pts)) - uh) ** 2
        h1 += wts @ ((np.asarray(grad_u_exact(pts)) - guh) ** 2).sum(axis=1)
    return float(np.sqrt(l2)), float(np.sqrt(h1))
