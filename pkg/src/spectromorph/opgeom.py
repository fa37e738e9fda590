"""Procrustes size-and-shape geometry of covariance operators.

Covariances are represented by their symmetric square roots ``L`` with
``C = L L^T``. Two square roots are compared after the orthogonal
alignment (reflections allowed) that brings one closest to the other.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .covstats import CovarianceFactor, SeparableCovariance, operator_sqrt

LOG = logging.getLogger(__name__)


def optimal_rotation(L1, L2) -> np.ndarray:
    """Orthogonal ``R`` minimising ``||L1 - L2 R||_HS``.

    With ``L2^T L1 = U S V^T`` the minimiser is ``U V^T``; no determinant
    constraint is imposed.
    """
    L1 = np.asarray(L1, dtype=float)
    L2 = np.asarray(L2, dtype=float)
    if L1.shape != L2.shape:
        raise ValueError(f"shape mismatch {L1.shape} vs {L2.shape}")
    U, _, Vt = np.linalg.svd(L2.T @ L1)
    return U @ Vt


def _root(C):
    if isinstance(C, CovarianceFactor):
        return operator_sqrt(C)
    return operator_sqrt(CovarianceFactor(np.asarray(C, dtype=float)))


def root_distance(L1, L2) -> float:
    """Procrustes distance between two square-root representatives."""
    R = optimal_rotation(L1, L2)
    return float(np.linalg.norm(L1 - L2 @ R))


def procrustes_distance(C1, C2) -> float:
    """Procrustes reflection size-and-shape distance.

    Evaluated as the residual ``||L1 - L2 R||_HS`` at the optimal ``R``,
    which equals ``sqrt(|L1|^2 + |L2|^2 - 2 sum sigma_k)`` with
    ``sigma_k`` the singular values of ``L2^T L1`` but does not suffer the
    cancellation of that form when the operators are close.
    """
    return root_distance(_root(C1), _root(C2))


def procrustes_distance_closed_form(C1, C2) -> float:
    L1, L2 = _root(C1), _root(C2)
    sigma = np.linalg.svd(L2.T @ L1, compute_uv=False)
    d2 = np.sum(L1 ** 2) + np.sum(L2 ** 2) - 2.0 * sigma.sum()
    return float(np.sqrt(max(0.0, d2)))


@dataclass
class FrechetResult:
    mean: CovarianceFactor
    root: np.ndarray
    converged: bool
    n_iter: int
    objective: list


def frechet_mean(ops, tol: float = 1e-8, max_iter: int = 100,
                 full_output: bool = False):
    """Sample Frechet mean under the Procrustes distance.

    Generalized Procrustes iteration: start from the square root of the
    first operator, then alternately align every square root to the current
    estimate and replace the estimate by the average of the aligned roots,
    until the update is below `tol` in HS norm. The objective
    ``sum_i d(C_i, mean)^2`` never increases between iterations.

    With ``full_output=True`` a `FrechetResult` carrying the convergence
    flag and objective history is returned instead of the mean alone.
    """
    ops = list(ops)
    if not ops:
        raise ValueError("empty operator list")
    template = ops[0] if isinstance(ops[0], CovarianceFactor) else None
    roots = [_root(C) for C in ops]
    if any(L.shape != roots[0].shape for L in roots):
        raise ValueError("operators have different dimensions")

    Lbar = roots[0].copy()
    objective = []
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        aligned = [L @ optimal_rotation(Lbar, L) for L in roots]
        objective.append(float(sum(np.sum((Lbar - A) ** 2) for A in aligned)))
        new = np.mean(aligned, axis=0)
        step = np.linalg.norm(new - Lbar)
        Lbar = new
        if step <= tol:
            converged = True
            break
    if not converged:
        LOG.warning("frechet_mean: no convergence after %d iterations", max_iter)
    objective.append(float(sum(root_distance(Lbar, L) ** 2 for L in roots)))

    kw = {} if template is None else {"axis": template.axis, "axis_grid": template.axis_grid}
    mean = CovarianceFactor(Lbar @ Lbar.T, **kw)
    if full_output:
        return FrechetResult(mean, Lbar, converged, n_iter, objective)
    return mean


def frechet_variance(ops, mean) -> float:
    """Average squared Procrustes distance to `mean`."""
    ops = list(ops)
    return float(np.mean([procrustes_distance(C, mean) ** 2 for C in ops]))


def geodesic(C1, C2, x: float) -> CovarianceFactor:
    """Point at parameter `x` on the Procrustes geodesic from C1 to C2.

    ``A = L1 + x (L2 R - L1)`` and the result is ``A A^T``, positive
    semi-definite for every real `x` (values outside [0, 1] extrapolate).
    """
    L1, L2 = _root(C1), _root(C2)
    R = optimal_rotation(L1, L2)
    A = L1 + x * (L2 @ R - L1)
    kw = {}
    if isinstance(C1, CovarianceFactor):
        kw = {"axis": C1.axis, "axis_grid": C1.axis_grid}
    return CovarianceFactor(A @ A.T, **kw)


def separable_geodesic(S1: SeparableCovariance, S2: SeparableCovariance,
                       x: float) -> SeparableCovariance:
    return SeparableCovariance(geodesic(S1.freq, S2.freq, x),
                               geodesic(S1.time, S2.time, x))
