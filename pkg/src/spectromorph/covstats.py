"""Word means, residuals and separable time/frequency covariance estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, InsufficientSampleError
from .surface import GridSurface, check_same_grid, trapezoid_weights

EIG_CLAMP = 1e-12
INVSQRT_REL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CovarianceFactor:
    """Symmetric PSD matrix on one axis grid, with cached eigendecomposition.

    Eigenvalues are sorted in descending order; those below
    ``1e-12 * max`` (including negative round-off) are clamped to zero.
    """

    matrix: np.ndarray
    axis: str = "frequency"
    axis_grid: np.ndarray | None = None
    eigvals: np.ndarray = field(init=False, repr=False)
    eigvecs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        C = np.asarray(self.matrix, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("covariance factor must be square")
        C = 0.5 * (C + C.T)
        grid = np.arange(C.shape[0], dtype=float) if self.axis_grid is None \
            else np.asarray(self.axis_grid, dtype=float)
        lam, V = np.linalg.eigh(C)
        lam, V = lam[::-1], V[:, ::-1]
        top = lam[0] if lam.size else 0.0
        lam = np.where(lam > EIG_CLAMP * max(top, 0.0), lam, 0.0)
        object.__setattr__(self, "matrix", C)
        object.__setattr__(self, "axis_grid", grid)
        object.__setattr__(self, "eigvals", lam)
        object.__setattr__(self, "eigvecs", V)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        """Trapezoid integral of the diagonal over the axis grid."""
        return float(trapezoid_weights(self.axis_grid) @ np.diag(self.matrix))

    def clamped(self) -> np.ndarray:
        V = self.eigvecs
        return (V * self.eigvals) @ V.T


@dataclass(frozen=True)
class SeparableCovariance:
    freq: CovarianceFactor
    time: CovarianceFactor


@dataclass
class LanguageModel:
    language: str
    word_means: dict
    sepcov: SeparableCovariance
    sample_sizes: dict = field(default_factory=dict)

    def mean(self, word) -> GridSurface:
        try:
            return self.word_means[word]
        except KeyError:
            raise KeyError(f"word {word!r} not in model for {self.language!r}") from None


def _stack(group):
    group = list(group)
    if not group:
        raise InsufficientSampleError("empty group")
    check_same_grid(*group)
    return group, np.stack([s.values for s in group])


def word_mean(group) -> GridSurface:
    group, data = _stack(group)
    return group[0].with_values(data.mean(axis=0), tags={})


def residuals(group) -> list:
    """Each surface minus the group mean."""
    group, data = _stack(group)
    mean = data.mean(axis=0)
    return [s.with_values(v - mean) for s, v in zip(group, data)]


def marginal_covariances(resid) -> tuple:
    """Sample marginal covariances of a set of residual surfaces.

    Returns ``(freq, time)`` where, with ``D_j`` the centred residuals,
    ``freq = 1/(n-1) sum_j D_j diag(w_t) D_j^T`` and
    ``time = 1/(n-1) sum_j D_j^T diag(w_f) D_j``; ``w_t``, ``w_f`` are
    trapezoid weights on the time and frequency axes.
    """
    resid, data = _stack(resid)
    n = data.shape[0]
    if n < 2:
        raise InsufficientSampleError(f"need >= 2 residual surfaces, got {n}")
    D = data - data.mean(axis=0)
    wf = trapezoid_weights(resid[0].freq_axis)
    wt = trapezoid_weights(resid[0].time_axis)
    freq = np.tensordot(D * wt, D, axes=([0, 2], [0, 2])) / (n - 1)
    time = np.tensordot(D * wf[:, None], D, axes=([0, 1], [0, 1])) / (n - 1)
    return 0.5 * (freq + freq.T), 0.5 * (time + time.T)


def separable_estimate(freq_marginal, time_marginal, freq_grid=None,
                       time_grid=None) -> SeparableCovariance:
    """Divide each marginal by the square root of its own trace.

    If the full covariance is separable, the product of the two normalized
    marginals reproduces it exactly.
    """
    factors = []
    for M, grid, axis in ((freq_marginal, freq_grid, "frequency"),
                          (time_marginal, time_grid, "time")):
        M = np.asarray(M, dtype=float)
        g = np.arange(M.shape[0], dtype=float) if grid is None else np.asarray(grid, float)
        tr = float(trapezoid_weights(g) @ np.diag(M))
        if not tr > 0:
            raise DegenerateError(f"{axis} marginal has non-positive trace {tr}")
        factors.append(CovarianceFactor(M / np.sqrt(tr), axis, g))
    return SeparableCovariance(*factors)


def estimate_separable(resid) -> SeparableCovariance:
    cf, ct = marginal_covariances(resid)
    return separable_estimate(cf, ct, resid[0].freq_axis, resid[0].time_axis)


def _as_factor(C):
    return C if isinstance(C, CovarianceFactor) else CovarianceFactor(C)


def operator_sqrt(C) -> np.ndarray:
    """Symmetric PSD square root ``V diag(sqrt(lam)) V^T``."""
    C = _as_factor(C)
    V = C.eigvecs
    return (V * np.sqrt(C.eigvals)) @ V.T


def operator_invsqrt(C, rel_tol: float = INVSQRT_REL_TOL) -> np.ndarray:
    """Inverse square root restricted to eigenvalues above ``rel_tol * max``."""
    if not 0 < rel_tol < 1:
        raise ValueError("rel_tol must lie in (0, 1)")
    C = _as_factor(C)
    lam = C.eigvals
    keep = lam > rel_tol * lam[0] if lam.size and lam[0] > 0 else np.zeros(lam.size, bool)
    if not keep.any():
        raise DegenerateError("no eigenvalue above the truncation threshold")
    V = C.eigvecs[:, keep]
    return (V / np.sqrt(lam[keep])) @ V.T


def fit_language_model(language, surfaces_by_word: dict) -> LanguageModel:
    """Word means plus one separable covariance from the pooled residuals."""
    means, pooled, sizes = {}, [], {}
    for word in sorted(surfaces_by_word):
        group = surfaces_by_word[word]
        means[word] = word_mean(group)
        pooled.extend(residuals(group))
        sizes[word] = len(group)
    if len(pooled) < 2:
        raise InsufficientSampleError(f"language {language!r}: fewer than 2 residuals")
    return LanguageModel(language, means, estimate_separable(pooled), sizes)
