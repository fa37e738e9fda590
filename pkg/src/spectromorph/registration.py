"""Time standardization and pairwise-then-averaged time registration.

Surfaces are first resampled onto a standardized grid (time in [0, 1]).
For every ordered pair of surfaces of one word a monotone piecewise-linear
warp is fitted by minimising a penalized discrepancy; the warps pointing at
one token are averaged and inverted to give that token's alignment warp.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .surface import GridSurface, check_same_grid, trapezoid_weights

LOG = logging.getLogger(__name__)

N_TIME = 100
N_FREQ = 81
N_INTERIOR_KNOTS = 20
DELTA_MIN = 1e-4
DEFAULT_LAMBDA_SCALE = 1e-3


@dataclass(frozen=True)
class WarpFunction:
    """Monotone piecewise-linear map of [0, 1] onto itself.

    ``knots`` are the breakpoints in input time and ``values`` the warped
    times there. Both are strictly increasing, start at 0 and end at 1.
    """

    knots: np.ndarray
    values: np.ndarray
    converged: bool = True

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.shape != values.shape or knots.ndim != 1 or knots.size < 2:
            raise ShapeError("knots and values must be 1-D of equal length >= 2")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        self.validate()

    def validate(self, delta_min: float = DELTA_MIN, tol: float = 1e-12) -> None:
        for name, arr in (("knots", self.knots), ("values", self.values)):
            if abs(arr[0]) > tol or abs(arr[-1] - 1.0) > tol:
                raise ValueError(f"warp {name} must start at 0 and end at 1")
            if np.any(np.diff(arr) < delta_min - tol):
                raise ValueError(f"warp {name} not strictly increasing")

    def __call__(self, t):
        return np.interp(t, self.knots, self.values)

    @classmethod
    def identity(cls, n_interior: int = N_INTERIOR_KNOTS) -> "WarpFunction":
        grid = np.linspace(0.0, 1.0, n_interior + 2)
        return cls(grid, grid.copy())

    def sup_distance(self, other, n: int = 2001) -> float:
        """Sup-norm distance to another warp (or a callable) on a fine grid."""
        t = np.linspace(0.0, 1.0, n)
        t = np.union1d(t, np.union1d(self.knots, getattr(other, "knots", t)))
        return float(np.max(np.abs(self(t) - other(t))))


def interp_matrix(src, dst) -> np.ndarray:
    """Matrix ``W`` with ``W @ f == np.interp(dst, src, f)`` for any `f`."""
    src = np.asarray(src, dtype=float)
    dst = np.clip(np.asarray(dst, dtype=float), src[0], src[-1])
    idx = np.clip(np.searchsorted(src, dst, side="right") - 1, 0, src.size - 2)
    frac = (dst - src[idx]) / (src[idx + 1] - src[idx])
    W = np.zeros((dst.size, src.size))
    rows = np.arange(dst.size)
    W[rows, idx] = 1.0 - frac
    W[rows, idx + 1] += frac
    return W


def standardize_time(surface: GridSurface, n_time: int = N_TIME,
                     n_freq: int = N_FREQ) -> GridSurface:
    """Bilinear resampling onto a uniform ``n_freq x n_time`` grid.

    Time is rescaled so the first frame sits at 0 and the last at 1; the
    frequency axis keeps its range (0 to Nyquist for an STFT surface).
    """
    if n_time < 2 or n_freq < 2:
        raise ValueError("n_time and n_freq must be >= 2")
    t = surface.time_axis
    u = (t - t[0]) / (t[-1] - t[0])
    f = surface.freq_axis
    new_t = np.linspace(0.0, 1.0, n_time)
    new_f = np.linspace(f[0], f[-1], n_freq)
    values = interp_matrix(f, new_f) @ surface.values @ interp_matrix(u, new_t).T
    return GridSurface(values, new_f, new_t, surface.units, surface.tags)


def apply_warp(surface: GridSurface, w: WarpFunction) -> GridSurface:
    """Return the surface evaluated at warped times: ``out(f, t) = in(f, w(t))``."""
    t = surface.time_axis
    values = surface.values @ interp_matrix(t, w(t)).T
    return surface.with_values(values)


def _penalized_cost(A_warped, B, warped_t, t, lam, wf, wt):
    sq = (A_warped - B) ** 2 + lam * (warped_t - t) ** 2
    return float(wf @ sq @ wt)


def discrepancy(A: GridSurface, B: GridSurface, w: WarpFunction, lam: float) -> float:
    """Trapezoid approximation of
    ``int int (A(f, w(t)) - B(f, t))^2 + lam (w(t) - t)^2 dt df``."""
    check_same_grid(A, B)
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    t = A.time_axis
    return _penalized_cost(apply_warp(A, w).values, B.values, w(t), t, lam,
                           trapezoid_weights(A.freq_axis), trapezoid_weights(t))


class _LocalCost:
    """Cost restricted to the time columns influenced by one interior knot."""

    def __init__(self, A, B, t, knots, lam, wf, wt):
        self.A, self.B, self.t, self.knots = A, B, t, knots
        self.lam, self.wf, self.wt = lam, wf, wt
        self.cols = []
        for i in range(1, knots.size - 1):
            self.cols.append(np.flatnonzero((t > knots[i - 1]) & (t < knots[i + 1])))

    def __call__(self, values, i, candidates):
        """Local cost for each candidate value of knot ``i``."""
        cols = self.cols[i - 1]
        if cols.size == 0:
            return np.zeros(candidates.size)
        tc = self.t[cols]
        k0, k1, k2 = self.knots[i - 1:i + 2]
        v0, v2 = values[i - 1], values[i + 1]
        c = candidates[:, None]
        left = tc <= k1
        wt_left = v0 + (c - v0) * (tc - k0) / (k1 - k0)
        wt_right = c + (v2 - c) * (tc - k1) / (k2 - k1)
        warped = np.where(left, wt_left, wt_right)  # (n_cand, n_cols)

        grid = self.t
        idx = np.clip(np.searchsorted(grid, warped, side="right") - 1, 0, grid.size - 2)
        frac = (warped - grid[idx]) / (grid[idx + 1] - grid[idx])
        A0 = self.A[:, idx]
        A1 = self.A[:, idx + 1]
        Aw = A0 + (A1 - A0) * frac  # (n_freq, n_cand, n_cols)
        resid = (Aw - self.B[:, None, cols]) ** 2
        data = np.einsum("f,fcj->cj", self.wf, resid)
        pen = self.lam * self.wf.sum() * (warped - tc) ** 2
        return (data + pen) @ self.wt[cols]


def pairwise_warp(A: GridSurface, B: GridSurface, lam: float,
                  n_interior: int = N_INTERIOR_KNOTS, max_sweeps: int = 200,
                  tol: float = 1e-10, n_candidates: int = 17,
                  n_refine: int = 3) -> WarpFunction:
    """Fit ``w`` minimising ``discrepancy(A, B, w, lam)``.

    The warp has `n_interior` uniformly spaced interior knots and fixed
    endpoints. Starting from the identity, each sweep visits the interior
    knots in turn and moves the knot within the interval allowed by its
    neighbours (keeping gaps >= 1e-4), using a nested grid search. A move
    is taken only if it lowers the cost, so the result never does worse than
    the identity. Sweeps stop once the relative improvement falls below
    `tol`; if `max_sweeps` is hit first the best warp so far is returned with
    ``converged=False``.
    """
    check_same_grid(A, B)
    t = A.time_axis
    wf = trapezoid_weights(A.freq_axis)
    wt = trapezoid_weights(t)
    knots = np.linspace(0.0, 1.0, n_interior + 2)
    values = knots.copy()
    local = _LocalCost(A.values, B.values, t, knots, lam, wf, wt)

    def total(v):
        wv = np.interp(t, knots, v)
        Aw = A.values @ interp_matrix(t, wv).T
        return _penalized_cost(Aw, B.values, wv, t, lam, wf, wt)

    cost = total(values)
    converged = False
    for _ in range(max_sweeps):
        start_cost = cost
        for i in range(1, knots.size - 1):
            lo = values[i - 1] + DELTA_MIN
            hi = values[i + 1] - DELTA_MIN
            if hi <= lo:
                continue
            current = local(values, i, np.array([values[i]]))[0]
            best_v, best_c = values[i], current
            a, b = lo, hi
            for _ in range(n_refine):
                cand = np.linspace(a, b, n_candidates)
                costs = local(values, i, cand)
                j = int(np.argmin(costs))
                if costs[j] < best_c:
                    best_v, best_c = cand[j], costs[j]
                step = (b - a) / (n_candidates - 1)
                a, b = max(lo, best_v - step), min(hi, best_v + step)
            if best_c < current:
                values[i] = best_v
                cost -= current - best_c
        cost = total(values)
        if start_cost - cost <= tol * max(start_cost, np.finfo(float).tiny):
            converged = True
            break
    if not converged:
        LOG.warning("pairwise_warp: no convergence after %d sweeps", max_sweeps)
    return WarpFunction(knots, values, converged=converged)


def invert_warp(w: WarpFunction) -> WarpFunction:
    """Exact inverse of a piecewise-linear warp (knots and values swap roles)."""
    return WarpFunction(w.values.copy(), w.knots.copy(), converged=w.converged)


def average_warps(warps) -> WarpFunction:
    """Pointwise mean of warps, evaluated on the first warp's knots."""
    knots = warps[0].knots
    values = np.mean([w(knots) for w in warps], axis=0)
    values[0], values[-1] = 0.0, 1.0
    return WarpFunction(knots, values, converged=all(w.converged for w in warps))


def default_lambda(group, scale: float = DEFAULT_LAMBDA_SCALE) -> float:
    """Penalty weight proportional to the mean squared value of the group."""
    return scale * float(np.mean([np.mean(s.values ** 2) for s in group]))


def global_warps(group, lam: float | None = None, **fit_kwargs) -> list:
    """Alignment warp for every member of a group of surfaces.

    For member ``k`` every member ``m`` is warped onto ``k``; the average of
    those pairwise warps (the self-warp being the identity) estimates the
    inverse of ``k``'s time distortion. The returned warp is that average's
    inverse, to be used with `apply_warp`.
    """
    group = list(group)
    n_interior = fit_kwargs.get("n_interior", N_INTERIOR_KNOTS)
    if len(group) < 2:
        return [WarpFunction.identity(n_interior) for _ in group]
    check_same_grid(*group)
    if lam is None:
        lam = default_lambda(group)
    out = []
    for k, target in enumerate(group):
        pair = [WarpFunction.identity(n_interior) if m == k
                else pairwise_warp(src, target, lam, **fit_kwargs)
                for m, src in enumerate(group)]
        out.append(invert_warp(average_warps(pair)))
    return out
