"""Distance-based permutation tests for group means and covariance operators.

The statistic is the Frechet variance of the per-group estimates,
``T = (1/G) sum_l d(K_l, Kbar)^2``. Labels are permuted at random with a
seeded generator and the p-value is the fraction of permuted statistics
strictly greater than the observed one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covstats import CovarianceFactor, marginal_covariances
from .errors import InsufficientSampleError
from .opgeom import frechet_mean, procrustes_distance
from .surface import check_same_grid, trapezoid_weights

TARGETS = ("mean", "freq_cov", "time_cov")
DEFAULT_PERMUTATIONS = 1000


@dataclass
class PermTestResult:
    T0: float
    p_value: float
    M: int
    seed: int
    target: str = "mean"
    per_permutation_stats: list = field(default_factory=list)


def l2_surface_distance(A, B) -> float:
    """L2 distance over the (frequency, time) domain, trapezoid rule."""
    check_same_grid(A, B)
    wf = trapezoid_weights(A.freq_axis)
    wt = trapezoid_weights(A.time_axis)
    return float(np.sqrt(wf @ (A.values - B.values) ** 2 @ wt))


def _surface_mean(surfaces):
    return surfaces[0].with_values(np.mean([s.values for s in surfaces], axis=0))


def test_statistic(group_estimates, distance=l2_surface_distance, frechet=None) -> float:
    """Mean squared distance of the group estimates to their Frechet mean.

    `frechet` maps the list of estimates to their mean; the default is the
    pointwise average, which is the Frechet mean for the L2 distance.
    """
    est = list(group_estimates)
    if len(est) < 2:
        raise InsufficientSampleError("need at least two groups")
    center = (frechet or _surface_mean)(est)
    return float(np.mean([distance(K, center) ** 2 for K in est]))


test_statistic.__test__ = False  # not a pytest test


def _frechet_cov(ops):
    return frechet_mean(ops)


class _Estimator:
    """Per-group estimates for one target, computed from a stacked array."""

    def __init__(self, observations, target, strata=None):
        self.template = observations[0]
        self.data = np.stack([s.values for s in observations])
        self.target = target
        self.strata = strata
        self.wf = trapezoid_weights(self.template.freq_axis)
        self.wt = trapezoid_weights(self.template.time_axis)

    def _centred(self, codes):
        """Data centred within (group, stratum) cells under labelling `codes`."""
        cells = codes * (self.strata.max() + 1) + self.strata
        _, inv, counts = np.unique(cells, return_inverse=True, return_counts=True)
        sums = np.zeros((counts.size,) + self.data.shape[1:])
        np.add.at(sums, inv, self.data)
        return self.data - (sums / counts[:, None, None])[inv]

    def statistic(self, codes, n_groups):
        data = self.data if self.strata is None or self.target == "mean" \
            else self._centred(codes)
        groups = [data[codes == g] for g in range(n_groups)]
        if self.target == "mean":
            means = np.stack([g.mean(axis=0) for g in groups])
            center = means.mean(axis=0)
            d2 = np.einsum("f,gft,t->g", self.wf, (means - center) ** 2, self.wt)
            return float(d2.mean())
        ops = []
        for g in groups:
            surfaces = [self.template.with_values(v) for v in g]
            cf, ct = marginal_covariances(surfaces)
            if self.target == "freq_cov":
                ops.append(CovarianceFactor(cf, "frequency", self.template.freq_axis))
            else:
                ops.append(CovarianceFactor(ct, "time", self.template.time_axis))
        return test_statistic(ops, procrustes_distance, _frechet_cov)


def group_center(observations, labels) -> list:
    """Subtract each group's mean surface from its members."""
    labels = list(labels)
    out = list(observations)
    for lab in sorted(set(labels)):
        idx = [i for i, l in enumerate(labels) if l == lab]
        mean = np.mean([observations[i].values for i in idx], axis=0)
        for i in idx:
            out[i] = observations[i].with_values(observations[i].values - mean)
    return out


def _permute(rng, codes, strata):
    if strata is None:
        return rng.permutation(codes)
    perm = codes.copy()
    for s in np.unique(strata):
        idx = np.flatnonzero(strata == s)
        perm[idx] = rng.permutation(codes[idx])
    return perm


def permutation_test(observations, labels, target: str = "mean",
                     M: int = DEFAULT_PERMUTATIONS, seed: int = 0,
                     keep_stats: bool = False, strata=None) -> PermTestResult:
    """Permutation test of equal group parameters.

    Parameters
    ----------
    observations : list of GridSurface
    labels : sequence of hashable group labels, one per observation
    target : {"mean", "freq_cov", "time_cov"}
        Parameter compared across groups. For the covariance targets the
        observations are centred within their group first and compared via
        their marginal covariances under the Procrustes distance.
    M : number of random permutations
    seed : seed of the generator; permutation ``m`` draws from the ``m``-th
        spawned child stream, so results do not depend on evaluation order.
    strata : optional sequence of stratum labels (e.g. words), one per
        observation. Labels are then permuted within strata only, and for the
        covariance targets the observations are centred within
        (group, stratum) cells afresh for every labelling, so observed and
        permuted statistics are computed identically. Without strata the
        observations are centred once by their observed group and the
        residuals are permuted, which is only asymptotically exact.
    """
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")
    if M < 1:
        raise ValueError("M must be >= 1")
    observations = list(observations)
    labels = list(labels)
    if len(labels) != len(observations):
        raise ValueError("one label per observation required")
    check_same_grid(*observations)
    names = sorted(set(labels))
    if len(names) < 2:
        raise InsufficientSampleError("need at least two groups")
    codes = np.array([names.index(l) for l in labels])
    if np.bincount(codes).min() < 2:
        raise InsufficientSampleError("every group needs at least two observations")

    if strata is not None:
        strata = list(strata)
        if len(strata) != len(observations):
            raise ValueError("one stratum per observation required")
        snames = sorted(set(strata))
        strata = np.array([snames.index(s) for s in strata])
    elif target != "mean":
        observations = group_center(observations, labels)
    est = _Estimator(observations, target, strata)
    G = len(names)
    T0 = est.statistic(codes, G)

    children = np.random.SeedSequence(seed).spawn(M)
    stats = np.empty(M)
    for m, child in enumerate(children):
        perm = _permute(np.random.default_rng(child), codes, strata)
        stats[m] = est.statistic(perm, G)
    p = float(np.count_nonzero(stats > T0)) / M
    return PermTestResult(T0, p, M, seed, target, stats.tolist() if keep_stats else [])


def bonferroni(p_values, m: int | None = None) -> list:
    """``min(1, m p)`` for each p-value; `m` defaults to the number of p-values."""
    p_values = list(p_values)
    m = len(p_values) if m is None else m
    return [min(1.0, m * p) for p in p_values]
