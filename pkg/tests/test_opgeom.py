import numpy as np
import pytest
from scipy.stats import ortho_group

from spectromorph.covstats import CovarianceFactor, SeparableCovariance, operator_sqrt
from spectromorph.opgeom import (frechet_mean, frechet_variance, geodesic, optimal_rotation,
                                 procrustes_distance, procrustes_distance_closed_form,
                                 separable_geodesic)

from conftest import random_psd


def random_orthogonal(rng, n):
    Q = ortho_group.rvs(n, random_state=rng)
    return Q if rng.random() < 0.5 else Q @ np.diag([-1.0] + [1.0] * (n - 1))


def test_rotation_self(rng):
    L = operator_sqrt(random_psd(rng, 6))
    R = optimal_rotation(L, L)
    np.testing.assert_allclose(L @ R, L, atol=1e-8)


def test_rotation_exact_alignment(rng):
    L1 = rng.standard_normal((5, 5))
    Q = random_orthogonal(rng, 5)
    L2 = L1 @ Q
    assert np.linalg.norm(L1 - L2 @ optimal_rotation(L1, L2)) <= 1e-8


def test_rotation_random_search_lower_bound(rng):
    L1 = operator_sqrt(random_psd(rng, 3))
    L2 = operator_sqrt(random_psd(rng, 3))
    best = np.linalg.norm(L1 - L2 @ optimal_rotation(L1, L2))
    sampled = [np.linalg.norm(L1 - L2 @ random_orthogonal(rng, 3)) for _ in range(1000)]
    assert best <= min(sampled) + 1e-12


def test_rotation_shape_mismatch():
    with pytest.raises(ValueError):
        optimal_rotation(np.eye(2), np.eye(3))


def test_metric_axioms(rng):
    for _ in range(100):
        A, B, C = (random_psd(rng, 20) for _ in range(3))
        assert procrustes_distance(A, A) <= 1e-8
        dab = procrustes_distance(A, B)
        assert dab >= 0
        assert abs(dab - procrustes_distance(B, A)) <= 1e-9
        assert dab <= procrustes_distance(A, C) + procrustes_distance(C, B) + 1e-9


def test_axis_swap_pair_brute_force():
    # brute-force alignment of the 2x2 square roots over rotations and reflections
    L1, L2 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    best = np.inf
    for a in np.linspace(0, 2 * np.pi, 3601):
        c, s = np.cos(a), np.sin(a)
        for R in (np.array([[c, -s], [s, c]]), np.array([[c, s], [s, -c]])):
            best = min(best, np.linalg.norm(L1 - L2 @ R))
    d = procrustes_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert d == pytest.approx(best, abs=1e-8)
    assert d == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_scaling(rng):
    C = random_psd(rng, 7)
    d = procrustes_distance(C, 4 * C)
    assert d == pytest.approx(np.linalg.norm(operator_sqrt(C)), rel=1e-10)


def test_closed_form_agrees(rng):
    A, B = random_psd(rng, 9), random_psd(rng, 9)
    assert procrustes_distance(A, B) == pytest.approx(procrustes_distance_closed_form(A, B),
                                                      rel=1e-8)


def test_conjugation_invariance(rng):
    A, B = random_psd(rng, 8), random_psd(rng, 8)
    Q = random_orthogonal(rng, 8)
    assert procrustes_distance(Q @ A @ Q.T, Q @ B @ Q.T) == pytest.approx(
        procrustes_distance(A, B), abs=1e-8)


def test_frechet_single_and_copies(rng):
    C = random_psd(rng, 5)
    np.testing.assert_allclose(frechet_mean([C]).matrix, C, atol=1e-10)
    np.testing.assert_allclose(frechet_mean([C] * 4).matrix, C, atol=1e-8)
    with pytest.raises(ValueError):
        frechet_mean([])


def test_frechet_random_candidate_lower_bound(rng):
    ops = [random_psd(rng, 2), random_psd(rng, 2)]
    res = frechet_mean(ops, full_output=True)
    assert res.converged

    def objective(C):
        return sum(procrustes_distance(Ci, C) ** 2 for Ci in ops)

    best = objective(res.mean.matrix)
    candidates = list(ops) + [random_psd(rng, 2, scale=rng.uniform(0.1, 3))
                              for _ in range(500)]
    assert all(best <= objective(C) + 1e-10 for C in candidates)


def test_frechet_objective_non_increasing(rng):
    ops = [random_psd(rng, 6) for _ in range(5)]
    res = frechet_mean(ops, full_output=True)
    assert np.all(np.diff(res.objective) <= 1e-10)


def test_frechet_variance(rng):
    C = random_psd(rng, 4)
    assert frechet_variance([C, C], C) == pytest.approx(0.0, abs=1e-15)
    A, B, M = random_psd(rng, 4), random_psd(rng, 4), random_psd(rng, 4)
    expected = 0.5 * (procrustes_distance(A, M) ** 2 + procrustes_distance(B, M) ** 2)
    assert frechet_variance([A, B], M) == pytest.approx(expected, rel=1e-12)
    ops = [random_psd(rng, 4) for _ in range(4)]
    Q = random_orthogonal(rng, 4)
    m1 = frechet_mean(ops)
    m2 = frechet_mean([Q @ C @ Q.T for C in ops])
    assert frechet_variance([Q @ C @ Q.T for C in ops], m2) == pytest.approx(
        frechet_variance(ops, m1), rel=1e-6)


def test_geodesic_endpoints_and_psd(rng):
    for _ in range(50):
        A, B = random_psd(rng, 10), random_psd(rng, 10)
        np.testing.assert_allclose(geodesic(A, B, 0.0).matrix, A, atol=1e-10)
        np.testing.assert_allclose(geodesic(A, B, 1.0).matrix, B, atol=1e-8)
        assert procrustes_distance(geodesic(A, B, 0.0), A) <= 1e-8
        assert procrustes_distance(geodesic(A, B, 1.0), B) <= 1e-8
        for x in (-0.5, 0.5, 1.5, 2.0):
            assert np.linalg.eigvalsh(geodesic(A, B, x).matrix).min() >= -1e-10


def test_geodesic_diagonal_closed_form():
    G = geodesic(np.diag([1.0, 4.0]), np.diag([9.0, 16.0]), 0.5)
    np.testing.assert_allclose(G.matrix, np.diag([4.0, 9.0]), atol=1e-12)


def test_geodesic_keeps_axis():
    A = CovarianceFactor(np.eye(3), "time", np.array([0.0, 0.5, 1.0]))
    G = geodesic(A, 2 * np.eye(3), 0.3)
    assert G.axis == "time"
    np.testing.assert_array_equal(G.axis_grid, A.axis_grid)


def test_separable_geodesic(rng):
    S1 = SeparableCovariance(CovarianceFactor(random_psd(rng, 5)),
                             CovarianceFactor(random_psd(rng, 6), "time"))
    S2 = SeparableCovariance(CovarianceFactor(random_psd(rng, 5)),
                             CovarianceFactor(random_psd(rng, 6), "time"))
    g0 = separable_geodesic(S1, S2, 0.0)
    g1 = separable_geodesic(S1, S2, 1.0)
    np.testing.assert_allclose(g0.freq.matrix, S1.freq.matrix, atol=1e-10)
    np.testing.assert_allclose(g0.time.matrix, S1.time.matrix, atol=1e-10)
    np.testing.assert_allclose(g1.freq.matrix, S2.freq.matrix, atol=1e-8)
    np.testing.assert_allclose(g1.time.matrix, S2.time.matrix, atol=1e-8)
    g2 = separable_geodesic(S1, S2, 2.0)
    for F in (g2.freq, g2.time):
        assert np.linalg.eigvalsh(F.matrix).min() >= -1e-10
