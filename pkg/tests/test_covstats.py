import numpy as np
import pytest

from spectromorph.covstats import (CovarianceFactor, fit_language_model,
                                   marginal_covariances, operator_invsqrt, operator_sqrt,
                                   residuals, separable_estimate, word_mean)
from spectromorph.errors import DegenerateError, InsufficientSampleError
from spectromorph.surface import trapezoid_weights

from conftest import FREQ, TIME, random_psd, separable_language, surface


def test_word_mean_cases(rng):
    A = surface(rng.standard_normal((4, 6)))
    assert np.array_equal(word_mean([A]).values, A.values)
    neg = A.with_values(-A.values)
    np.testing.assert_allclose(word_mean([A, neg]).values, 0.0, atol=0)
    group = [surface(rng.standard_normal((4, 6))) for _ in range(5)]
    direct = sum(s.values for s in group) / 5
    np.testing.assert_allclose(word_mean(group).values, direct, atol=1e-12)
    with pytest.raises(InsufficientSampleError):
        word_mean([])


def test_residuals(rng):
    group = [surface(rng.standard_normal((4, 6))) for _ in range(7)]
    res = residuals(group)
    np.testing.assert_allclose(sum(r.values for r in res), 0.0, atol=1e-10)
    A, B = group[:2]
    rA, rB = residuals([A, B])
    np.testing.assert_allclose(rA.values, (A.values - B.values) / 2, atol=1e-14)
    np.testing.assert_allclose(rB.values, -(A.values - B.values) / 2, atol=1e-14)
    same = residuals([A, A, A])
    assert all(np.max(np.abs(r.values)) <= 1e-12 for r in same)


def test_marginal_shapes_and_zero():
    zeros = [surface(np.zeros((81, 100))) for _ in range(3)]
    cf, ct = marginal_covariances(zeros)
    assert cf.shape == (81, 81) and ct.shape == (100, 100)
    assert np.all(cf == 0) and np.all(ct == 0)
    with pytest.raises(InsufficientSampleError):
        marginal_covariances(zeros[:1])


def test_marginal_rank_one(rng):
    u = rng.standard_normal(81)
    v = rng.standard_normal(100)
    a = rng.standard_normal(30)
    res = [surface(aj * np.outer(u, v)) for aj in a]
    cf, ct = marginal_covariances(res)
    var = np.var(a, ddof=1)
    vnorm = trapezoid_weights(TIME) @ v ** 2
    unorm = trapezoid_weights(FREQ) @ u ** 2
    np.testing.assert_allclose(cf, var * vnorm * np.outer(u, u), atol=1e-8 * np.abs(cf).max())
    np.testing.assert_allclose(ct, var * unorm * np.outer(v, v), atol=1e-8 * np.abs(ct).max())


def test_marginal_shift_invariant(rng):
    res = [surface(rng.standard_normal((6, 8))) for _ in range(5)]
    shift = rng.standard_normal((6, 8))
    moved = [r.with_values(r.values + shift) for r in res]
    for a, b in zip(marginal_covariances(res), marginal_covariances(moved)):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_separability_identity(rng):
    Cf = random_psd(rng, 81)
    Ct = random_psd(rng, 100)
    wf, wt = trapezoid_weights(FREQ), trapezoid_weights(TIME)
    # marginals of c = Cf (x) Ct: integrating out one axis multiplies by the other's trace
    tf, tt = wf @ np.diag(Cf), wt @ np.diag(Ct)
    sep = separable_estimate(Cf * tt, Ct * tf, FREQ, TIME)
    # compare the 4-D product row by row rather than building all of it
    for i in range(81):
        block = np.multiply.outer(sep.freq.matrix[i], sep.time.matrix)
        assert np.max(np.abs(block - np.multiply.outer(Cf[i], Ct))) <= 1e-10
    assert sep.freq.trace() == pytest.approx(np.sqrt(tf * tt), rel=1e-10)
    assert sep.freq.trace() == pytest.approx(sep.time.trace(), rel=1e-10)


def test_separable_identity_scaling():
    grid = np.arange(5.0)  # unit spacing: trapezoid trace of I is 4
    sep = separable_estimate(np.eye(5), np.eye(3), grid, np.arange(3.0))
    np.testing.assert_allclose(sep.freq.matrix, np.eye(5) / 2.0)
    with pytest.raises(DegenerateError):
        separable_estimate(np.zeros((3, 3)), np.eye(3))


def test_traces_equal_on_data():
    data = separable_language(1, n_words=3, n_speakers=6, nf=20, nt=30)
    model = fit_language_model("x", data)
    assert model.sepcov.freq.trace() == pytest.approx(model.sepcov.time.trace(), rel=1e-6)
    assert model.sample_sizes == {"w0": 6, "w1": 6, "w2": 6}
    with pytest.raises(KeyError):
        model.mean("missing")


def test_factor_invariants(rng):
    A = random_psd(rng, 12, rank=4)
    A[0, 1] += 1e-12
    C = CovarianceFactor(A)
    assert np.max(np.abs(C.matrix - C.matrix.T)) <= 1e-10
    assert np.all(C.eigvals >= 0)
    assert np.all(np.diff(C.eigvals) <= 0)
    np.testing.assert_allclose(C.eigvecs.T @ C.eigvecs, np.eye(12), atol=1e-8)


def test_sqrt_examples(rng):
    np.testing.assert_allclose(operator_sqrt(np.eye(4)), np.eye(4), atol=1e-15)
    np.testing.assert_allclose(operator_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]),
                               atol=1e-14)
    C = random_psd(rng, 10)
    L = operator_sqrt(C)
    assert np.linalg.norm(L @ L.T - C) <= 1e-8


def test_sqrt_clamps_negative():
    C = np.diag([1.0, -1e-3])
    np.testing.assert_allclose(operator_sqrt(C), np.diag([1.0, 0.0]))


def test_invsqrt_examples(rng):
    np.testing.assert_allclose(operator_invsqrt(np.eye(3), 0.5), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(operator_invsqrt(np.diag([4.0, 1e-20]), 1e-10),
                               np.diag([0.5, 0.0]), atol=1e-15)
    C = random_psd(rng, 8, rank=3)
    M = operator_invsqrt(C)
    P = M @ C @ M
    ev = np.linalg.eigvalsh(P)
    assert np.all(np.minimum(np.abs(ev), np.abs(ev - 1)) <= 1e-6)
    assert np.sum(np.abs(ev - 1) <= 1e-6) == 3
    np.testing.assert_allclose(P @ P, P, atol=1e-6)
    with pytest.raises(DegenerateError):
        operator_invsqrt(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        operator_invsqrt(np.eye(3), 0.0)
