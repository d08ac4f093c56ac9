"""Tests for the spectral factorizations and hard-thresholding kernels."""

import itertools

import numpy as np
import pytest

from sdcam.linalg import (
    hard_threshold_magnitude,
    hard_threshold_value,
    svd,
    sym_eig,
    top_k_indices,
)


def test_svd_reconstruction_and_conventions():
    rng = np.random.default_rng(0)
    for _ in range(25):
        m, n = int(rng.integers(1, 12)), int(rng.integers(1, 12))
        A = rng.normal(size=(m, n)) * rng.choice([0.01, 1.0, 100.0])
        fac = svd(A)
        r = min(m, n)
        assert fac.U.shape == (m, r)
        assert fac.V.shape == (n, r)
        assert fac.sigma.shape == (r,)
        assert np.all(np.diff(fac.sigma) <= 0)
        assert np.all(fac.sigma >= 0)
        np.testing.assert_allclose(fac.U.T @ fac.U, np.eye(r), atol=1e-12)
        np.testing.assert_allclose(fac.V.T @ fac.V, np.eye(r), atol=1e-12)
        recon = (fac.U * fac.sigma) @ fac.V.T
        np.testing.assert_allclose(recon, A, atol=1e-10 * max(1.0, np.abs(A).max()))


def test_svd_input_validation():
    with pytest.raises(ValueError):
        svd(np.ones(3))
    with pytest.raises(ValueError):
        svd(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        svd(np.array([[np.inf, 1.0]]))


def test_sym_eig_reconstruction_and_ordering():
    rng = np.random.default_rng(1)
    for _ in range(25):
        n = int(rng.integers(1, 12))
        B = rng.normal(size=(n, n))
        W = (B + B.T) / 2.0
        fac = sym_eig(W)
        assert np.all(np.diff(fac.lam) <= 0)
        np.testing.assert_allclose(fac.Q.T @ fac.Q, np.eye(n), atol=1e-12)
        np.testing.assert_allclose((fac.Q * fac.lam) @ fac.Q.T, W, atol=1e-10)


def test_sym_eig_symmetry_guard():
    W = np.array([[1.0, 2.0], [2.0 + 1e-6, 1.0]])
    with pytest.raises(ValueError):
        sym_eig(W)
    # roundoff-level asymmetry is absorbed
    W = np.array([[1.0, 2.0], [2.0 + 1e-15, 1.0]])
    fac = sym_eig(W)
    assert fac.lam.shape == (2,)
    with pytest.raises(ValueError):
        sym_eig(np.ones((2, 3)))


def test_top_k_indices_stable_ties():
    scores = np.array([1.0, 3.0, 3.0, 0.5, 3.0])
    np.testing.assert_array_equal(top_k_indices(scores, 2), [1, 2])
    np.testing.assert_array_equal(top_k_indices(scores, 4), [1, 2, 4, 0])
    # k beyond the length is clamped, k = 0 keeps nothing
    assert top_k_indices(scores, 99).size == 5
    assert top_k_indices(scores, 0).size == 0
    with pytest.raises(ValueError):
        top_k_indices(scores, -1)
    with pytest.raises(ValueError):
        top_k_indices(scores.reshape(1, -1), 2)


def enum_best_support(v, k, key):
    """Exhaustively pick the support of size k maximizing sum(key(v_S))."""
    n = v.size
    best_S, best_val = None, -np.inf
    for S in itertools.combinations(range(n), k):
        val = float(np.sum(key(v[list(S)])))
        if val > best_val + 1e-15:
            best_S, best_val = S, val
    x = np.zeros(n)
    x[list(best_S)] = v[list(best_S)]
    return x, best_val


def test_hard_threshold_magnitude_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(60):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(0, n + 1))
        v = rng.normal(size=n)
        out = hard_threshold_magnitude(v, k)
        assert np.count_nonzero(out) <= k
        if k == 0:
            assert np.all(out == 0)
            continue
        # keeping the k largest magnitudes minimizes ||out - v||^2
        _, best = enum_best_support(v, k, np.square)
        kept = float(np.sum(out * out))
        assert kept >= best - 1e-12


def test_hard_threshold_value_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(60):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, n + 1))
        v = rng.normal(size=n)
        out = hard_threshold_value(v, k)
        assert np.count_nonzero(out) <= k
        kept_sum = float(np.sum(out))
        _, best = enum_best_support(v, k, lambda t: t)
        assert kept_sum >= best - 1e-12


def test_hard_threshold_tie_and_validation():
    v = np.array([2.0, -2.0, 1.0])
    np.testing.assert_array_equal(hard_threshold_magnitude(v, 1), [2.0, 0.0, 0.0])
    np.testing.assert_array_equal(hard_threshold_value(v, 2), [2.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        hard_threshold_magnitude(v.reshape(1, 3), 1)
    with pytest.raises(ValueError):
        hard_threshold_value(v.reshape(3, 1), 1)
