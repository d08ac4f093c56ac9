"""Oracle tests for the scalar prox maps and nonconvex projections.

Prox maps are checked against brute-force grid minimization of the prox
objective; projections onto sparsity-constrained sets are checked against
exhaustive enumeration of supports in low dimension.
"""

import itertools

import numpy as np
import pytest

from sdcam.prox import (
    AffineTwoSet,
    EntrySparseSet,
    FixedEntriesSet,
    HalfPower,
    KSparseBoxSet,
    L1Box,
    L1Norm,
    SpectralRankSet,
    Zero,
    prox_half,
    prox_l1,
    prox_l1_box,
    proj_affine2,
    proj_entry_sparse,
    proj_fixed_entries,
    proj_ksparse_box,
    proj_spectral,
)


def grid_min(phi, lo, hi, step=1e-4):
    """Minimum of a vectorized scalar function on a uniform grid.

    The grid ends exactly at hi so box-constrained oracles never sample
    infeasible points past the boundary.
    """
    u = np.append(np.arange(lo, hi, step), hi)
    return float(np.min(phi(u)))


def prox_objective(u, y, gamma, pen):
    return 0.5 * (u - y) ** 2 + gamma * pen(u)


# ---------------------------------------------------------------------------
# grid oracles for the scalar prox maps


def test_prox_l1_grid_oracle():
    rng = np.random.default_rng(0)
    for _ in range(60):
        y = float(rng.uniform(-3.0, 3.0))
        gamma = float(rng.uniform(0.0, 2.0))
        u = float(prox_l1(y, gamma))
        val = prox_objective(u, y, gamma, np.abs)
        ref = grid_min(
            lambda t: prox_objective(t, y, gamma, np.abs), -abs(y) - 1.0, abs(y) + 1.0
        )
        assert val <= ref + 1e-6


def test_prox_half_grid_oracle():
    rng = np.random.default_rng(1)
    pen = lambda t: np.sqrt(np.abs(t))
    for _ in range(60):
        y = float(rng.uniform(-3.0, 3.0))
        gamma = float(rng.uniform(0.0, 2.0))
        u = float(prox_half(y, gamma))
        val = prox_objective(u, y, gamma, pen)
        ref = grid_min(
            lambda t: prox_objective(t, y, gamma, pen), -abs(y) - 1.0, abs(y) + 1.0
        )
        assert val <= ref + 1e-6


def test_prox_half_tie_magnitude():
    # at |y| = 1.5 gamma^(2/3) the zero and interior candidates tie; the
    # map must return 0 there and switch to the interior root just above
    gamma = 0.8
    t = 1.5 * gamma ** (2.0 / 3.0)
    assert prox_half(np.array([t]), gamma)[0] == 0.0
    above = prox_half(np.array([t * (1 + 1e-9)]), gamma)[0]
    assert above > 0.5 * t


def test_prox_l1_box_grid_oracle():
    rng = np.random.default_rng(2)
    for _ in range(60):
        y = float(rng.uniform(-3.0, 3.0))
        gamma = float(rng.uniform(0.0, 2.0))
        tau = float(rng.uniform(0.2, 2.0))
        u = float(prox_l1_box(y, gamma, tau))
        assert abs(u) <= tau + 1e-15
        val = prox_objective(u, y, gamma, np.abs)
        ref = grid_min(lambda t: prox_objective(t, y, gamma, np.abs), -tau, tau)
        assert val <= ref + 1e-6


def test_prox_elementwise_and_validation():
    y = np.array([[2.0, -0.3], [0.0, -4.0]])
    out = prox_l1(y, 0.5)
    assert out.shape == y.shape
    np.testing.assert_allclose(out, [[1.5, 0.0], [0.0, -3.5]])
    with pytest.raises(ValueError):
        prox_l1(y, -0.1)
    with pytest.raises(ValueError):
        prox_half(y, -0.1)
    with pytest.raises(ValueError):
        prox_l1_box(y, 0.5, 0.0)
    # gamma = 0 reduces the prox to the identity (after box clipping)
    np.testing.assert_allclose(prox_half(y, 0.0), y)
    np.testing.assert_allclose(prox_l1_box(y, 0.0, 1.0), np.clip(y, -1, 1))


# ---------------------------------------------------------------------------
# enumeration oracles for the sparse projections


def ksparse_box_enum(y, k, tau):
    """Best feasible point by trying every support of size <= k."""
    n = y.size
    best, best_d = None, np.inf
    for S in itertools.combinations(range(n), k):
        x = np.zeros(n)
        x[list(S)] = np.clip(y[list(S)], 0.0, tau)
        d = float(np.sum((x - y) ** 2))
        if d < best_d - 1e-15:
            best, best_d = x, d
    return best, best_d


def test_proj_ksparse_box_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(120):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, n + 1))
        tau = float(rng.uniform(0.3, 2.0))
        y = rng.normal(size=n) * rng.choice([0.3, 1.0, 3.0])
        x = proj_ksparse_box(y, k, tau)
        assert np.count_nonzero(x) <= k
        assert np.all(x >= 0.0) and np.all(x <= tau)
        _, best_d = ksparse_box_enum(y, k, tau)
        assert float(np.sum((x - y) ** 2)) <= best_d + 1e-10


def test_proj_entry_sparse_enumeration():
    rng = np.random.default_rng(4)
    for _ in range(80):
        shape = (int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        n = shape[0] * shape[1]
        s = int(rng.integers(1, n + 1))
        Y = rng.normal(size=shape)
        tau = float(rng.uniform(0.5, 2.0)) if rng.random() < 0.5 else None
        X = proj_entry_sparse(Y, s, tau)
        assert X.shape == shape
        assert np.count_nonzero(X) <= s
        if tau is not None:
            assert np.max(np.abs(X)) <= tau + 1e-15
        # enumerate supports on the flattened matrix
        yf = Y.ravel()
        cap = (lambda v: np.clip(v, -tau, tau)) if tau is not None else (lambda v: v)
        best_d = np.inf
        for S in itertools.combinations(range(n), s):
            x = np.zeros(n)
            x[list(S)] = cap(yf[list(S)])
            best_d = min(best_d, float(np.sum((x - yf) ** 2)))
        assert float(np.sum((X - Y) ** 2)) <= best_d + 1e-10


def test_proj_entry_sparse_tie_break_matches_row_major_order():
    # equal scores must keep the earliest flattened entries
    Y = np.full((2, 3), 0.7)
    X = proj_entry_sparse(Y, 2)
    expect = np.array([[0.7, 0.7, 0.0], [0.0, 0.0, 0.0]])
    np.testing.assert_array_equal(X, expect)


# ---------------------------------------------------------------------------
# affine two-constraint projection


def test_proj_affine2_feasibility_and_optimality():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 30))
        r = rng.normal(size=n) + 1.0
        if abs(n * (r @ r) - np.sum(r) ** 2) < 1e-8:
            continue
        r0 = float(rng.uniform(0.5, 2.0))
        y = rng.normal(size=n) * 2.0
        x = proj_affine2(y, r, r0)
        assert abs(np.sum(x) - 1.0) <= 1e-10 * n
        assert abs(r @ x - r0) <= 1e-9 * n
        # optimality: the residual must lie in span{1, r}
        res = y - x
        basis = np.stack([np.ones(n), r], axis=1)
        coef, *_ = np.linalg.lstsq(basis, res, rcond=None)
        assert np.linalg.norm(res - basis @ coef) <= 1e-9


def test_proj_affine2_rejects_parallel_constraints():
    with pytest.raises(ValueError):
        proj_affine2(np.zeros(4), np.full(4, 2.0), 1.0)
    with pytest.raises(ValueError):
        proj_affine2(np.zeros(4), np.zeros(4), 0.0)
    with pytest.raises(ValueError):
        proj_affine2(np.zeros((2, 2)), np.zeros((2, 2)), 1.0)


# ---------------------------------------------------------------------------
# spectral projections


def svd_truncate(W, k, tau=None, psd=False):
    """Reference projection computed from a full decomposition."""
    if psd:
        vals, vecs = np.linalg.eigh((W + W.T) / 2.0)
        vals = np.clip(vals, 0.0, tau if tau is not None else np.inf)
        order = np.argsort(vals)[::-1][:k]
        return (vecs[:, order] * vals[order]) @ vecs[:, order].T
    U, s, Vt = np.linalg.svd(W, full_matrices=False)
    if tau is not None:
        s = np.minimum(s, tau)
    return (U[:, :k] * s[:k]) @ Vt[:k]


def test_proj_spectral_matches_full_svd():
    rng = np.random.default_rng(6)
    for _ in range(40):
        m, n = int(rng.integers(2, 10)), int(rng.integers(2, 10))
        k = int(rng.integers(1, min(m, n) + 1))
        W = rng.normal(size=(m, n))
        tau = float(rng.uniform(0.5, 3.0)) if rng.random() < 0.5 else None
        X = proj_spectral(W, k, tau=tau)
        ref = svd_truncate(W, k, tau)
        np.testing.assert_allclose(X, ref, atol=1e-9)
        assert np.linalg.matrix_rank(X, tol=1e-8) <= k
        if tau is not None:
            assert np.linalg.norm(X, 2) <= tau + 1e-9


def test_proj_spectral_psd_branch():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(2, 10))
        k = int(rng.integers(1, n + 1))
        B = rng.normal(size=(n, n))
        W = (B + B.T) / 2.0
        tau = float(rng.uniform(0.5, 3.0)) if rng.random() < 0.5 else None
        X = proj_spectral(W, k, tau=tau, psd=True)
        ref = svd_truncate(W, k, tau, psd=True)
        np.testing.assert_allclose(X, ref, atol=1e-9)
        vals = np.linalg.eigvalsh(X)
        assert vals.min() >= -1e-10
        assert np.sum(vals > 1e-8) <= k


def test_proj_spectral_gram_fast_path_agrees_with_direct_svd():
    # tall matrix large enough to trigger the Gram-eigendecomposition route
    rng = np.random.default_rng(8)
    W = rng.normal(size=(300, 140))
    for k in (3, 20):
        X = proj_spectral(W, k)
        ref = svd_truncate(W, k)
        assert np.linalg.norm(X - ref) <= 1e-7 * np.linalg.norm(ref)
    # wide orientation exercises the transpose handling
    Xw = proj_spectral(W.T, 5)
    refw = svd_truncate(W.T, 5)
    assert np.linalg.norm(Xw - refw) <= 1e-7 * np.linalg.norm(refw)


def test_proj_fixed_entries_semantics():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(4, 5))
    mask = rng.random(size=(4, 5)) < 0.4
    M = rng.normal(size=(4, 5)) * 0.5
    out = proj_fixed_entries(X, mask, M, tau=2.0)
    np.testing.assert_array_equal(out[mask], M[mask])
    np.testing.assert_allclose(out[~mask], np.clip(X[~mask], -2.0, 2.0))
    out_nocap = proj_fixed_entries(X, mask, M)
    np.testing.assert_array_equal(out_nocap[~mask], X[~mask])
    # fixed values exceeding the cap make the set empty
    with pytest.raises(ValueError):
        proj_fixed_entries(X, mask, np.full((4, 5), 9.0), tau=2.0)


# ---------------------------------------------------------------------------
# ProxFriendly wrappers


def test_prox_classes_agree_with_free_functions():
    rng = np.random.default_rng(10)
    y = rng.normal(size=17) * 2.0
    gamma = 0.37
    np.testing.assert_array_equal(L1Norm(0.8).prox(gamma, y), prox_l1(y, 0.8 * gamma))
    np.testing.assert_array_equal(
        HalfPower(0.8).prox(gamma, y), prox_half(y, 0.8 * gamma)
    )
    np.testing.assert_array_equal(
        L1Box(0.8, 1.2).prox(gamma, y), prox_l1_box(y, 0.8 * gamma, 1.2)
    )
    np.testing.assert_array_equal(
        KSparseBoxSet(4, 1.2).prox(gamma, y), proj_ksparse_box(y, 4, 1.2)
    )
    assert L1Norm(0.8).value(y) == pytest.approx(0.8 * np.sum(np.abs(y)))
    assert HalfPower(0.8).value(y) == pytest.approx(0.8 * np.sum(np.sqrt(np.abs(y))))


def test_zero_penalty_is_identity():
    y = np.arange(6.0) - 2.5
    p = Zero()
    assert p.value(y) == 0.0
    np.testing.assert_array_equal(p.prox(3.0, y), y)
    assert p.in_domain(y)
    assert p.value_at_prox(y) == 0.0


def test_l1box_domain_and_value():
    p = L1Box(1.0, 1.0)
    inside = np.array([0.5, -1.0, 0.0])
    outside = np.array([0.5, -1.5, 0.0])
    assert p.value(inside) == pytest.approx(1.5)
    assert p.value(outside) == np.inf
    assert p.in_domain(inside)
    assert not p.in_domain(outside)
    assert p.domain_distance(outside) == pytest.approx(0.5)


def test_indicator_membership_and_prox_ignores_gamma():
    rng = np.random.default_rng(11)
    sets = [
        KSparseBoxSet(2, 1.0),
        EntrySparseSet(3, 1.5),
        AffineTwoSet(np.array([1.0, 2.0, 3.0, 0.5]), 1.1),
    ]
    for ind in sets:
        y = rng.normal(size=4)
        x = ind.project(y)
        # indicator prox is the projection for every gamma
        np.testing.assert_array_equal(ind.prox(1e-3, y), x)
        np.testing.assert_array_equal(ind.prox(1e3, y), x)
        assert ind.value(x) == 0.0
        assert ind.in_domain(x)
        assert ind.value_at_prox(y) == 0.0
        assert ind.sq_dist(y) == pytest.approx(float(np.sum((x - y) ** 2)), abs=1e-12)
        assert ind.domain_distance(x) <= 1e-12


def test_indicator_value_outside_set():
    ind = KSparseBoxSet(1, 1.0)
    assert ind.value(np.array([0.5, 0.5])) == np.inf
    assert ind.value(np.array([0.5, 0.0])) == 0.0
    # membership tolerance absorbs roundoff-scale violations
    assert ind.value(np.array([0.5, 1e-12])) == 0.0


def test_spectral_set_sq_dist_spectrum_shortcut():
    rng = np.random.default_rng(12)
    for psd in (False, True):
        n = 20
        B = rng.normal(size=(n, n))
        X = (B + B.T) / 2.0 if psd else B
        ind = SpectralRankSet(4, tau=1.5, psd=psd)
        direct = float(np.sum((X - ind.project(X)) ** 2))
        assert ind.sq_dist(X) == pytest.approx(direct, rel=1e-9, abs=1e-9)


def test_spectral_set_certifies_own_projection():
    # the trailing-spectrum sum must not cancel to noise on exactly
    # rank-k inputs, so projection outputs always pass the membership test
    rng = np.random.default_rng(21)
    for psd in (False, True):
        for _ in range(50):
            B = rng.normal(size=(9, 9))
            X = (B + B.T) / 2.0 if psd else B
            ind = SpectralRankSet(3, psd=psd)
            P = ind.project(X)
            assert ind.value(P) == 0.0
            assert ind.sq_dist(P) <= 1e-24 * max(1.0, float(np.sum(P**2)))


def test_spectral_set_gram_path_near_membership():
    # wide matrices route through the partial-spectrum shortcut; a tiny
    # genuine violation must still be resolved, not flushed to zero
    rng = np.random.default_rng(22)
    U = np.linalg.qr(rng.normal(size=(200, 8)))[0]
    V = np.linalg.qr(rng.normal(size=(300, 8)))[0]
    X = (U * np.linspace(5.0, 1.0, 8)) @ V.T
    ind = SpectralRankSet(8)
    assert ind.value(ind.project(X)) == 0.0
    E = rng.normal(size=(200, 300))
    E *= 2e-7 / np.linalg.norm(E)
    noisy = X + E
    d = ind.domain_distance(noisy)
    assert d == pytest.approx(float(np.linalg.norm(noisy - ind.project(noisy))), rel=1e-3)


def test_entry_sparse_set_sq_dist_shortcut():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(6, 7))
    for tau in (None, 0.8):
        ind = EntrySparseSet(5, tau)
        direct = float(np.sum((X - ind.project(X)) ** 2))
        assert ind.sq_dist(X) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_fixed_entries_set_round_trip():
    rng = np.random.default_rng(14)
    mask = rng.random(size=(3, 4)) < 0.5
    M = np.where(mask, rng.normal(size=(3, 4)) * 0.3, 0.0)
    ind = FixedEntriesSet(mask, M, tau=1.0)
    Y = rng.normal(size=(3, 4))
    X = ind.project(Y)
    assert ind.in_domain(X)
    assert ind.sq_dist(Y) == pytest.approx(float(np.sum((X - Y) ** 2)))
    assert not ind.in_domain(Y + 10.0)
