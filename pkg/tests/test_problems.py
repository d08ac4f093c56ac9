"""Tests for the shipped problem builders and their feasible points."""

import numpy as np
import pytest

from sdcam.model import eval_F
from sdcam.problems import (
    FusedConfig,
    SlrConfig,
    build_correlation,
    build_fused,
    build_matrix_completion,
    build_portfolio,
    build_slr,
)
from sdcam.prox import (
    EntrySparseSet,
    FixedEntriesSet,
    HalfPower,
    KSparseBoxSet,
    L1Norm,
    SpectralRankSet,
    prox_l1,
)
from sdcam.solver import sdcam_run


def test_config_validation():
    with pytest.raises(ValueError):
        FusedConfig(n=123, sigma=0.1)  # not a multiple of 50
    with pytest.raises(ValueError):
        FusedConfig(n=200, sigma=0.0)
    cfg = FusedConfig(n=400, sigma=0.1)
    assert cfg.c1 == pytest.approx(0.1 * np.sqrt(400) / 40)
    assert cfg.c2 == pytest.approx(cfg.c1)
    with pytest.raises(ValueError):
        SlrConfig(m=15)  # not a multiple of 10
    scfg = SlrConfig(m=100)
    assert scfg.s == 100 * 500 // 10


def test_build_fused_shape():
    rng = np.random.default_rng(0)
    b = rng.normal(size=30)
    prob = build_fused(b, c1=0.2, c2=0.1)
    assert isinstance(prob.P0, L1Norm)
    assert len(prob.terms) == 1
    A, P = prob.terms[0]
    assert isinstance(P, HalfPower)
    assert A.out_shape == (29,)
    np.testing.assert_array_equal(prob.x_feas, np.ones(30))
    x = rng.normal(size=30)
    d = x[1:] - x[:-1]
    expect = (
        0.5 * np.sum((x - b) ** 2)
        + 0.2 * np.sum(np.abs(x))
        + 0.1 * np.sum(np.sqrt(np.abs(d)))
    )
    assert eval_F(prob, x) == pytest.approx(expect)


def test_build_fused_validation():
    with pytest.raises(ValueError):
        build_fused(np.array([1.0]), 0.1, 0.1)
    with pytest.raises(ValueError):
        build_fused(np.array([1.0, np.nan]), 0.1, 0.1)
    with pytest.raises(ValueError):
        build_fused(np.ones(5), 0.0, 0.1)
    with pytest.raises(ValueError):
        build_fused(np.ones(5), 0.1, -0.1)


def test_build_fused_c2_zero_reduces_to_soft_threshold():
    # without the difference term the problem has the closed-form solution
    rng = np.random.default_rng(1)
    b = rng.normal(size=40) * 2.0
    prob = build_fused(b, c1=0.3, c2=0.0)
    assert prob.terms == []
    rep = sdcam_run(prob)
    np.testing.assert_allclose(rep.x_final, prox_l1(b, 0.3), atol=1e-6)


def test_build_slr_splits():
    rng = np.random.default_rng(2)
    M = rng.normal(size=(8, 6))
    pr = build_slr(M, k=2, s=10, split="rank")
    assert isinstance(pr.P0, SpectralRankSet)
    assert isinstance(pr.terms[0][1], EntrySparseSet)
    ps = build_slr(M, k=2, s=10, split="sparse")
    assert isinstance(ps.P0, EntrySparseSet)
    assert isinstance(ps.terms[0][1], SpectralRankSet)
    np.testing.assert_array_equal(pr.x_feas, np.zeros((8, 6)))
    # identical objective on feasible inputs regardless of the split
    X = np.zeros((8, 6))
    X[0, 0] = 1.0
    assert eval_F(pr, X) == pytest.approx(eval_F(ps, X))
    with pytest.raises(ValueError):
        build_slr(M, k=0, s=10)
    with pytest.raises(ValueError):
        build_slr(M, k=2, s=0)
    with pytest.raises(ValueError):
        build_slr(M, k=2, s=10, split="bogus")


def test_build_portfolio_feasible_point():
    rng = np.random.default_rng(3)
    n = 20
    B = rng.normal(size=(n, n))
    Q = B @ B.T / n
    r = np.abs(rng.normal(size=n)) + 0.5
    r0 = float(np.mean(r))
    prob = build_portfolio(Q, r, r0, k=6)
    x = prob.x_feas
    # the feasible point satisfies budget, return, sparsity and the box
    assert abs(np.sum(x) - 1.0) <= 1e-8
    assert abs(r @ x - r0) <= 1e-8
    assert np.count_nonzero(x) <= 6
    assert np.all(x >= -1e-12)
    assert np.isfinite(eval_F(prob, x))
    assert isinstance(prob.P0, KSparseBoxSet)


def test_build_portfolio_errors():
    n = 8
    Q = np.eye(n)
    r = np.ones(n) * 1.5
    # r parallel to the ones vector makes the affine pair degenerate
    with pytest.raises(ValueError):
        build_portfolio(Q, r, 1.5, k=3)
    r = np.linspace(1.0, 2.0, n)
    with pytest.raises(ValueError):
        build_portfolio(Q[:, :4], r, 1.2, k=3)
    with pytest.raises(ValueError):
        build_portfolio(Q, r, 1.2, k=0)
    # asymmetric Q is rejected by the eigendecomposition guard
    Qbad = Q.copy()
    Qbad[0, 1] = 0.5
    with pytest.raises(ValueError):
        build_portfolio(Qbad, r, 1.2, k=3)


def test_build_matrix_completion_feasible_point():
    rng = np.random.default_rng(4)
    m, n, k = 12, 9, 3
    U = rng.normal(size=(m, k))
    V = rng.normal(size=(k, n))
    M = U @ V
    obs = rng.random(size=(m, n)) < 0.5
    fix = (rng.random(size=(m, n)) < 0.1) & ~obs
    for split in ("rank", "fixed"):
        prob = build_matrix_completion(M, obs, fix, k, split=split)
        X = prob.x_feas
        np.testing.assert_allclose(X[fix], M[fix], atol=1e-7)
        s = np.linalg.svd(X, compute_uv=False)
        assert np.sum(s > 1e-7 * s[0]) <= k if s[0] > 0 else True
        assert np.isfinite(eval_F(prob, X))
    with pytest.raises(ValueError):
        build_matrix_completion(M, obs, fix, 0)
    with pytest.raises(ValueError):
        build_matrix_completion(M, obs, fix[:, :4], k)
    with pytest.raises(ValueError):
        build_matrix_completion(M, obs, fix, k, split="bogus")
    # pinned entries above the cap cannot be feasible
    with pytest.raises(ValueError):
        build_matrix_completion(M, obs, fix, k, tau=1e-6)


def test_build_correlation_feasible_point():
    rng = np.random.default_rng(5)
    n, k = 15, 4
    B = rng.normal(size=(n, n))
    M = np.corrcoef(B)
    H = np.abs(rng.normal(size=(n, n)))
    H = (H + H.T) / 2
    for split in ("rank", "diag"):
        prob = build_correlation(M, H, k, split=split)
        X = prob.x_feas
        np.testing.assert_array_equal(np.diag(X), np.ones(n))
        vals = np.linalg.eigvalsh(X)
        assert vals.min() >= -1e-10
        assert np.sum(vals > 1e-8) <= k
        assert np.isfinite(eval_F(prob, X))
    with pytest.raises(ValueError):
        build_correlation(M, -H, k)
    with pytest.raises(ValueError):
        build_correlation(M, H, 0)
    with pytest.raises(ValueError):
        build_correlation(M, H, k, tau=0.5)
    with pytest.raises(ValueError):
        build_correlation(M[:, :4], H, k)


def test_correlation_block_feasible_matrix_structure():
    prob = build_correlation(np.eye(7), np.ones((7, 7)), k=3)
    X = prob.x_feas
    # block-diagonal of all-ones blocks with sizes 3, 2, 2
    assert X[0, 2] == 1.0 and X[0, 3] == 0.0
    assert X[3, 4] == 1.0 and X[3, 5] == 0.0
    assert X[5, 6] == 1.0


def test_small_slr_solve_reaches_both_constraints():
    # a tiny instance should drive the smoothed constraint distance to the
    # stopping level under the default schedule
    rng = np.random.default_rng(6)
    M1 = rng.normal(size=(20, 3))
    M2 = rng.normal(size=(3, 15))
    M = M1 @ M2 + 0.01 * rng.normal(size=(20, 15))
    prob = build_slr(M, k=3, s=60, split="rank")

    def stop(x, rec):
        return rec.feas_distances[0] <= 1e-6 * float(np.linalg.norm(x))

    rep = sdcam_run(prob, custom_stop=stop)
    X = rep.x_final
    assert rep.status in ("custom_stop", "lambda_floor")
    # prox-side constraint holds exactly; smoothed side to tolerance
    s = np.linalg.svd(X, compute_uv=False)
    assert np.sum(s > 1e-8 * max(s[0], 1.0)) <= 3
    assert rep.per_outer[-1].feas_distances[0] <= 1e-4 * float(np.linalg.norm(X))
