"""Builders assembling the shipped application problems.

Each builder returns a :class:`CompositeProblem` whose feasible point is
verified (objective finite) before the problem is handed back; a builder
that cannot produce a feasible point raises ValueError.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import sym_eig
from .model import (
    CompositeProblem,
    FirstDifferenceOp,
    IdentityOp,
    SmoothFn,
    eval_F,
)
from .prox import (
    AffineTwoSet,
    EntrySparseSet,
    FixedEntriesSet,
    HalfPower,
    KSparseBoxSet,
    L1Norm,
    SpectralRankSet,
    proj_affine2,
    proj_fixed_entries,
    proj_ksparse_box,
    proj_spectral,
)

__all__ = [
    "FusedConfig",
    "SlrConfig",
    "build_fused",
    "build_slr",
    "build_portfolio",
    "build_matrix_completion",
    "build_correlation",
]


@dataclass(frozen=True)
class FusedConfig:
    """Instance description for the fused-regularizer experiment.

    c1 and c2 default to sigma * sqrt(n) / 40 when not given.  The signal
    generator lays blocks on a grid of tenths with margins measured in
    fiftieths, hence n must be a multiple of 50.
    """

    n: int
    sigma: float
    c1: float | None = None
    c2: float | None = None

    def __post_init__(self):
        if self.n < 50 or self.n % 50 != 0:
            raise ValueError("n must be a positive multiple of 50")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        default = self.sigma * np.sqrt(self.n) / 40.0
        if self.c1 is None:
            object.__setattr__(self, "c1", float(default))
        if self.c2 is None:
            object.__setattr__(self, "c2", float(default))
        if self.c1 <= 0 or self.c2 < 0:
            raise ValueError("need c1 > 0 and c2 >= 0")


@dataclass(frozen=True)
class SlrConfig:
    """Instance description for the sparse/low-rank approximation experiment."""

    m: int
    n: int = 500
    k: int = 10
    s: int | None = None
    sigma: float = 0.005

    def __post_init__(self):
        if self.m < 10 or self.m % 10 != 0:
            raise ValueError("m must be a positive multiple of 10")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not (1 <= self.k <= min(self.m, self.n)):
            raise ValueError("k must lie in [1, min(m, n)]")
        if self.s is None:
            object.__setattr__(self, "s", int(self.m * self.n // 10))
        if not (1 <= self.s <= self.m * self.n):
            raise ValueError("s must lie in [1, m*n]")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


def _check_feasible(problem: CompositeProblem, what: str) -> CompositeProblem:
    if not np.isfinite(eval_F(problem, problem.x_feas)):
        raise ValueError(f"{what}: constructed feasible point has infinite objective")
    return problem


def build_fused(b, c1: float, c2: float) -> CompositeProblem:
    """1/2 ||x - b||^2 + c1 ||x||_1 + c2 ||Dx||_{1/2}^{1/2}.

    D takes first differences; the nonconvex half-power term is the
    composite piece.  With c2 = 0 the term is dropped and the problem is
    the plain soft-thresholding problem.  x_feas is the all-ones vector.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.size < 2:
        raise ValueError("b must be a 1-d vector of length >= 2")
    if not np.all(np.isfinite(b)):
        raise ValueError("b contains non-finite entries")
    if c1 <= 0:
        raise ValueError("c1 must be positive")
    if c2 < 0:
        raise ValueError("c2 must be nonnegative")
    f = SmoothFn(
        value=lambda x: 0.5 * float(np.sum((x - b) ** 2)),
        grad=lambda x: np.asarray(x, dtype=float) - b,
        lipschitz=1.0,
    )
    terms = []
    if c2 > 0:
        terms.append((FirstDifferenceOp(b.size), HalfPower(c2)))
    return _check_feasible(
        CompositeProblem(f=f, P0=L1Norm(c1), terms=terms, x_feas=np.ones(b.size)),
        "build_fused",
    )


def build_slr(M, k: int, s: int, split: str = "rank") -> CompositeProblem:
    """1/2 ||X - M||_F^2 over rank(X) <= k and ||vec(X)||_0 <= s.

    split='rank' keeps the rank set as the prox term P_0 and smooths the
    sparsity set; split='sparse' swaps the roles.  The data-fit term is
    level-bounded, so neither constraint needs a spectrum/entry cap.
    x_feas is the zero matrix.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("M must be a matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("M contains non-finite entries")
    if not (1 <= k <= min(M.shape)):
        raise ValueError("k must lie in [1, min(m, n)]")
    if not (1 <= s <= M.size):
        raise ValueError("s must lie in [1, m*n]")
    if split not in ("rank", "sparse"):
        raise ValueError("split must be 'rank' or 'sparse'")
    f = SmoothFn(
        value=lambda X: 0.5 * float(np.sum((X - M) ** 2)),
        grad=lambda X: np.asarray(X, dtype=float) - M,
        lipschitz=1.0,
    )
    rank_set = SpectralRankSet(k)
    sparse_set = EntrySparseSet(s)
    if split == "rank":
        P0, other = rank_set, sparse_set
    else:
        P0, other = sparse_set, rank_set
    return _check_feasible(
        CompositeProblem(
            f=f,
            P0=P0,
            terms=[(IdentityOp(M.shape), other)],
            x_feas=np.zeros(M.shape),
        ),
        "build_slr",
    )


def build_portfolio(Q, r, r0: float, k: int, tau: float = 1e4) -> CompositeProblem:
    """Minimum-variance selection: 1/2 x'Qx over the k-sparse box meeting
    the budget and return constraints sum(x) = 1, r'x = r0.

    The sparse box {0 <= x <= tau, ||x||_0 <= k} stays as the prox term;
    the two affine constraints are smoothed.  A feasible point is found by
    alternating projections between the two sets, with the affine pair
    re-solved exactly on the final support.
    """
    Q = np.asarray(Q, dtype=float)
    r = np.asarray(r, dtype=float)
    n = r.size
    if Q.shape != (n, n):
        raise ValueError("Q must be n-by-n matching r")
    eig = sym_eig(Q)  # validates symmetry
    lip = float(max(abs(eig.lam[0]), abs(eig.lam[-1])))
    if not (1 <= k <= n):
        raise ValueError("k must lie in [1, n]")
    if tau <= 0:
        raise ValueError("tau must be positive")
    omega = KSparseBoxSet(k, tau)
    aff = AffineTwoSet(r, r0)  # raises if r is parallel to the ones vector

    x_feas = _portfolio_feasible_point(r, float(r0), k, tau)

    f = SmoothFn(
        value=lambda x: 0.5 * float(np.asarray(x) @ (Q @ np.asarray(x))),
        grad=lambda x: Q @ np.asarray(x, dtype=float),
        lipschitz=lip,
    )
    return _check_feasible(
        CompositeProblem(
            f=f,
            P0=omega,
            terms=[(IdentityOp((n,)), aff)],
            x_feas=x_feas,
        ),
        "build_portfolio",
    )


def _portfolio_feasible_point(r, r0, k, tau, rounds: int = 1000) -> np.ndarray:
    n = r.size
    x = proj_affine2(np.full(n, 1.0 / n), r, r0)
    for _ in range(rounds):
        y = proj_ksparse_box(x, k, tau)
        support = np.flatnonzero(y)
        if support.size >= 2:
            # exact affine solve restricted to the active support
            try:
                sub = proj_affine2(y[support], r[support], r0)
            except ValueError:
                sub = None
            if sub is not None and np.all(sub >= -1e-10) and np.all(sub <= tau + 1e-10):
                out = np.zeros(n)
                out[support] = np.clip(sub, 0.0, tau)
                return out
        x = proj_affine2(y, r, r0)
    raise ValueError("build_portfolio: no feasible point found by alternating projections")


def build_matrix_completion(
    M,
    obs_mask,
    fix_mask,
    k: int,
    split: str = "rank",
    tau: float = 1e4,
) -> CompositeProblem:
    """Low-rank completion with some entries fit softly and some pinned.

    f(X) = 1/2 ||obs_mask o (X - M)||_F^2; constraints are rank(X) <= k and
    X = M on fix_mask.  split='rank' keeps the (tau-capped) rank set as
    the prox term and smooths the pinned entries; split='fixed' keeps the
    pinned entries (with an entrywise tau cap) and smooths the rank set.
    The cap sits on the prox side because the data fit alone is not
    level-bounded.  A feasible point comes from alternating projections
    started at the pinned matrix.
    """
    M = np.asarray(M, dtype=float)
    obs_mask = np.asarray(obs_mask, dtype=bool)
    fix_mask = np.asarray(fix_mask, dtype=bool)
    if M.ndim != 2 or obs_mask.shape != M.shape or fix_mask.shape != M.shape:
        raise ValueError("M, obs_mask and fix_mask must share one 2-d shape")
    if not np.all(np.isfinite(M)):
        raise ValueError("M contains non-finite entries")
    if not (1 <= k <= min(M.shape)):
        raise ValueError("k must lie in [1, min(m, n)]")
    if split not in ("rank", "fixed"):
        raise ValueError("split must be 'rank' or 'fixed'")
    if tau <= 0:
        raise ValueError("tau must be positive")

    def f_value(X):
        d = np.where(obs_mask, np.asarray(X, dtype=float) - M, 0.0)
        return 0.5 * float(np.sum(d * d))

    def f_grad(X):
        return np.where(obs_mask, np.asarray(X, dtype=float) - M, 0.0)

    f = SmoothFn(value=f_value, grad=f_grad, lipschitz=1.0)
    if split == "rank":
        P0 = SpectralRankSet(k, tau=tau)
        other = FixedEntriesSet(fix_mask, M)
    else:
        P0 = FixedEntriesSet(fix_mask, M, tau=tau)  # raises on cap conflict
        other = SpectralRankSet(k)

    x_feas = _completion_feasible_point(M, fix_mask, k, tau)
    return _check_feasible(
        CompositeProblem(
            f=f,
            P0=P0,
            terms=[(IdentityOp(M.shape), other)],
            x_feas=x_feas,
        ),
        "build_matrix_completion",
    )


def _completion_feasible_point(
    M, fix_mask, k, tau, rounds: int = 1000, restarts: int = 8
) -> np.ndarray:
    if not np.any(fix_mask):
        return np.zeros(M.shape)
    if np.any(np.abs(M[fix_mask]) > tau):
        raise ValueError("build_matrix_completion: pinned entries exceed the cap")
    # alternating projections between nonconvex sets can settle into a
    # two-cycle from a structured start, so failed attempts restart from
    # seeded Gaussian noise at the scale of the pinned data
    pin_scale = max(1.0, float(np.linalg.norm(M[fix_mask])))
    rng = np.random.default_rng(0)
    for attempt in range(restarts):
        start = np.zeros(M.shape) if attempt == 0 else pin_scale * rng.standard_normal(M.shape)
        X = proj_fixed_entries(start, fix_mask, M)
        for _ in range(rounds):
            Y = proj_spectral(X, k)
            X = proj_fixed_entries(Y, fix_mask, M)
            gap = float(np.linalg.norm(X - Y))
            if gap <= 1e-9 * max(1.0, float(np.linalg.norm(X))):
                s = np.linalg.svd(X, compute_uv=False)
                if s[0] <= tau * (1 + 1e-9):
                    return X
                break  # converged outside the cap; try another start
    raise ValueError(
        "build_matrix_completion: no feasible point found by alternating projections"
    )


def build_correlation(M, H, k: int, split: str = "rank", tau: float = 1e4) -> CompositeProblem:
    """Rank-constrained correlation fitting.

    f(X) = 1/2 ||H o (X - M)||_F^2 over symmetric PSD X with unit diagonal
    and rank(X) <= k.  split='rank' keeps the (capped) PSD rank set as the
    prox term and smooths the unit-diagonal set; split='diag' swaps them.
    The feasible point is a block-diagonal of all-ones blocks (k blocks),
    which is PSD with unit diagonal and rank at most k.
    """
    M = np.asarray(M, dtype=float)
    H = np.asarray(H, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n) or H.shape != (n, n):
        raise ValueError("M and H must be square of equal size")
    if np.any(H < 0):
        raise ValueError("H must be entrywise nonnegative")
    if not (1 <= k <= n):
        raise ValueError("k must lie in [1, n]")
    if split not in ("rank", "diag"):
        raise ValueError("split must be 'rank' or 'diag'")
    if tau < 1:
        raise ValueError("tau must be at least 1 (the diagonal is pinned at 1)")

    W = H * H

    def f_value(X):
        d = np.asarray(X, dtype=float) - M
        return 0.5 * float(np.sum(W * d * d))

    def f_grad(X):
        return W * (np.asarray(X, dtype=float) - M)

    f = SmoothFn(value=f_value, grad=f_grad, lipschitz=float(np.max(W)) if W.size else 0.0)

    diag_mask = np.eye(n, dtype=bool)
    eye = np.eye(n)
    if split == "rank":
        P0 = SpectralRankSet(k, tau=tau, psd=True)
        other = FixedEntriesSet(diag_mask, eye)
    else:
        P0 = FixedEntriesSet(diag_mask, eye, tau=tau)
        other = SpectralRankSet(k, psd=True)

    x_feas = _block_ones(n, k)
    lam_max = int(np.ceil(n / k))
    if lam_max > tau:
        raise ValueError("build_correlation: feasible block matrix violates the cap")
    return _check_feasible(
        CompositeProblem(
            f=f,
            P0=P0,
            terms=[(IdentityOp((n, n)), other)],
            x_feas=x_feas,
        ),
        "build_correlation",
    )


def _block_ones(n: int, k: int) -> np.ndarray:
    """Block-diagonal of all-ones blocks: PSD, unit diagonal, rank <= k."""
    sizes = [n // k + (1 if i < n % k else 0) for i in range(min(k, n))]
    X = np.zeros((n, n))
    start = 0
    for sz in sizes:
        if sz == 0:
            continue
        X[start : start + sz, start : start + sz] = 1.0
        start += sz
    return X
