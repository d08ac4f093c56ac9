"""Proximal mappings and projections for the penalty/constraint catalog.

Two layers live here.  Free functions implement the closed-form scalar
mappings and set projections; small classes wrap them behind a common
``ProxFriendly`` interface (value / prox / domain queries) so solvers can
treat penalties and indicator constraints uniformly.

Every mapping returns a global minimizer of

    u  ->  (1/2) * ||u - y||^2 + gamma * P(u)

for its function P, which for an indicator is just the projection onto the
set (independent of gamma).  Nonconvex sets break ties deterministically:
selections by score keep the lowest-index candidates.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .linalg import svd, sym_eig, top_k_indices

__all__ = [
    "prox_l1",
    "prox_half",
    "prox_l1_box",
    "proj_ksparse_box",
    "proj_affine2",
    "proj_spectral",
    "proj_entry_sparse",
    "proj_fixed_entries",
    "ProxFriendly",
    "IndicatorSet",
    "Zero",
    "L1Norm",
    "HalfPower",
    "L1Box",
    "KSparseBoxSet",
    "AffineTwoSet",
    "SpectralRankSet",
    "EntrySparseSet",
    "FixedEntriesSet",
]


# ---------------------------------------------------------------------------
# scalar (separable) proximal mappings


def prox_l1(y, gamma: float) -> np.ndarray:
    """Soft thresholding: prox of gamma * ||.||_1.

    Parameters
    ----------
    y : array_like
        Input point, any shape; the mapping acts elementwise.
    gamma : float
        Nonnegative threshold level.
    """
    y = np.asarray(y, dtype=float)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return np.sign(y) * np.maximum(np.abs(y) - gamma, 0.0)


def prox_half(y, gamma: float) -> np.ndarray:
    """Half thresholding: prox of gamma * sum_i |u_i|^{1/2}.

    Entries with |y_i| <= (3/2) * gamma^{2/3} map to 0 (at the tie
    magnitude both 0 and the interior stationary point attain the same
    objective; 0 is returned).  Larger entries follow the trigonometric
    closed form obtained from the cubic stationarity condition
    v^3 - |y| v + gamma/2 = 0 with u = v^2:

        u = (2|y|/3) * (1 + cos((2/3) * arccos(-(3^{3/2}/4) gamma |y|^{-3/2})))

    carried back with the sign of y.
    """
    y = np.asarray(y, dtype=float)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if gamma == 0.0:
        return y.copy()
    out = np.zeros_like(y)
    big = np.abs(y) > 1.5 * gamma ** (2.0 / 3.0)
    if np.any(big):
        yb = y[big]
        arg = (3.0**1.5 / 4.0) * gamma * np.abs(yb) ** -1.5
        # arg <= 1/sqrt(2) on this branch; the clip only guards roundoff
        phi = np.arccos(np.clip(-arg, -1.0, 1.0))
        out[big] = (2.0 / 3.0) * yb * (1.0 + np.cos((2.0 / 3.0) * phi))
    return out


def prox_l1_box(y, gamma: float, tau: float) -> np.ndarray:
    """Prox of gamma * ||.||_1 restricted to the box [-tau, tau].

    Soft threshold first, then clip; the composition is exact because both
    pieces are separable and the box projection of the soft-threshold
    output stays optimal for the scalar subproblem.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    return np.clip(prox_l1(y, gamma), -tau, tau)


# ---------------------------------------------------------------------------
# projections onto nonconvex constraint sets


def proj_ksparse_box(y, k: int, tau: float) -> np.ndarray:
    """Project onto {x : 0 <= x <= tau, ||x||_0 <= k}.

    Each index is scored by the squared-norm reduction achieved by keeping
    it at its box-projected value, score_i = y_i^2/2 - (c_i - y_i)^2/2 with
    c_i = clip(y_i, 0, tau); the k best scores (ties to lower indices) are
    kept at c_i and the rest are zeroed.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("y must be 1-d")
    if tau <= 0:
        raise ValueError("tau must be positive")
    clipped = np.clip(y, 0.0, tau)
    scores = 0.5 * y * y - 0.5 * (clipped - y) ** 2
    keep = top_k_indices(scores, k)
    out = np.zeros_like(y)
    out[keep] = clipped[keep]
    return out


def proj_affine2(y, r, r0: float) -> np.ndarray:
    """Project onto {x : sum(x) = 1, r'x = r0}.

    Solves the 2x2 normal equations of the two constraints.  Raises
    ValueError when the constraints are (nearly) parallel, i.e. the Gram
    determinant falls below 1e-14 * n * ||r||^2.
    """
    y = np.asarray(y, dtype=float)
    r = np.asarray(r, dtype=float)
    if y.shape != r.shape or y.ndim != 1:
        raise ValueError("y and r must be 1-d of equal length")
    n = y.size
    sr = float(np.sum(r))
    rr = float(r @ r)
    det = n * rr - sr * sr
    if abs(det) < 1e-14 * n * rr or rr == 0.0:
        raise ValueError("affine constraints are nearly parallel")
    c1 = float(np.sum(y)) - 1.0
    c2 = float(r @ y) - float(r0)
    a1 = (rr * c1 - sr * c2) / det
    a2 = (n * c2 - sr * c1) / det
    return y - a1 - a2 * r


def _top_k_spectral(X: np.ndarray, k: int):
    """Top-k singular triplets (U_k, s_k, V_k) of a dense matrix.

    For large matrices the factors come from the eigendecomposition of the
    smaller Gram matrix, which is several times faster than a full SVD and
    accurate for the leading part of the spectrum, which is all a rank-k
    projection consumes.
    """
    m, n = X.shape
    r = min(m, n)
    k = min(k, r)
    if k == 0:
        return (
            np.zeros((m, 0)),
            np.zeros(0),
            np.zeros((n, 0)),
        )
    if r < 128 or k > r // 3:
        f = svd(X)
        return f.U[:, :k], f.sigma[:k].copy(), f.V[:, :k]
    transposed = m < n
    A = X.T if transposed else X
    nn = A.shape[1]
    G = A.T @ A
    w, V = scipy.linalg.eigh(G, subset_by_index=[nn - k, nn - 1])
    w = w[::-1]
    V = np.ascontiguousarray(V[:, ::-1])
    s = np.sqrt(np.clip(w, 0.0, None))
    U = A @ V
    floor = 1e-12 * max(float(s[0]), 1e-300)
    for j in range(k):
        if s[j] > floor:
            U[:, j] /= s[j]
        else:
            U[:, j] = 0.0
            s[j] = 0.0
    if transposed:
        return V, s, U
    return U, s, V


def _top_k_sq_singvals(X: np.ndarray, k: int) -> np.ndarray:
    """Squares of the k largest singular values (descending)."""
    m, n = X.shape
    r = min(m, n)
    k = min(k, r)
    if k == 0:
        return np.zeros(0)
    if r < 128 or k > r // 3:
        s = np.linalg.svd(X, compute_uv=False)
        return s[:k] ** 2
    A = X if n <= m else X.T
    nn = A.shape[1]
    G = A.T @ A
    w = scipy.linalg.eigvalsh(G, subset_by_index=[nn - k, nn - 1])
    return np.clip(w[::-1], 0.0, None)


def proj_spectral(W, k: int, tau: float | None = None, psd: bool = False) -> np.ndarray:
    """Project onto a rank-k spectral set, with optional cap on the spectrum.

    psd=False projects onto {X : rank(X) <= k} (tau=None) or onto the same
    set intersected with {sigma_max(X) <= tau}: the k largest singular
    values are kept (capped at tau when given) and the rest dropped.

    psd=True requires a symmetric input and projects onto the positive
    semidefinite rank-k matrices, optionally with eigenvalues capped at
    tau: the k largest eigenvalues by value are kept, clipped to [0, tau].
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ValueError("W must be a matrix")
    if k < 0:
        raise ValueError("k must be nonnegative")
    if tau is not None and tau <= 0:
        raise ValueError("tau must be positive")
    if psd:
        f = sym_eig(W)
        lam = f.lam[:k] if k <= f.lam.size else f.lam
        zeta = np.maximum(lam, 0.0) if tau is None else np.clip(lam, 0.0, tau)
        Qk = f.Q[:, : zeta.size]
        return (Qk * zeta) @ Qk.T
    U, s, V = _top_k_spectral(W, k)
    zeta = s if tau is None else np.minimum(s, tau)
    return (U * zeta) @ V.T


def proj_entry_sparse(Y, s: int, tau: float | None = None) -> np.ndarray:
    """Project a matrix onto {||vec(Y)||_0 <= s}, optionally with |Y_ij| <= tau.

    Entries are scored by the squared-norm reduction of keeping them at
    their clipped value; the s best scores win, ties resolving to the
    lowest flat (row-major) index.
    """
    Y = np.asarray(Y, dtype=float)
    if s < 0:
        raise ValueError("s must be nonnegative")
    if tau is not None and tau <= 0:
        raise ValueError("tau must be positive")
    flat = Y.ravel()
    clipped = flat if tau is None else np.clip(flat, -tau, tau)
    scores = 0.5 * flat * flat - 0.5 * (clipped - flat) ** 2
    keep = top_k_indices(scores, s)
    out = np.zeros_like(flat)
    out[keep] = clipped[keep]
    return out.reshape(Y.shape)


def proj_fixed_entries(X, mask, M, tau: float | None = None) -> np.ndarray:
    """Project onto {Y : Y[mask] = M[mask]}, optionally with |Y_ij| <= tau.

    Masked entries are overwritten with the prescribed values; unmasked
    entries are kept (clipped to the box when tau is given).  Raises
    ValueError when a prescribed value itself violates the cap, since the
    set is then empty.
    """
    X = np.asarray(X, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    M = np.asarray(M, dtype=float)
    if mask.shape != X.shape or M.shape != X.shape:
        raise ValueError("mask and M must match the shape of X")
    if tau is not None:
        if tau <= 0:
            raise ValueError("tau must be positive")
        if np.any(np.abs(M[mask]) > tau):
            raise ValueError("fixed entries exceed the cap; the set is empty")
    out = X.copy() if tau is None else np.clip(X, -tau, tau)
    out[mask] = M[mask]
    return out


# ---------------------------------------------------------------------------
# ProxFriendly wrappers


class ProxFriendly:
    """A proper closed nonnegative function with a cheap prox.

    Subclasses provide ``value`` (may return +inf) and ``prox``; the
    remaining queries default to a function finite everywhere.
    """

    def value(self, x) -> float:
        raise NotImplementedError

    def prox(self, gamma: float, y) -> np.ndarray:
        raise NotImplementedError

    def in_domain(self, x) -> bool:
        return True

    def domain_distance(self, x) -> float:
        """Distance from x to the domain (0 for finite-valued functions)."""
        return 0.0

    def value_at_prox(self, u) -> float:
        """Value at a point known to be a prox output (= value(u) in general)."""
        return self.value(u)


class IndicatorSet(ProxFriendly):
    """Indicator of a closed set; prox is the projection, gamma-independent.

    Membership is tested through the projection residual with tolerance
    1e-8 * max(1, ||x||), since floating-point iterates land on nonconvex
    sets only up to roundoff.
    """

    _TOL = 1e-8

    def project(self, y) -> np.ndarray:
        raise NotImplementedError

    def prox(self, gamma: float, y) -> np.ndarray:
        return self.project(y)

    def sq_dist(self, x) -> float:
        d = np.asarray(x, dtype=float) - self.project(x)
        return float(np.vdot(d, d).real)

    def domain_distance(self, x) -> float:
        return float(np.sqrt(max(self.sq_dist(x), 0.0)))

    def in_domain(self, x) -> bool:
        scale = max(1.0, float(np.linalg.norm(np.asarray(x, dtype=float).ravel())))
        return self.domain_distance(x) <= self._TOL * scale

    def value(self, x) -> float:
        return 0.0 if self.in_domain(x) else np.inf

    def value_at_prox(self, u) -> float:
        # projections land on the set exactly, no membership test needed
        return 0.0


class Zero(ProxFriendly):
    """The zero function; prox is the identity."""

    def value(self, x) -> float:
        return 0.0

    def prox(self, gamma: float, y) -> np.ndarray:
        return np.asarray(y, dtype=float).copy()


class L1Norm(ProxFriendly):
    """weight * ||x||_1."""

    def __init__(self, weight: float = 1.0):
        if weight < 0:
            raise ValueError("weight must be nonnegative")
        self.weight = float(weight)

    def value(self, x) -> float:
        return self.weight * float(np.sum(np.abs(x)))

    def prox(self, gamma: float, y) -> np.ndarray:
        return prox_l1(y, gamma * self.weight)


class HalfPower(ProxFriendly):
    """weight * sum_i |x_i|^{1/2}."""

    def __init__(self, weight: float = 1.0):
        if weight < 0:
            raise ValueError("weight must be nonnegative")
        self.weight = float(weight)

    def value(self, x) -> float:
        return self.weight * float(np.sum(np.sqrt(np.abs(x))))

    def prox(self, gamma: float, y) -> np.ndarray:
        return prox_half(y, gamma * self.weight)


class L1Box(ProxFriendly):
    """weight * ||x||_1 plus the indicator of the box [-tau, tau]^n."""

    def __init__(self, weight: float, tau: float):
        if weight < 0:
            raise ValueError("weight must be nonnegative")
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.weight = float(weight)
        self.tau = float(tau)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        slack = 1e-9 * max(1.0, self.tau)
        if np.any(np.abs(x) > self.tau + slack):
            return np.inf
        return self.weight * float(np.sum(np.abs(x)))

    def prox(self, gamma: float, y) -> np.ndarray:
        return prox_l1_box(y, gamma * self.weight, self.tau)

    def in_domain(self, x) -> bool:
        return np.isfinite(self.value(x))

    def domain_distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - np.clip(x, -self.tau, self.tau)))


class KSparseBoxSet(IndicatorSet):
    """{x : 0 <= x <= tau, ||x||_0 <= k}."""

    def __init__(self, k: int, tau: float):
        if k < 0:
            raise ValueError("k must be nonnegative")
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.k = int(k)
        self.tau = float(tau)

    def project(self, y) -> np.ndarray:
        return proj_ksparse_box(y, self.k, self.tau)


class AffineTwoSet(IndicatorSet):
    """{x : sum(x) = 1, r'x = r0}."""

    def __init__(self, r, r0: float):
        self.r = np.asarray(r, dtype=float)
        self.r0 = float(r0)
        # fail fast on parallel constraints
        proj_affine2(np.zeros_like(self.r), self.r, self.r0)

    def project(self, y) -> np.ndarray:
        return proj_affine2(y, self.r, self.r0)


class SpectralRankSet(IndicatorSet):
    """Matrices of rank at most k, with optional spectrum cap / PSD variant.

    psd=False: {X : rank(X) <= k} or, with a cap, additionally
    sigma_max(X) <= tau.  psd=True: symmetric PSD matrices of rank <= k,
    optionally with lambda_max <= tau.
    """

    def __init__(self, k: int, tau: float | None = None, psd: bool = False):
        if k < 0:
            raise ValueError("k must be nonnegative")
        if tau is not None and tau <= 0:
            raise ValueError("tau must be positive")
        self.k = int(k)
        self.tau = None if tau is None else float(tau)
        self.psd = bool(psd)

    def project(self, y) -> np.ndarray:
        return proj_spectral(y, self.k, self.tau, self.psd)

    def sq_dist(self, x) -> float:
        # sum((sigma_i - zeta_i)^2, kept) + sum(sigma_i^2, dropped); the
        # dropped part is summed directly from the trailing spectrum where
        # available, since ||X||_F^2 minus the head cancels to noise on
        # nearly rank-k inputs
        x = np.asarray(x, dtype=float)
        if self.psd:
            f = sym_eig(x)
            lam = f.lam[: self.k]
            if self.tau is None:
                zeta = np.maximum(lam, 0.0)
            else:
                zeta = np.clip(lam, 0.0, self.tau)
            tail = float(np.sum(f.lam[self.k :] ** 2))
            return tail + float(np.sum((lam - zeta) ** 2))
        m, n = x.shape
        r = min(m, n)
        if r < 128 or self.k > r // 3:
            s = np.linalg.svd(x, compute_uv=False)
            kept = s[: self.k]
            tail = float(np.sum(s[self.k :] ** 2))
        else:
            total = float(np.vdot(x, x).real)
            sq = _top_k_sq_singvals(x, self.k)
            kept = np.sqrt(sq)
            tail = total - float(np.sum(sq))
            if tail <= 64.0 * np.finfo(float).eps * total:
                # cancellation floor of the partial-spectrum shortcut
                d = x - proj_spectral(x, self.k)
                tail = float(np.vdot(d, d).real)
            tail = max(tail, 0.0)
        if self.tau is None:
            return tail
        return tail + float(np.sum((kept - np.minimum(kept, self.tau)) ** 2))


class EntrySparseSet(IndicatorSet):
    """{Y : ||vec(Y)||_0 <= s}, optionally with |Y_ij| <= tau."""

    def __init__(self, s: int, tau: float | None = None):
        if s < 0:
            raise ValueError("s must be nonnegative")
        if tau is not None and tau <= 0:
            raise ValueError("tau must be positive")
        self.s = int(s)
        self.tau = None if tau is None else float(tau)

    def project(self, y) -> np.ndarray:
        return proj_entry_sparse(y, self.s, self.tau)

    def sq_dist(self, x) -> float:
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        if self.tau is None:
            if self.s >= flat.size:
                return 0.0
            sq = flat * flat
            # sum of all but the s largest squares
            part = np.partition(sq, flat.size - self.s)
            return float(np.sum(part[: flat.size - self.s]))
        return super().sq_dist(x)


class FixedEntriesSet(IndicatorSet):
    """{Y : Y[mask] = M[mask]}, optionally with |Y_ij| <= tau."""

    def __init__(self, mask, M, tau: float | None = None):
        self.mask = np.asarray(mask, dtype=bool)
        self.M = np.asarray(M, dtype=float)
        if self.mask.shape != self.M.shape:
            raise ValueError("mask and M must have equal shapes")
        self.tau = None if tau is None else float(tau)
        if self.tau is not None:
            if self.tau <= 0:
                raise ValueError("tau must be positive")
            if np.any(np.abs(self.M[self.mask]) > self.tau):
                raise ValueError("fixed entries exceed the cap; the set is empty")

    def project(self, y) -> np.ndarray:
        return proj_fixed_entries(y, self.mask, self.M, self.tau)
