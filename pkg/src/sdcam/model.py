"""Composite problem model: smooth part plus prox-friendly terms under linear maps.

A :class:`CompositeProblem` is

    F(x) = f(x) + P_0(x) + sum_i P_i(A_i x)

with f Lipschitz-smooth, P_0 prox-friendly and each P_i prox-friendly but
possibly an indicator of a nonconvex set.  Replacing each P_i by its
Moreau envelope at level lambda_i yields the smoothed objective
F_lambda; regrouping the envelope quadratics with f produces the
surrogate structure (smooth h) + P_0 - (convex g) consumed by the inner
solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .moreau import moreau_value
from .prox import IndicatorSet, ProxFriendly

__all__ = [
    "LinearOp",
    "IdentityOp",
    "FirstDifferenceOp",
    "SamplingMaskOp",
    "VectorizeOp",
    "SmoothFn",
    "CompositeProblem",
    "SurrogateProblem",
    "eval_F",
    "eval_F_lambda",
    "surrogate",
    "stationarity_residual",
    "estimate_norm_sq",
]


def _flat_norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float).ravel()))


# ---------------------------------------------------------------------------
# linear operators


class LinearOp:
    """Linear map between arrays, with adjoint and an operator-norm bound.

    ``norm_sq_bound`` is an upper bound on ||A||^2 (the squared operator
    norm); solvers use it to build Lipschitz constants for the smoothed
    quadratics.
    """

    in_shape: tuple
    out_shape: tuple
    norm_sq_bound: float

    def apply(self, x) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y) -> np.ndarray:
        raise NotImplementedError


class IdentityOp(LinearOp):
    def __init__(self, shape):
        self.in_shape = tuple(shape)
        self.out_shape = tuple(shape)
        self.norm_sq_bound = 1.0

    def apply(self, x):
        return np.asarray(x, dtype=float)

    def adjoint(self, y):
        return np.asarray(y, dtype=float)


class FirstDifferenceOp(LinearOp):
    """Forward differences on a vector: (A x)_i = x_{i+1} - x_i."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("n must be at least 2")
        self.in_shape = (n,)
        self.out_shape = (n - 1,)
        # largest eigenvalue of A'A is 2 - 2 cos((n-1) pi / n) < 4
        self.norm_sq_bound = 4.0

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        return x[1:] - x[:-1]

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(self.in_shape[0])
        out[:-1] -= y
        out[1:] += y
        return out


class SamplingMaskOp(LinearOp):
    """Entrywise masking: keeps observed entries, zeroes the rest.

    Self-adjoint with operator norm 1 (assuming the mask is nonempty).
    """

    def __init__(self, mask):
        self.mask = np.asarray(mask, dtype=bool)
        self.in_shape = self.mask.shape
        self.out_shape = self.mask.shape
        self.norm_sq_bound = 1.0

    def apply(self, x):
        return np.where(self.mask, np.asarray(x, dtype=float), 0.0)

    def adjoint(self, y):
        return np.where(self.mask, np.asarray(y, dtype=float), 0.0)


class VectorizeOp(LinearOp):
    """Row-major flattening of a matrix; the adjoint reshapes back."""

    def __init__(self, shape):
        self.in_shape = tuple(shape)
        self.out_shape = (int(np.prod(shape)),)
        self.norm_sq_bound = 1.0

    def apply(self, x):
        return np.asarray(x, dtype=float).ravel()

    def adjoint(self, y):
        return np.asarray(y, dtype=float).reshape(self.in_shape)


# ---------------------------------------------------------------------------
# smooth functions and problems


@dataclass(frozen=True)
class SmoothFn:
    """A differentiable function with a known gradient Lipschitz constant."""

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    lipschitz: float


@dataclass
class CompositeProblem:
    """F(x) = f(x) + P_0(x) + sum_i P_i(A_i x), with a known feasible point."""

    f: SmoothFn
    P0: ProxFriendly
    terms: list[tuple[LinearOp, ProxFriendly]] = field(default_factory=list)
    x_feas: np.ndarray | None = None

    def objective(self, x) -> float:
        return eval_F(self, x)

    def smoothed_objective(self, lambdas, x) -> float:
        return eval_F_lambda(self, lambdas, x)

    def feasibility_distances(self, x) -> list[float]:
        """Distance of A_i x to dom P_i for each composite term."""
        return [P.domain_distance(A.apply(x)) for A, P in self.terms]


def eval_F(problem: CompositeProblem, x) -> float:
    """Objective value, +inf when any term is infeasible."""
    total = problem.f.value(x) + problem.P0.value(x)
    if not np.isfinite(total):
        return np.inf
    for A, P in problem.terms:
        total += P.value(A.apply(x))
        if not np.isfinite(total):
            return np.inf
    return float(total)


def eval_F_lambda(problem: CompositeProblem, lambdas, x) -> float:
    """Smoothed objective: each P_i replaced by its Moreau envelope.

    P_0 is kept as-is, so the value is +inf outside dom P_0; each envelope
    term is finite everywhere and is evaluated in its stable prox form
    rather than as a difference of large quadratics.
    """
    lambdas = list(lambdas)
    if len(lambdas) != len(problem.terms):
        raise ValueError("need one lambda per composite term")
    total = problem.f.value(x) + problem.P0.value(x)
    if not np.isfinite(total):
        return np.inf
    for lam, (A, P) in zip(lambdas, problem.terms):
        total += moreau_value(P, lam, A.apply(x))
    return float(total)


@dataclass
class SurrogateProblem:
    """The smoothed problem in solver form: minimize h(x) + P(x) - g(x).

    h collects f and the envelope quadratics ||A_i x||^2 / (2 lambda_i);
    g is the sum of the convex parts of the envelope splits.  The
    gradient actually used by prox steps, grad h - (subgradient of g), is
    assembled termwise as grad f + sum_i A_i^T (A_i x - zeta_i) / lambda_i,
    which avoids the cancellation of two huge quadratic gradients when
    lambda_i is tiny.
    """

    f: SmoothFn
    h: SmoothFn
    P: ProxFriendly
    terms: list[tuple[LinearOp, ProxFriendly]]
    lambdas: list[float]

    def objective(self, x, p_value: float | None = None) -> float:
        """F_lambda(x); pass p_value when P(x) is already known."""
        if p_value is None:
            p_value = self.P.value(x)
        total = self.f.value(x) + p_value
        if not np.isfinite(total):
            return np.inf
        for lam, (A, P) in zip(self.lambdas, self.terms):
            total += moreau_value(P, lam, A.apply(x))
        return float(total)

    def g_value(self, x) -> float:
        """Value of the convex part g at x."""
        total = 0.0
        for lam, (A, P) in zip(self.lambdas, self.terms):
            z = A.apply(x)
            quad = float(np.vdot(z, z).real) / (2.0 * lam)
            total += quad - moreau_value(P, lam, z)
        return total

    def g_subgrad(self, x):
        """Subgradient of g: returns (per-term prox points, aggregate)."""
        x = np.asarray(x, dtype=float)
        zetas = []
        agg = np.zeros_like(x)
        for lam, (A, P) in zip(self.lambdas, self.terms):
            zeta = P.prox(lam, A.apply(x))
            zetas.append(zeta)
            agg = agg + A.adjoint(zeta) / lam
        return zetas, agg

    def step_grad(self, x):
        """Gradients for one prox step at x.

        Returns (d, gh) where d = grad h(x) - zeta_agg is the direction
        fed to the prox step and gh = grad h(x) is what Barzilai-Borwein
        curvature estimates difference.
        """
        x = np.asarray(x, dtype=float)
        d = np.asarray(self.f.grad(x), dtype=float).copy()
        gh = d.copy()
        for lam, (A, P) in zip(self.lambdas, self.terms):
            z = A.apply(x)
            zeta = P.prox(lam, z)
            d = d + A.adjoint(z - zeta) / lam
            gh = gh + A.adjoint(z) / lam
        return d, gh


def surrogate(problem: CompositeProblem, lambdas: Sequence[float]) -> SurrogateProblem:
    """Build the smoothed surrogate of a composite problem at given levels."""
    lambdas = [float(l) for l in lambdas]
    if len(lambdas) != len(problem.terms):
        raise ValueError("need one lambda per composite term")
    if any(l <= 0 for l in lambdas):
        raise ValueError("lambdas must be positive")
    f = problem.f
    terms = list(problem.terms)

    def h_value(x, _f=f, _terms=terms, _lams=lambdas):
        total = _f.value(x)
        for lam, (A, _P) in zip(_lams, _terms):
            z = A.apply(x)
            total += float(np.vdot(z, z).real) / (2.0 * lam)
        return float(total)

    def h_grad(x, _f=f, _terms=terms, _lams=lambdas):
        g = np.asarray(_f.grad(x), dtype=float).copy()
        for lam, (A, _P) in zip(_lams, _terms):
            g = g + A.adjoint(A.apply(x)) / lam
        return g

    lip = f.lipschitz + sum(A.norm_sq_bound / lam for lam, (A, _P) in zip(lambdas, terms))
    h = SmoothFn(value=h_value, grad=h_grad, lipschitz=lip)
    return SurrogateProblem(f=f, h=h, P=problem.P0, terms=terms, lambdas=lambdas)


def stationarity_residual(x_last, x_next, L_bar: float) -> float:
    """Certified bound on the distance from 0 to the stationarity set.

    One accepted prox step from x_last to x_next with final constant
    L_bar places -L_bar (x_next - x_last) in the subdifferential sum at
    (x_last, x_next), so L_bar * ||x_next - x_last|| bounds the residual.
    """
    return float(L_bar) * _flat_norm(np.asarray(x_next, dtype=float) - np.asarray(x_last, dtype=float))


def estimate_norm_sq(A: LinearOp, seed: int = 0, iters: int = 200, rtol: float = 1e-8) -> float:
    """Upper estimate of ||A||^2 by power iteration on A^T A.

    Runs at most ``iters`` rounds from a seeded Gaussian start, stops when
    the Rayleigh estimate changes by less than ``rtol`` relatively, and
    inflates the result by 1% so it can serve as a bound.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.in_shape)
    nv = _flat_norm(v)
    if nv == 0.0:
        return 1.01 * A.norm_sq_bound
    v = v / nv
    est = 0.0
    for _ in range(iters):
        w = A.adjoint(A.apply(v))
        new_est = float(np.vdot(v, w).real)
        nw = _flat_norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if est > 0 and abs(new_est - est) <= rtol * est:
            est = new_est
            break
        est = new_est
    return 1.01 * est
