"""Nonmonotone proximal gradient descent for h + P - g surrogates.

Each iteration linearizes the concave part -g once, then searches a prox
stepsize L by backtracking until the nonmonotone sufficient-decrease test

    F(u) <= max(last M+1 accepted values) - (c/2) ||u - x||^2

holds, where F is the full surrogate objective.  Backtracking terminates:
once L exceeds the gradient Lipschitz constant of h plus c, the classical
descent lemma makes the test pass, so the number of stepsize increases is
bounded by n_tilde = max(ceil(log((L_h + c)/L_min)/log(tau)), 1).
Exceeding that bound by a margin signals a wrong Lipschitz constant or a
broken prox and raises.

Stepsizes are warm-started with a (optionally guarded) Barzilai-Borwein
curvature estimate along the last accepted step.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .model import SurrogateProblem

__all__ = ["NpgParams", "NpgResult", "NpgBacktrackError", "bb_init", "npg_step", "npg_run"]


class NpgBacktrackError(RuntimeError):
    """Backtracking ran past its provable bound: bad L_h or a prox bug."""


@dataclass
class NpgParams:
    """Line-search and termination knobs for the inner solver.

    eps_step is the default stationarity tolerance used when the caller
    does not pass one; eps_fval is the relative objective-stall exit.
    bb_guard switches the Barzilai-Borwein warm start to the guarded form
    that falls back to half the previous accepted constant when the
    curvature ratio is not safely positive.
    """

    L_min: float = 1e-8
    L_max: float = 1e8
    tau: float = 2.0
    c: float = 1e-4
    M: int = 4
    max_iter: int = 10000
    eps_step: float = 1e-6
    eps_fval: float = 1e-12
    init_L: float = 1.0
    bb_guard: bool = False
    bb_guard_floor: float = 1e-12

    def __post_init__(self):
        if not (0 < self.L_min <= self.L_max):
            raise ValueError("need 0 < L_min <= L_max")
        if self.tau <= 1:
            raise ValueError("tau must exceed 1")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.M < 0:
            raise ValueError("M must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.eps_step <= 0 or self.eps_fval < 0:
            raise ValueError("bad tolerances")

    def clamp(self, L: float) -> float:
        return min(max(L, self.L_min), self.L_max)

    def backtrack_cap(self, L_h: float) -> int:
        """Provable bound on stepsize increases per step (from L_min)."""
        n = math.ceil((math.log(L_h + self.c) - math.log(self.L_min)) / math.log(self.tau))
        return max(n, 1)


@dataclass
class NpgResult:
    x_last: np.ndarray
    x_next: np.ndarray
    L_bar_last: float
    iterations: int
    status: str
    objective_trace: list = field(default_factory=list)
    backtracks_total: int = 0
    F_last: float = np.nan


def bb_init(s, y, L_prev: float, params: NpgParams) -> float:
    """Barzilai-Borwein warm start for the next prox stepsize.

    Plain form clamps s'y / s's into [L_min, L_max] (a nonpositive ratio
    clamps to L_min).  The guarded form only trusts the ratio when
    s'y > bb_guard_floor and otherwise halves the previous accepted
    constant.  A zero step also falls back to the halving rule.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    ss = float(np.vdot(s, s).real)
    if ss == 0.0:
        return params.clamp(L_prev / 2.0)
    sy = float(np.vdot(s, y).real)
    if params.bb_guard and sy <= params.bb_guard_floor:
        return params.clamp(L_prev / 2.0)
    return params.clamp(sy / ss)


def npg_step(surr: SurrogateProblem, x, L0: float, history, params: NpgParams, grads=None):
    """One backtracked prox step from x.

    history holds the objective values of the last M+1 accepted iterates
    (including x itself).  grads may carry a precomputed
    (step direction, grad h) pair from SurrogateProblem.step_grad to avoid
    recomputing it.  Returns (u, L_bar, backtracks, F_u).
    """
    x = np.asarray(x, dtype=float)
    if grads is None:
        d, _gh = surr.step_grad(x)
    else:
        d, _gh = grads
    F_max = max(history)
    cap = params.backtrack_cap(surr.h.lipschitz) + 5
    L = params.clamp(L0)
    backtracks = 0
    while True:
        u = surr.P.prox(1.0 / L, x - d / L)
        F_u = surr.objective(u, p_value=surr.P.value_at_prox(u))
        diff = u - x
        if F_u <= F_max - 0.5 * params.c * float(np.vdot(diff, diff).real):
            return u, L, backtracks, F_u
        backtracks += 1
        if backtracks > cap:
            raise NpgBacktrackError(
                f"no acceptable stepsize after {backtracks} increases "
                f"(L reached {L:.3e}, declared smooth constant {surr.h.lipschitz:.3e})"
            )
        L *= params.tau


def _flat_norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x).ravel()))


def npg_run(
    surr: SurrogateProblem,
    x0,
    eps_t: float | None = None,
    params: NpgParams | None = None,
    trace=None,
) -> NpgResult:
    """Run the inner solver from x0 to the eps_t stationarity criterion.

    Iteration stops after an accepted step x -> u with constant L_bar once

        ||u - x|| / max(||u||, 1) < eps_t / L_bar          (step test)
        |F(u) - F(x)| / max(1, |F(u)|) < eps_fval          (stall test)

    or after max_iter accepted steps.  When given, ``trace`` is called as
    ``trace(iteration, objective, L_bar, step_norm)`` after every accepted
    step.

    Every accepted transition (x, u, L_bar) certifies the stationarity
    bound L_bar * ||u - x|| at x, so the result reports the accepted pair
    with the smallest max(L_bar * ||u - x||, ||u - x||) seen during the
    run: x_last and the extra prox step x_next taken from it.  Later
    iterates only refine the objective below resolution, so returning the
    best-certified pair loses nothing while making the reported residual
    meaningful on all exits, including max_iter.  Every accepted value
    satisfies the nonmonotone descent test, so F(x_last) never exceeds
    F(x0).
    """
    if params is None:
        params = NpgParams()
    eps = params.eps_step if eps_t is None else float(eps_t)
    if eps <= 0:
        raise ValueError("eps_t must be positive")

    x = np.asarray(x0, dtype=float).copy()
    F_x = surr.objective(x)
    history = deque([F_x], maxlen=params.M + 1)
    fvals = [F_x]
    grads = surr.step_grad(x)
    L0 = params.clamp(params.init_L)
    total_bt = 0

    # iterates are never mutated in place, so the snapshot holds references
    best_merit = math.inf
    best = None  # (x_last, x_next, L_bar, F at x_last)
    status = "max_iter"
    it = 0

    for it in range(1, params.max_iter + 1):
        u, L_bar, bt, F_u = npg_step(surr, x, L0, history, params, grads=grads)
        total_bt += bt
        history.append(F_u)
        fvals.append(F_u)

        step = _flat_norm(u - x)
        merit = max(L_bar * step, step)
        if merit < best_merit:
            best_merit, best = merit, (x, u, L_bar, F_x)
        if trace is not None:
            trace(it, F_u, L_bar, step)

        small_step = step / max(_flat_norm(u), 1.0) < eps / L_bar
        stalled = abs(F_u - F_x) / max(1.0, abs(F_u)) < params.eps_fval
        if small_step or stalled:
            status = "converged"
            break

        grads_u = surr.step_grad(u)
        L0 = bb_init(u - x, grads_u[1] - grads[1], L_bar, params)
        x, F_x, grads = u, F_u, grads_u

    x_last, x_next, L_bar, F_last = best
    return NpgResult(
        x_last=x_last,
        x_next=x_next,
        L_bar_last=L_bar,
        iterations=it,
        status=status,
        objective_trace=fvals,
        backtracks_total=total_bt,
        F_last=F_last,
    )
