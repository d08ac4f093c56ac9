"""Moreau envelopes of prox-friendly functions and their DC structure.

For a proper closed nonnegative P and lam > 0, the envelope

    e_lam(u) = inf_y  ||u - y||^2 / (2 lam) + P(y)

is real-valued even when P is an indicator of a nonconvex set, and it
always admits the difference-of-convex decomposition

    e_lam(u) = ||u||^2 / (2 lam) - D(u),
    D(u)     = sup_y [ <u, y>/lam - ||y||^2/(2 lam) - P(y) ],

with D convex and continuous.  A subgradient of D at u is
prox_{lam P}(u) / lam, which is what the smoothing solvers linearize.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prox import IndicatorSet, ProxFriendly

__all__ = ["MoreauTerm", "moreau_value", "dc_split", "concave_subgrad"]


def _sqnorm(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.vdot(x, x).real)


@dataclass(frozen=True)
class MoreauTerm:
    """One smoothed composite term: the envelope of P at level lam, after A."""

    P: ProxFriendly
    A: "object"
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")


def moreau_value(P: ProxFriendly, lam: float, u) -> float:
    """Envelope value e_lam(u).

    Evaluated through the prox: with zeta = prox_{lam P}(u),
    e_lam(u) = ||u - zeta||^2 / (2 lam) + P(zeta).  Indicators shortcut to
    squared set distance over 2 lam, which avoids a second projection and,
    for spectral sets, needs only singular values.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    u = np.asarray(u, dtype=float)
    if isinstance(P, IndicatorSet):
        return P.sq_dist(u) / (2.0 * lam)
    zeta = P.prox(lam, u)
    return _sqnorm(u - zeta) / (2.0 * lam) + P.value(zeta)


def dc_split(P: ProxFriendly, lam: float, u) -> tuple[float, float]:
    """Split the envelope as quadratic minus convex: returns (quad, concave).

    quad = ||u||^2 / (2 lam) and concave = quad - e_lam(u), so that
    e_lam(u) = quad - concave holds exactly by construction.
    """
    u = np.asarray(u, dtype=float)
    quad = _sqnorm(u) / (2.0 * lam)
    return quad, quad - moreau_value(P, lam, u)


def concave_subgrad(P: ProxFriendly, A, lam: float, x) -> np.ndarray:
    """A subgradient of x -> D(A x) where D is the convex part of the split.

    The chain rule for the composition gives A^T prox_{lam P}(A x) / lam.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    zeta = P.prox(lam, A.apply(x))
    return A.adjoint(zeta) / lam
